// Independent reference implementations used by the unit and acceptance
// tests. Deliberately simple and slow; none of them shares code with the
// library routines they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dctesim/static_routing.hpp"
#include "dctesim/topology.hpp"

namespace oracle {

using dctesim::LinkId;
using dctesim::NodeId;
using dctesim::NodeKind;
using dctesim::RackId;
using dctesim::Topology;

// Iterative water-filling: raise every unfrozen flow by the same amount
// until some link fills, freeze the flows on full links, repeat.
inline std::vector<double> waterfill(const std::vector<std::vector<LinkId>>& flows, const std::vector<double>& cap) {
  const std::size_t n = flows.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> frozen(n, false);
  std::vector<double> used(cap.size(), 0.0);
  std::size_t left = n;
  while (left > 0) {
    double step = INFINITY;
    for (std::size_t l = 0; l < cap.size(); ++l) {
      int k = 0;
      for (std::size_t f = 0; f < n; ++f) {
        if (!frozen[f] && std::count(flows[f].begin(), flows[f].end(), l)) ++k;
      }
      if (k > 0) step = std::min(step, (cap[l] - used[l]) / k);
    }
    step = std::max(step, 0.0);
    for (std::size_t f = 0; f < n; ++f) {
      if (frozen[f]) continue;
      rate[f] += step;
      for (LinkId l : flows[f]) used[l] += step;
    }
    for (std::size_t l = 0; l < cap.size(); ++l) {
      if (used[l] < cap[l] * (1 - 1e-13)) continue;
      for (std::size_t f = 0; f < n; ++f) {
        if (!frozen[f] && std::count(flows[f].begin(), flows[f].end(), l)) {
          frozen[f] = true;
          --left;
        }
      }
    }
  }
  return rate;
}

inline std::vector<NodeId> neighbours(const Topology& t, NodeId n) {
  std::vector<NodeId> out;
  for (const auto& l : t.links()) {
    if (l.from == n) out.push_back(l.to);
  }
  return out;
}

// All minimum-hop switch paths between two ToRs by BFS layering and
// exhaustive DFS, sorted lexicographically.
inline std::vector<std::vector<NodeId>> shortest_paths(const Topology& t, NodeId from, NodeId to) {
  if (from == to) return {};
  std::map<NodeId, int> dist{{from, 0}};
  std::deque<NodeId> q{from};
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (NodeId v : neighbours(t, u)) {
      if (v.kind == NodeKind::Host || dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      q.push_back(v);
    }
  }
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> cur{from};
  auto dfs = [&](auto&& self, NodeId u) -> void {
    if (u == to) {
      out.push_back(cur);
      return;
    }
    for (NodeId v : neighbours(t, u)) {
      auto it = dist.find(v);
      if (it == dist.end() || it->second != dist[u] + 1) continue;
      if (it->second > dist.at(to)) continue;
      cur.push_back(v);
      self(self, v);
      cur.pop_back();
    }
  };
  dfs(dfs, from);
  std::sort(out.begin(), out.end());
  return out;
}

// Tree checker for one destination rack: every entry points to an adjacent
// switch, following entries from any switch reaches the destination ToR
// without revisiting a node. Returns an error text or nothing.
inline std::optional<std::string> check_tree(const Topology& t, const dctesim::ForwardingTreeSet& trees, RackId rack) {
  const NodeId root = t.tor_of_rack(rack);
  auto hop = trees.next_hop(rack, root);
  if (!hop || *hop != root) return "destination ToR lacks its local entry";
  for (std::uint32_t d = t.host_count(); d < t.node_count(); ++d) {
    const NodeId start = t.node(d);
    if (!trees.next_hop(rack, start)) continue;
    std::set<NodeId> seen;
    NodeId cur = start;
    while (cur != root) {
      if (!seen.insert(cur).second) return "cycle through " + dctesim::to_string(cur);
      auto next = trees.next_hop(rack, cur);
      if (!next) return "dead end at " + dctesim::to_string(cur);
      const auto nb = neighbours(t, cur);
      if (std::find(nb.begin(), nb.end(), *next) == nb.end()) {
        return dctesim::to_string(cur) + " points at non-neighbour " + dctesim::to_string(*next);
      }
      cur = *next;
    }
  }
  return std::nullopt;
}

}  // namespace oracle
