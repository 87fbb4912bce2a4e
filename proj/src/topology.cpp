#include "dctesim/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dctesim {

namespace {

constexpr std::string_view kind_prefix(NodeKind kind) {
  switch (kind) {
    case NodeKind::Host: return "host";
    case NodeKind::ToR: return "tor";
    case NodeKind::PodSwitch: return "pod";
    case NodeKind::CoreSwitch: return "core";
  }
  return "?";
}

}  // namespace

std::string to_string(NodeId node) {
  std::string s(kind_prefix(node.kind));
  s += std::to_string(node.index);
  return s;
}

std::optional<NodeId> parse_node(std::string_view text) {
  for (auto kind : {NodeKind::Host, NodeKind::ToR, NodeKind::PodSwitch, NodeKind::CoreSwitch}) {
    auto prefix = kind_prefix(kind);
    if (text.size() > prefix.size() && text.substr(0, prefix.size()) == prefix) {
      std::uint32_t index = 0;
      auto digits = text.substr(prefix.size());
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (ec == std::errc{} && ptr == digits.data() + digits.size()) return NodeId{kind, index};
    }
  }
  return std::nullopt;
}

std::string path_to_string(const Path& path) {
  std::string s;
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    if (i) s += '>';
    s += to_string(path.nodes[i]);
  }
  return s;
}

Topology Topology::build_clos(const ClosParams& p) {
  if (p.pods == 0 || p.racks_per_pod == 0 || p.hosts_per_rack == 0 || p.pod_switches_per_pod == 0 ||
      p.core_switches == 0) {
    throw std::invalid_argument("build_clos: all counts must be >= 1");
  }
  if (!(p.host_link_bps > 0.0) || !(p.fabric_link_bps > 0.0)) {
    throw std::invalid_argument("build_clos: link capacities must be positive");
  }

  Topology t;
  t.params_ = p;
  const std::uint32_t racks = p.pods * p.racks_per_pod;
  const std::uint32_t hosts = racks * p.hosts_per_rack;
  const std::uint32_t pod_switches = p.pods * p.pod_switches_per_pod;

  t.first_tor_ = hosts;
  t.first_pod_ = hosts + racks;
  t.first_core_ = hosts + racks + pod_switches;
  t.nodes_.reserve(t.first_core_ + p.core_switches);
  for (std::uint32_t i = 0; i < hosts; ++i) t.nodes_.push_back(host_node(i));
  for (std::uint32_t i = 0; i < racks; ++i) t.nodes_.push_back(tor_node(i));
  for (std::uint32_t i = 0; i < pod_switches; ++i) t.nodes_.push_back(pod_switch_node(i));
  for (std::uint32_t i = 0; i < p.core_switches; ++i) t.nodes_.push_back(core_node(i));
  t.out_links_.resize(t.nodes_.size());

  t.host_up_.resize(hosts);
  t.host_down_.resize(hosts);
  t.rack_of_host_.resize(hosts);

  t.pods_.resize(p.pods);
  for (std::uint32_t pod = 0; pod < p.pods; ++pod) {
    for (std::uint32_t k = 0; k < p.pod_switches_per_pod; ++k) {
      t.pods_[pod].switches.push_back(pod_switch_node(pod * p.pod_switches_per_pod + k));
    }
  }

  for (RackId r = 0; r < racks; ++r) {
    Rack rack;
    rack.tor = tor_node(r);
    rack.pod = r / p.racks_per_pod;
    for (std::uint32_t h = 0; h < p.hosts_per_rack; ++h) {
      const HostIndex host = r * p.hosts_per_rack + h;
      rack.hosts.push_back(host);
      t.rack_of_host_[host] = r;
      t.host_up_[host] = static_cast<LinkId>(t.links_.size());
      t.host_down_[host] = static_cast<LinkId>(t.links_.size() + 1);
      t.add_cable(host_node(host), rack.tor, p.host_link_bps);
    }
    t.pods_[rack.pod].racks.push_back(r);
    t.racks_.push_back(std::move(rack));
  }

  for (RackId r = 0; r < racks; ++r) {
    for (NodeId sw : t.pods_[t.racks_[r].pod].switches) t.add_cable(t.racks_[r].tor, sw, p.fabric_link_bps);
  }
  for (std::uint32_t ps = 0; ps < pod_switches; ++ps) {
    for (std::uint32_t c = 0; c < p.core_switches; ++c) {
      t.add_cable(pod_switch_node(ps), core_node(c), p.fabric_link_bps);
    }
  }

  for (auto& out : t.out_links_) {
    std::sort(out.begin(), out.end(), [&](LinkId a, LinkId b) {
      return t.dense(t.links_[a].to) < t.dense(t.links_[b].to);
    });
  }
  t.compute_paths();
  return t;
}

void Topology::add_cable(NodeId a, NodeId b, double capacity) {
  const auto ab = static_cast<LinkId>(links_.size());
  links_.push_back({a, b, capacity});
  links_.push_back({b, a, capacity});
  out_links_[dense(a)].push_back(ab);
  out_links_[dense(b)].push_back(ab + 1);
}

std::uint32_t Topology::count(NodeKind kind) const {
  switch (kind) {
    case NodeKind::Host: return first_tor_;
    case NodeKind::ToR: return first_pod_ - first_tor_;
    case NodeKind::PodSwitch: return first_core_ - first_pod_;
    case NodeKind::CoreSwitch: return static_cast<std::uint32_t>(nodes_.size()) - first_core_;
  }
  return 0;
}

std::uint32_t Topology::dense(NodeId node) const {
  if (!contains(node)) throw std::out_of_range("unknown node " + to_string(node));
  switch (node.kind) {
    case NodeKind::Host: return node.index;
    case NodeKind::ToR: return first_tor_ + node.index;
    case NodeKind::PodSwitch: return first_pod_ + node.index;
    case NodeKind::CoreSwitch: return first_core_ + node.index;
  }
  return 0;
}

std::optional<LinkId> Topology::find_link(NodeId from, NodeId to) const {
  if (!contains(from) || !contains(to)) return std::nullopt;
  for (LinkId id : out_links_[dense(from)]) {
    if (links_[id].to == to) return id;
  }
  return std::nullopt;
}

LinkId Topology::link_between(NodeId from, NodeId to) const {
  if (auto id = find_link(from, to)) return *id;
  throw std::out_of_range("no link " + to_string(from) + " -> " + to_string(to));
}

bool Topology::is_fabric_link(LinkId id) const {
  const Link& l = links_.at(id);
  return l.from.kind != NodeKind::Host && l.to.kind != NodeKind::Host;
}

RackId Topology::rack_of_tor(NodeId tor) const {
  if (tor.kind != NodeKind::ToR || !contains(tor)) throw std::out_of_range("not a ToR: " + to_string(tor));
  return tor.index;
}

const std::vector<Path>& Topology::shortest_paths(RackId from, RackId to) const {
  const auto racks = rack_count();
  if (from >= racks || to >= racks) throw std::out_of_range("shortest_paths: invalid rack id");
  return (*paths_)[static_cast<std::size_t>(from) * racks + to];
}

// Switch-only BFS from every destination ToR, then enumerate all routes that
// step strictly closer to it. Hosts are leaves and never transit.
void Topology::compute_paths() {
  const std::uint32_t racks = rack_count();
  const std::uint32_t n = node_count();
  auto table = std::make_shared<std::vector<std::vector<Path>>>(static_cast<std::size_t>(racks) * racks);
  constexpr std::uint32_t unreached = std::numeric_limits<std::uint32_t>::max();

  std::vector<std::uint32_t> dist(n);
  std::vector<std::uint32_t> queue;
  for (RackId dst = 0; dst < racks; ++dst) {
    std::fill(dist.begin(), dist.end(), unreached);
    queue.clear();
    const std::uint32_t target = dense(racks_[dst].tor);
    dist[target] = 0;
    queue.push_back(target);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::uint32_t u = queue[head];
      for (LinkId id : out_links_[u]) {
        const NodeId v = links_[id].to;
        if (v.kind == NodeKind::Host) continue;
        const std::uint32_t dv = dense(v);
        if (dist[dv] == unreached) {
          dist[dv] = dist[u] + 1;
          queue.push_back(dv);
        }
      }
    }

    for (RackId src = 0; src < racks; ++src) {
      if (src == dst) continue;
      auto& out = (*table)[static_cast<std::size_t>(src) * racks + dst];
      Path current;
      current.nodes.push_back(racks_[src].tor);
      // Out-links are sorted by neighbour, so depth-first emission is already
      // in lexicographic order.
      auto extend = [&](auto&& self, std::uint32_t u) -> void {
        if (u == target) {
          out.push_back(current);
          return;
        }
        for (LinkId id : out_links_[u]) {
          const NodeId v = links_[id].to;
          if (v.kind == NodeKind::Host) continue;
          const std::uint32_t dv = dense(v);
          if (dist[dv] + 1 != dist[u]) continue;
          current.nodes.push_back(v);
          current.links.push_back(id);
          self(self, dv);
          current.nodes.pop_back();
          current.links.pop_back();
        }
      };
      if (dist[dense(racks_[src].tor)] != unreached) extend(extend, dense(racks_[src].tor));
    }
  }
  paths_ = std::move(table);
}

Topology Topology::with_fabric_scaled(double divisor) const {
  if (!(divisor > 0.0)) throw std::invalid_argument("fabric scale divisor must be positive");
  Topology t = *this;
  for (LinkId id = 0; id < t.links_.size(); ++id) {
    if (t.is_fabric_link(id)) t.links_[id].capacity_bps /= divisor;
  }
  t.params_.fabric_link_bps /= divisor;
  return t;
}

void Topology::dump_links(std::ostream& out) const {
  char buf[64];
  for (const Link& l : links_) {
    std::snprintf(buf, sizeof buf, "%.17g", l.capacity_bps);
    out << to_string(l.from) << ' ' << to_string(l.to) << ' ' << buf << '\n';
  }
}

}  // namespace dctesim
