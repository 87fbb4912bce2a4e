#include "dctesim/static_routing.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dctesim/random.hpp"

namespace dctesim {

ForwardingTreeSet::ForwardingTreeSet(const Topology& topology, std::uint64_t seed)
    : topology_(&topology),
      seed_(seed),
      racks_(topology.rack_count()),
      switches_(topology.node_count() - topology.host_count()),
      next_(static_cast<std::size_t>(racks_) * switches_, -1) {}

std::uint32_t ForwardingTreeSet::slot(NodeId sw) const {
  if (sw.kind == NodeKind::Host) throw std::invalid_argument("forwarding trees hold switches only");
  return topology_->dense(sw) - topology_->host_count();
}

std::optional<NodeId> ForwardingTreeSet::next_hop(RackId rack, NodeId sw) const {
  if (rack >= racks_) throw std::out_of_range("next_hop: unknown rack");
  const std::int32_t n = next_[static_cast<std::size_t>(rack) * switches_ + slot(sw)];
  if (n < 0) return std::nullopt;
  return topology_->node(static_cast<std::uint32_t>(n));
}

void ForwardingTreeSet::set_next_hop(RackId rack, NodeId sw, NodeId next) {
  if (rack >= racks_) throw std::out_of_range("set_next_hop: unknown rack");
  next_[static_cast<std::size_t>(rack) * switches_ + slot(sw)] = static_cast<std::int32_t>(topology_->dense(next));
}

std::size_t ForwardingTreeSet::rack_entries(NodeId sw) const {
  const std::uint32_t s = slot(sw);
  std::size_t n = 0;
  for (RackId r = 0; r < racks_; ++r) n += next_[static_cast<std::size_t>(r) * switches_ + s] >= 0;
  return n;
}

void ForwardingTreeSet::install(SwitchAccess& access) const {
  for (RackId r = 0; r < racks_; ++r) {
    for (std::uint32_t s = 0; s < switches_; ++s) {
      const std::int32_t n = next_[static_cast<std::size_t>(r) * switches_ + s];
      if (n >= 0) {
        access.install_wildcard(topology_->node(s + topology_->host_count()), r,
                                topology_->node(static_cast<std::uint32_t>(n)));
      }
    }
  }
  for (const Rack& rack : topology_->racks()) {
    for (HostIndex h : rack.hosts) access.install_host_entry(rack.tor, h);
  }
}

void ForwardingTreeSet::install(FlowTables& tables) const {
  for (RackId r = 0; r < racks_; ++r) {
    for (std::uint32_t s = 0; s < switches_; ++s) {
      const std::int32_t n = next_[static_cast<std::size_t>(r) * switches_ + s];
      if (n >= 0) {
        tables.set_wildcard(topology_->node(s + topology_->host_count()), r,
                            topology_->node(static_cast<std::uint32_t>(n)));
      }
    }
  }
  for (const Rack& rack : topology_->racks()) {
    for (HostIndex h : rack.hosts) tables.set_host_entry(rack.tor, h);
  }
}

void ForwardingTreeSet::dump(std::ostream& out) const {
  for (std::uint32_t s = 0; s < switches_; ++s) {
    const NodeId sw = topology_->node(s + topology_->host_count());
    for (RackId r = 0; r < racks_; ++r) {
      const std::int32_t n = next_[static_cast<std::size_t>(r) * switches_ + s];
      if (n < 0) continue;
      const NodeId next = topology_->node(static_cast<std::uint32_t>(n));
      out << to_string(sw) << ",rack" << r << ',' << (next == sw ? std::string("local") : to_string(next)) << '\n';
    }
    if (sw.kind == NodeKind::ToR) {
      for (HostIndex h : topology_->racks()[sw.index].hosts) {
        out << to_string(sw) << ",host" << h << ',' << to_string(host_node(h)) << '\n';
      }
    }
  }
}

ForwardingTreeSet install_static_routes(const Topology& topology, const StaticRoutingOptions& options) {
  ForwardingTreeSet trees(topology, options.seed);
  Rng rng(options.seed);
  const std::uint32_t racks = topology.rack_count();
  const std::uint32_t first_switch = topology.host_count();
  const std::uint32_t n_nodes = topology.node_count();
  constexpr std::uint32_t unreached = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> dist(n_nodes);
  std::vector<std::uint32_t> order;

  for (RackId i = 0; i < racks; ++i) {
    const NodeId dst_tor = topology.tor_of_rack(i);
    trees.set_next_hop(i, dst_tor, dst_tor);
    for (RackId j = 0; j < racks; ++j) {
      if (j == i) continue;
      const auto& candidates = topology.shortest_paths(j, i);
      if (candidates.empty()) continue;
      const Path& p = candidates[rng.below(candidates.size())];
      for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
        if (!trees.next_hop(i, p.nodes[k])) trees.set_next_hop(i, p.nodes[k], p.nodes[k + 1]);
      }
    }
    if (!options.fill_unreached) continue;

    std::fill(dist.begin(), dist.end(), unreached);
    order.clear();
    const std::uint32_t target = topology.dense(dst_tor);
    dist[target] = 0;
    order.push_back(target);
    for (std::size_t head = 0; head < order.size(); ++head) {
      const NodeId u = topology.node(order[head]);
      for (LinkId l : topology.out_links(u)) {
        const NodeId v = topology.link(l).to;
        if (v.kind == NodeKind::Host) continue;
        const std::uint32_t dv = topology.dense(v);
        if (dist[dv] == unreached) {
          dist[dv] = dist[order[head]] + 1;
          order.push_back(dv);
        }
      }
    }
    // BFS order is nondecreasing in distance, so downhill neighbours are
    // settled before they are needed.
    std::vector<NodeId> downhill;
    for (std::uint32_t d : order) {
      const NodeId sw = topology.node(d);
      if (d < first_switch || trees.next_hop(i, sw)) continue;
      downhill.clear();
      for (LinkId l : topology.out_links(sw)) {
        const NodeId v = topology.link(l).to;
        if (v.kind != NodeKind::Host && dist[topology.dense(v)] + 1 == dist[d]) downhill.push_back(v);
      }
      if (!downhill.empty()) trees.set_next_hop(i, sw, downhill[rng.below(downhill.size())]);
    }
  }
  return trees;
}

}  // namespace dctesim
