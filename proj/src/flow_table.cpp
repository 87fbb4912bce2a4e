#include "dctesim/flow_table.hpp"

#include <algorithm>

#include "dctesim/labels.hpp"

namespace dctesim {

std::uint64_t wildcard_key(MatchMode mode, RackId rack) {
  return mode == MatchMode::Subnet ? rack : rack_prefix(encode_label(rack, 0));
}

std::uint64_t host_key(MatchMode mode, RackId rack, HostIndex host) {
  return mode == MatchMode::Subnet ? host : encode_label(rack, host);
}

FlowTables::FlowTables(const Topology& topology, MatchMode mode)
    : topology_(&topology), mode_(mode), tables_(topology.node_count() - topology.host_count()) {}

FlowTables::SwitchTable& FlowTables::table(NodeId sw) {
  if (sw.kind == NodeKind::Host) throw std::invalid_argument("flow table requested for host " + to_string(sw));
  return tables_[topology_->dense(sw) - topology_->host_count()];
}

const FlowTables::SwitchTable& FlowTables::table(NodeId sw) const {
  if (sw.kind == NodeKind::Host) throw std::invalid_argument("flow table requested for host " + to_string(sw));
  return tables_[topology_->dense(sw) - topology_->host_count()];
}

void FlowTables::set_wildcard(NodeId sw, RackId rack, NodeId next_hop) {
  if (rack >= topology_->rack_count()) throw std::out_of_range("set_wildcard: unknown rack");
  if (next_hop != sw && !topology_->find_link(sw, next_hop)) {
    throw std::invalid_argument("set_wildcard: " + to_string(next_hop) + " is not adjacent to " + to_string(sw));
  }
  table(sw).wildcard[wildcard_key(mode_, rack)] = next_hop;
}

std::optional<NodeId> FlowTables::wildcard(NodeId sw, RackId rack) const {
  const auto& t = table(sw).wildcard;
  auto it = t.find(wildcard_key(mode_, rack));
  if (it == t.end()) return std::nullopt;
  return it->second;
}

void FlowTables::set_host_entry(NodeId tor, HostIndex host) {
  if (tor.kind != NodeKind::ToR || topology_->rack_of_host(host) != tor.index) {
    throw std::invalid_argument("set_host_entry: host " + std::to_string(host) + " is not behind " + to_string(tor));
  }
  table(tor).hosts[host_key(mode_, tor.index, host)] = host;
}

bool FlowTables::has_host_entry(NodeId tor, HostIndex host) const {
  return table(tor).hosts.count(host_key(mode_, topology_->rack_of_host(host), host)) > 0;
}

ExactEntry* FlowTables::find_exact(NodeId sw, FlowId flow) {
  auto& t = table(sw).exact;
  auto it = t.find(flow);
  return it == t.end() ? nullptr : &it->second;
}

const ExactEntry* FlowTables::find_exact(NodeId sw, FlowId flow) const {
  const auto& t = table(sw).exact;
  auto it = t.find(flow);
  return it == t.end() ? nullptr : &it->second;
}

std::pair<ExactEntry*, bool> FlowTables::put_exact(NodeId sw, FlowId flow) {
  auto [it, inserted] = table(sw).exact.try_emplace(flow);
  return {&it->second, inserted};
}

bool FlowTables::erase_exact(NodeId sw, FlowId flow) { return table(sw).exact.erase(flow) > 0; }

const std::unordered_map<FlowId, ExactEntry>& FlowTables::exact_entries(NodeId sw) const {
  return table(sw).exact;
}

std::size_t FlowTables::wildcard_count(NodeId sw) const {
  const auto& t = table(sw);
  return t.wildcard.size() + t.hosts.size();
}

std::size_t FlowTables::exact_count(NodeId sw) const { return table(sw).exact.size(); }

Path FlowTables::lookup(const FlowHeader& flow) const {
  const Topology& topo = *topology_;
  const RackId dst_rack = topo.rack_of_host(flow.dst_host);
  const NodeId dst_tor = topo.tor_of_rack(dst_rack);
  const std::uint64_t wkey = wildcard_key(mode_, dst_rack);
  const std::uint64_t hkey = host_key(mode_, dst_rack, flow.dst_host);

  Path path;
  NodeId at = topo.tor_of_rack(topo.rack_of_host(flow.src_host));
  path.nodes.push_back(at);
  for (;;) {
    const SwitchTable& t = table(at);
    NodeId next;
    if (auto e = t.exact.find(flow.flow_id); e != t.exact.end()) {
      next = e->second.next_hop;
    } else {
      auto w = t.wildcard.find(wkey);
      if (w == t.wildcard.end()) throw RoutingBlackHole(at, flow.flow_id);
      next = w->second;
      if (next == at) {
        auto h = t.hosts.find(hkey);
        if (h == t.hosts.end()) throw RoutingBlackHole(at, flow.flow_id);
        next = host_node(h->second);
      }
    }

    if (next.kind == NodeKind::Host) {
      if (next != host_node(flow.dst_host) || at != dst_tor) throw RoutingBlackHole(at, flow.flow_id);
      return path;
    }
    auto link = topo.find_link(at, next);
    if (!link) throw RoutingBlackHole(at, flow.flow_id);
    if (std::find(path.nodes.begin(), path.nodes.end(), next) != path.nodes.end()) {
      throw RoutingLoop(next, flow.flow_id);
    }
    path.nodes.push_back(next);
    path.links.push_back(*link);
    at = next;
  }
}

}  // namespace dctesim
