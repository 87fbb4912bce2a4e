#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dctesim/topology.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

// How wildcard and host-delivery entries key the destination: by rack id
// (one IP subnet per rack) or by the rack prefix of the destination's label.
enum class MatchMode { Subnet, Label };

std::uint64_t wildcard_key(MatchMode mode, RackId rack);
std::uint64_t host_key(MatchMode mode, RackId rack, HostIndex host);

class RoutingError : public std::runtime_error {
 public:
  RoutingError(const std::string& what, NodeId sw, FlowId flow)
      : std::runtime_error(what), switch_(sw), flow_(flow) {}
  NodeId where() const { return switch_; }
  FlowId flow() const { return flow_; }

 private:
  NodeId switch_;
  FlowId flow_;
};

class RoutingBlackHole : public RoutingError {
 public:
  RoutingBlackHole(NodeId sw, FlowId flow)
      : RoutingError("no matching entry at " + to_string(sw) + " for flow " + std::to_string(flow), sw, flow) {}
};

class RoutingLoop : public RoutingError {
 public:
  RoutingLoop(NodeId sw, FlowId flow)
      : RoutingError("forwarding loop at " + to_string(sw) + " for flow " + std::to_string(flow), sw, flow) {}
};

struct ExactEntry {
  NodeId next_hop;
  double install_time = 0.0;
  double idle_timeout = 0.0;  // 0 = never expires
  // Engine bookkeeping for the byte counter and idle timer.
  double counted_bytes = 0.0;
  double attach_mark = 0.0;
  double idle_since = 0.0;
  bool attached = false;
  std::uint32_t generation = 0;
};

struct FlowHeader {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
};

// Per-switch rule sets. Exact-match entries take priority over wildcard
// entries; a wildcard whose next hop is the switch itself means "deliver
// locally" and defers to the host entries.
class FlowTables {
 public:
  FlowTables(const Topology& topology, MatchMode mode);

  const Topology& topology() const { return *topology_; }
  MatchMode mode() const { return mode_; }

  void set_wildcard(NodeId sw, RackId rack, NodeId next_hop);
  std::optional<NodeId> wildcard(NodeId sw, RackId rack) const;
  void set_host_entry(NodeId tor, HostIndex host);
  bool has_host_entry(NodeId tor, HostIndex host) const;

  ExactEntry* find_exact(NodeId sw, FlowId flow);
  const ExactEntry* find_exact(NodeId sw, FlowId flow) const;
  // Returns the entry and whether it was newly created.
  std::pair<ExactEntry*, bool> put_exact(NodeId sw, FlowId flow);
  bool erase_exact(NodeId sw, FlowId flow);
  const std::unordered_map<FlowId, ExactEntry>& exact_entries(NodeId sw) const;

  std::size_t wildcard_count(NodeId sw) const;
  std::size_t exact_count(NodeId sw) const;

  // Follows the rules hop by hop from the source ToR to the destination ToR.
  Path lookup(const FlowHeader& flow) const;

 private:
  struct SwitchTable {
    std::unordered_map<std::uint64_t, NodeId> wildcard;
    std::unordered_map<std::uint64_t, HostIndex> hosts;
    std::unordered_map<FlowId, ExactEntry> exact;
  };
  SwitchTable& table(NodeId sw);
  const SwitchTable& table(NodeId sw) const;

  const Topology* topology_;
  MatchMode mode_;
  std::vector<SwitchTable> tables_;
};

}  // namespace dctesim
