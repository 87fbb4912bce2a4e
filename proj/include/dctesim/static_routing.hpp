#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dctesim/control.hpp"
#include "dctesim/flow_table.hpp"
#include "dctesim/topology.hpp"

namespace dctesim {

struct StaticRoutingOptions {
  std::uint64_t seed = 1;
  // After the random pair paths are laid, point every switch that still has
  // no entry for a destination at a random downhill neighbour.
  bool fill_unreached = true;
};

// One wildcard forwarding tree per destination rack, oriented toward its ToR.
class ForwardingTreeSet {
 public:
  ForwardingTreeSet() = default;
  ForwardingTreeSet(const Topology& topology, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint32_t rack_count() const { return racks_; }
  std::uint32_t switch_count() const { return switches_; }

  // Next hop toward `rack` at `sw`. The destination ToR maps to itself.
  std::optional<NodeId> next_hop(RackId rack, NodeId sw) const;
  void set_next_hop(RackId rack, NodeId sw, NodeId next);

  // Wildcard entries for all racks at `sw`, including the own-rack entry at a ToR.
  std::size_t rack_entries(NodeId sw) const;

  // Applies the trees plus one host-delivery entry per host at its ToR.
  void install(SwitchAccess& access) const;
  void install(FlowTables& tables) const;

  // "switch,match,next_hop" per wildcard entry, then per host entry.
  void dump(std::ostream& out) const;

 private:
  std::uint32_t slot(NodeId sw) const;

  const Topology* topology_ = nullptr;
  std::uint64_t seed_ = 0;
  std::uint32_t racks_ = 0;
  std::uint32_t switches_ = 0;
  std::vector<std::int32_t> next_;  // [rack * switches + slot] -> dense node id, -1 if none
};

ForwardingTreeSet install_static_routes(const Topology& topology, const StaticRoutingOptions& options = {});

}  // namespace dctesim
