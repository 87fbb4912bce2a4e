#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dctesim/topology.hpp"

namespace dctesim {

// 48-bit pseudo-MAC: one flag octet (locally administered, unicast), a 20-bit
// rack id, then a 20-bit host id.
using MacLabel = std::uint64_t;

inline constexpr unsigned kLabelIdBits = 20;
inline constexpr std::uint64_t kLabelIdLimit = std::uint64_t{1} << kLabelIdBits;
inline constexpr std::uint64_t kLabelFlagOctet = 0x02;
inline constexpr MacLabel kLabelRackMask = 0xFFFFFFF00000ULL;

MacLabel encode_label(std::uint32_t rack_id, std::uint32_t host_id);
std::pair<std::uint32_t, std::uint32_t> decode_label(MacLabel label);

constexpr MacLabel rack_prefix(MacLabel label) { return label & kLabelRackMask; }
constexpr bool is_locally_administered(MacLabel label) { return (label >> 40) & 0x02; }
constexpr bool is_unicast(MacLabel label) { return ((label >> 40) & 0x01) == 0; }

// "02:00:00:30:00:0c"
std::string format_mac(MacLabel label);

struct RemapRule {
  NodeId tor;
  MacLabel old_label = 0;
  HostIndex host = 0;
  double last_used = 0.0;
};

// Controller-side view of where every host lives and which label it answers
// ARP requests with.
class HostDirectory {
 public:
  HostDirectory(const Topology& topology, double remap_idle_timeout_s);

  MacLabel arp_resolve(HostIndex host) const;
  RackId current_rack(HostIndex host) const;
  MacLabel real_mac(HostIndex host) const;

  // Returns the remap installed at the new ToR, or nothing when the host
  // already lives in new_rack.
  std::optional<RemapRule> migrate_host(HostIndex host, RackId new_rack, double now);

  // Rewrites an old label arriving at `tor`; refreshes the rule's idle timer.
  std::optional<HostIndex> lookup_remap(NodeId tor, MacLabel label, double now);

  void collect_garbage(double now);
  std::size_t pending_remaps() const { return remaps_.size(); }
  std::vector<RemapRule> remaps() const;

  // "<host> <rack> <label>" per host, then "remap <tor> <old_label> <host>".
  void dump(std::ostream& out) const;

 private:
  struct Entry {
    RackId rack;
    MacLabel label;
  };
  const Topology* topology_;
  double idle_timeout_;
  std::vector<Entry> hosts_;
  std::map<std::pair<std::uint32_t, MacLabel>, RemapRule> remaps_;  // (tor index, old label)
};

}  // namespace dctesim
