#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dctesim {

enum class NodeKind : std::uint8_t { Host, ToR, PodSwitch, CoreSwitch };

struct NodeId {
  NodeKind kind = NodeKind::Host;
  std::uint32_t index = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

constexpr NodeId host_node(std::uint32_t i) { return {NodeKind::Host, i}; }
constexpr NodeId tor_node(std::uint32_t i) { return {NodeKind::ToR, i}; }
constexpr NodeId pod_switch_node(std::uint32_t i) { return {NodeKind::PodSwitch, i}; }
constexpr NodeId core_node(std::uint32_t i) { return {NodeKind::CoreSwitch, i}; }

// "host12", "tor3", "pod1", "core0"
std::string to_string(NodeId node);
std::optional<NodeId> parse_node(std::string_view text);

using LinkId = std::uint32_t;
using RackId = std::uint32_t;
using HostIndex = std::uint32_t;

// One direction of a full-duplex cable.
struct Link {
  NodeId from;
  NodeId to;
  double capacity_bps = 0.0;
};

// ToR-to-ToR route; host hops at both ends are implied.
struct Path {
  std::vector<NodeId> nodes;
  std::vector<LinkId> links;

  friend bool operator==(const Path&, const Path&) = default;
};

struct ClosParams {
  std::uint32_t pods = 1;
  std::uint32_t racks_per_pod = 1;
  std::uint32_t hosts_per_rack = 1;
  std::uint32_t pod_switches_per_pod = 2;
  std::uint32_t core_switches = 2;
  double host_link_bps = 10e9;
  double fabric_link_bps = 10e9;
};

struct Rack {
  NodeId tor;
  std::uint32_t pod = 0;
  std::vector<HostIndex> hosts;
};

struct Pod {
  std::vector<NodeId> switches;
  std::vector<RackId> racks;
};

// Three-layer Clos fabric: hosts - ToR - pod switches - core switches.
// Immutable after construction; copies share the path cache.
class Topology {
 public:
  static Topology build_clos(const ClosParams& params);

  const ClosParams& params() const { return params_; }

  std::uint32_t count(NodeKind kind) const;
  std::uint32_t host_count() const { return count(NodeKind::Host); }
  std::uint32_t rack_count() const { return static_cast<std::uint32_t>(racks_.size()); }
  std::uint32_t hosts_per_rack() const { return params_.hosts_per_rack; }
  std::uint32_t node_count() const { return static_cast<std::uint32_t>(nodes_.size()); }

  // Dense numbering: hosts, then ToRs, pod switches, core switches.
  std::uint32_t dense(NodeId node) const;
  NodeId node(std::uint32_t dense_index) const { return nodes_.at(dense_index); }
  bool contains(NodeId node) const { return node.index < count(node.kind); }
  bool is_switch(NodeId node) const { return node.kind != NodeKind::Host; }

  std::span<const Link> links() const { return links_; }
  const Link& link(LinkId id) const { return links_.at(id); }
  std::optional<LinkId> find_link(NodeId from, NodeId to) const;
  LinkId link_between(NodeId from, NodeId to) const;
  std::span<const LinkId> out_links(NodeId node) const { return out_links_[dense(node)]; }
  bool is_fabric_link(LinkId id) const;

  std::span<const Rack> racks() const { return racks_; }
  std::span<const Pod> pods() const { return pods_; }
  NodeId tor_of_rack(RackId rack) const { return racks_.at(rack).tor; }
  RackId rack_of_host(HostIndex host) const { return rack_of_host_.at(host); }
  RackId rack_of_tor(NodeId tor) const;
  std::uint32_t pod_of_rack(RackId rack) const { return racks_.at(rack).pod; }

  LinkId host_uplink(HostIndex host) const { return host_up_.at(host); }
  LinkId host_downlink(HostIndex host) const { return host_down_.at(host); }
  double nic_capacity(HostIndex host) const { return links_[host_up_.at(host)].capacity_bps; }

  // All minimum-hop paths from the ToR of `from` to the ToR of `to`,
  // ordered lexicographically by node. Empty when from == to.
  const std::vector<Path>& shortest_paths(RackId from, RackId to) const;

  // Copy with every switch-to-switch capacity divided by `divisor`.
  Topology with_fabric_scaled(double divisor) const;

  // "<node> <node> <capacity_bps>" per directed link.
  void dump_links(std::ostream& out) const;

 private:
  Topology() = default;
  void add_cable(NodeId a, NodeId b, double capacity);
  void compute_paths();

  ClosParams params_;
  std::vector<NodeId> nodes_;
  std::uint32_t first_tor_ = 0;
  std::uint32_t first_pod_ = 0;
  std::uint32_t first_core_ = 0;
  std::vector<Link> links_;
  std::vector<std::vector<LinkId>> out_links_;
  std::vector<Rack> racks_;
  std::vector<Pod> pods_;
  std::vector<RackId> rack_of_host_;
  std::vector<LinkId> host_up_;
  std::vector<LinkId> host_down_;
  std::shared_ptr<const std::vector<std::vector<Path>>> paths_;
};

std::string path_to_string(const Path& path);

}  // namespace dctesim
