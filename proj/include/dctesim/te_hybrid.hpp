#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dctesim/control.hpp"
#include "dctesim/static_routing.hpp"
#include "dctesim/topology.hpp"

namespace dctesim {

// ---- shared traffic-engineering steps (also used by the Hedera baseline) ----

struct ElephantEndpoints {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
};

// Max-min fair rates with host NICs as the only constraints.
std::vector<double> estimate_natural_demands(const Topology& topology, std::span<const ElephantEndpoints> elephants);

struct FlowCounter {
  FlowId flow_id = 0;
  double bytes = 0.0;
  double install_time = 0.0;
};

// Turns successive counter snapshots into average rates over the window
// between two polls.
class WindowMeter {
 public:
  // Returns false on the first call, which only records a baseline.
  bool poll(std::span<const double> port_counters, std::span<const FlowCounter> flows, double now);

  double window_s() const { return window_; }
  const std::vector<double>& link_rates() const { return link_rates_; }
  // Rate of a flow counter over the last window; 0 for unknown flows.
  double flow_rate(FlowId flow) const;

 private:
  bool primed_ = false;
  double last_time_ = 0.0;
  double window_ = 0.0;
  std::vector<double> last_ports_;
  std::vector<double> link_rates_;
  std::unordered_map<FlowId, double> last_flow_bytes_;
  std::unordered_map<FlowId, double> flow_rates_;
};

struct MeasuredElephant {
  FlowId flow_id = 0;
  std::vector<LinkId> links;  // every directed link the flow currently crosses
  double rate = 0.0;
};

// Link rate minus the measured rates of elephants routed across it, floored at 0.
std::vector<double> background_rates(std::span<const double> link_rates, std::span<const MeasuredElephant> elephants);

struct Measurement {
  double window_s = 0.0;
  std::vector<double> link_rates;
  std::map<FlowId, double> elephant_rates;
  std::vector<double> background;
};

struct TrackedRoute {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
  Path path;
};

// One counter poll: link and elephant rates over the window and the
// background left after removing the elephants. Nothing on the first call.
std::optional<Measurement> poll_and_measure(WindowMeter& meter, const Topology& topology,
                                            std::span<const double> port_counters,
                                            std::span<const FlowCounter> elephant_counters,
                                            std::span<const TrackedRoute> routes, double now);

// Index of the candidate whose most loaded link is least loaded; the first
// such candidate wins ties.
std::size_t least_loaded_path(const std::vector<Path>& candidates, std::span<const double> link_load);

struct GffElephant {
  FlowId flow_id = 0;
  RackId src_rack = 0;
  RackId dst_rack = 0;
  double demand = 0.0;
  Path current;
};

struct GffAssignment {
  FlowId flow_id = 0;
  Path path;
  double demand = 0.0;
  bool moved = false;
  bool reserved = false;  // false when no candidate had room
};

struct GffOutcome {
  std::vector<GffAssignment> assignments;  // in processing order
  std::vector<double> reserved;            // per LinkId
};

// Global First Fit: elephants by descending demand (ties by flow id), each
// onto the first candidate with room on every link, trying its current path
// before the others in lexicographic order.
GffOutcome global_first_fit(const Topology& topology, std::vector<GffElephant> elephants,
                            std::span<const double> background);

// Links where background plus reserved demand exceeds capacity.
std::size_t gff_violations(const Topology& topology, std::span<const double> background,
                           const std::vector<GffAssignment>& assignments);

// Installs exact entries along `path` and the delivery entry at the
// destination ToR.
void install_route(SwitchAccess& access, FlowId flow, const Path& path, HostIndex dst_host);

// ---- HybridTE ----------------------------------------------------------------

struct HybridTeOptions {
  StaticRoutingOptions routing;
  double reroute_period_s = 5.0;
};

class HybridTeController final : public Controller {
 public:
  explicit HybridTeController(HybridTeOptions options = {}) : options_(options) {}

  std::string name() const override { return "hybridte"; }
  void start(SwitchAccess& access) override;
  void on_report(SwitchAccess& access, const ReportedFlow& report) override;
  double tick_period() const override { return options_.reroute_period_s; }
  void on_tick(SwitchAccess& access) override;
  std::map<std::string, double> metrics() const override;

  const ForwardingTreeSet& trees() const { return trees_; }
  const std::map<FlowId, TrackedRoute>& tracked() const { return tracked_; }
  const std::vector<double>& background() const { return background_; }
  // Last window's link rates plus demands reserved by placements since.
  const std::vector<double>& placement_load() const { return placement_load_; }

 private:
  void refresh_tracked(SwitchAccess& access);
  std::vector<ElephantEndpoints> endpoints() const;

  HybridTeOptions options_;
  ForwardingTreeSet trees_;
  std::map<FlowId, TrackedRoute> tracked_;
  WindowMeter meter_;
  std::vector<double> background_;
  std::vector<double> placement_load_;
  std::vector<std::uint32_t> tracked_from_;
  std::vector<std::uint32_t> tracked_to_;

  std::size_t tracked_max_ = 0;
  std::uint64_t reports_ = 0;
  std::uint64_t intra_rack_reports_ = 0;
  std::uint64_t placements_ = 0;
  std::uint64_t reroutes_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint64_t finished_ = 0;
  std::uint64_t gff_runs_ = 0;
  std::uint64_t gff_violations_ = 0;
  std::uint64_t gff_unplaced_ = 0;
};

}  // namespace dctesim
