#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dctesim/control.hpp"
#include "dctesim/flow_table.hpp"
#include "dctesim/maxmin.hpp"
#include "dctesim/topology.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

// Same-timestamp events run in this order.
enum class EventKind : std::uint8_t { Completion, Expiry, Arrival, Report, Tick, Poll };

struct EngineOptions {
  double end_time = std::numeric_limits<double>::infinity();
  double idle_timeout_s = 5.0;
  double stats_period_s = 1.0;
  MatchMode match_mode = MatchMode::Subnet;
  std::uint64_t elephant_threshold_bytes = 10'000'000;
};

enum class FlowPhase : std::uint8_t { Pending, Active, Completed };

struct FlowRecord {
  FlowId flow_id = 0;
  double start_time = 0.0;
  std::uint64_t bytes = 0;
  std::optional<double> completion_time;

  bool completed() const { return completion_time.has_value(); }
  double fct() const { return *completion_time - start_time; }
};

struct SwitchStats {
  NodeId sw;
  std::size_t wildcard_entries = 0;
  std::size_t exact_entries = 0;
  std::size_t exact_entries_max = 0;
  std::uint64_t exact_installs = 0;
  std::uint64_t exact_removals = 0;
  std::uint64_t exact_expiries = 0;
  std::vector<std::uint32_t> installs_per_second;  // bucket k covers [k, k+1) s
  std::vector<std::uint32_t> exact_occupancy;      // sampled every stats period
};

struct SimulationResult {
  std::string controller;
  std::vector<FlowRecord> flows;       // trace order
  std::vector<SwitchStats> switches;   // ToRs, pod switches, cores
  std::map<std::string, double> controller_metrics;
  std::vector<DecisionRecord> decisions;
  std::vector<double> link_bytes;      // final port counters by LinkId
  double stop_time = 0.0;
  std::uint64_t events = 0;
  std::uint64_t rate_recomputations = 0;
  std::size_t true_elephants_concurrent_max = 0;

  std::size_t completed_count() const;
  std::size_t incomplete_count() const { return flows.size() - completed_count(); }
};

// Snapshot handed to an observer after every rate recomputation.
struct RateSnapshot {
  double time = 0.0;
  std::span<const FlowId> flows;
  std::span<const double> rates;
  std::span<const std::uint32_t> offsets;  // CSR into links
  std::span<const LinkId> links;
};

// One flow-level simulation. Single-threaded; independent instances share
// nothing mutable.
class Simulation final : public SwitchAccess {
 public:
  Simulation(const Topology& topology, const Trace& trace, Controller& controller,
             std::span<const ReportedFlow> reports, EngineOptions options = {});

  void set_rate_observer(std::function<void(const RateSnapshot&)> observer) { observer_ = std::move(observer); }

  SimulationResult run();

  // SwitchAccess
  double now() const override { return now_; }
  const Topology& topology() const override { return *topology_; }
  void install_wildcard(NodeId sw, RackId rack, NodeId next_hop) override;
  void install_host_entry(NodeId tor, HostIndex host) override;
  void install_exact(NodeId sw, FlowId flow, NodeId next_hop) override;
  bool remove_exact(NodeId sw, FlowId flow) override;
  bool has_exact(NodeId sw, FlowId flow) const override;
  std::optional<ExactEntryStats> exact_stats(NodeId sw, FlowId flow) const override;
  std::vector<ExactEntryStats> read_exact_entries(NodeId sw) const override;
  std::vector<double> read_port_counters() const override;
  void log_decision(std::string event, FlowId flow, std::string path) override;

  const FlowTables& tables() const { return tables_; }

 private:
  struct FlowState {
    FlowSpec spec;
    FlowPhase phase = FlowPhase::Pending;
    double remaining = 0.0;   // bytes
    double delivered = 0.0;   // bytes, as of last_update
    double rate = 0.0;        // bits/s
    double last_update = 0.0;
    double finish = std::numeric_limits<double>::infinity();  // at the current rate
    Path path;
    std::vector<LinkId> links;  // host uplink, fabric, host downlink
    std::vector<NodeId> attached;
    std::uint32_t active_slot = 0;
    std::optional<double> completion_time;
    bool dirty = false;
  };

  struct ExpiryItem {
    double time;
    std::uint32_t switch_slot;
    FlowId flow;
    std::uint32_t generation;
    bool operator>(const ExpiryItem& o) const {
      if (time != o.time) return time > o.time;
      if (switch_slot != o.switch_slot) return switch_slot > o.switch_slot;
      return flow > o.flow;
    }
  };

  std::uint32_t switch_slot(NodeId sw) const { return topology_->dense(sw) - topology_->host_count(); }
  NodeId switch_at(std::uint32_t slot) const { return topology_->node(slot + topology_->host_count()); }
  FlowState& flow_by_id(FlowId id);
  const FlowState* find_flow(FlowId id) const;
  double delivered_at(const FlowState& f, double t) const;
  double entry_bytes(const ExactEntry& e, FlowId flow) const;

  void advance_to(double t);
  void arrive(FlowState& f);
  void route(FlowState& f);
  void attach_entries(FlowState& f);
  void detach_entries(FlowState& f);
  void schedule_expiry(NodeId sw, FlowId flow, ExactEntry& e);
  void complete(FlowState& f);
  void expire_due(double t);
  void reroute_dirty();
  void recompute_rates();
  void sample_occupancy();
  void count_removal(NodeId sw, bool expired);

  const Topology* topology_;
  const Trace* trace_;
  Controller* controller_;
  std::span<const ReportedFlow> reports_;
  EngineOptions options_;
  FlowTables tables_;

  std::vector<FlowState> flows_;
  std::unordered_map<FlowId, std::uint32_t> index_of_;
  std::vector<std::uint32_t> active_;
  std::vector<std::uint32_t> dirty_;
  bool rates_dirty_ = false;

  double now_ = 0.0;
  std::vector<double> link_acc_;
  std::vector<double> link_rate_;
  std::vector<double> link_since_;
  std::vector<LinkId> busy_links_;
  std::vector<double> capacity_;

  std::priority_queue<ExpiryItem, std::vector<ExpiryItem>, std::greater<>> expiries_;
  double next_completion_ = std::numeric_limits<double>::infinity();
  std::uint32_t next_completion_flow_ = 0;

  MaxMinSolver solver_;
  std::vector<std::uint32_t> csr_offsets_;
  std::vector<LinkId> csr_links_;
  std::vector<double> rates_;
  std::vector<FlowId> csr_flows_;
  std::function<void(const RateSnapshot&)> observer_;

  std::vector<SwitchStats> stats_;
  std::vector<DecisionRecord> decisions_;
  std::size_t true_elephants_active_ = 0;
  std::size_t true_elephants_max_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t recomputations_ = 0;
  bool started_ = false;
};

SimulationResult run_simulation(const Topology& topology, const Trace& trace, Controller& controller,
                                std::span<const ReportedFlow> reports, const EngineOptions& options = {});

}  // namespace dctesim
