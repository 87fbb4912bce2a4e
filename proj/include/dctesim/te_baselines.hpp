#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "dctesim/control.hpp"
#include "dctesim/static_routing.hpp"
#include "dctesim/te_hybrid.hpp"

namespace dctesim {

// Hash of (flow id, seed) mapped uniformly onto the candidate set.
const Path& ecmp_assign(FlowId flow, const std::vector<Path>& candidates, std::uint64_t seed);

// ECMP route for a flow; intra-rack flows get the one-switch path.
Path ecmp_route(const Topology& topology, const FlowHeader& flow, std::uint64_t seed);

struct EcmpOptions {
  std::uint64_t seed = 1;
  // Also install one exact entry per flow on every switch of its path, to
  // account for what per-flow SDN routing would cost.
  bool install_accounting = false;
};

class EcmpController final : public Controller {
 public:
  explicit EcmpController(EcmpOptions options = {}) : options_(options) {}

  std::string name() const override { return options_.install_accounting ? "ecmp_accounting" : "ecmp"; }
  void start(SwitchAccess& access) override { topology_ = &access.topology(); }
  std::optional<Path> native_route(const FlowHeader& flow) const override;
  void on_flow_arrival(SwitchAccess& access, const FlowHeader& flow) override;
  std::map<std::string, double> metrics() const override;

 private:
  EcmpOptions options_;
  const Topology* topology_ = nullptr;
  std::uint64_t flows_ = 0;
};

struct HederaOptions {
  std::uint64_t ecmp_seed = 1;
  double period_s = 5.0;
  double threshold_fraction = 0.1;  // of the source NIC capacity
  StaticRoutingOptions routing;
};

// Per-flow exact entries on the ECMP path at arrival; every period, poll the
// flow counters, classify flows at or above the threshold rate as elephants
// and rerun Global First Fit over them.
class HederaController final : public Controller {
 public:
  explicit HederaController(HederaOptions options = {}) : options_(options) {}

  std::string name() const override { return "hedera"; }
  void start(SwitchAccess& access) override;
  void on_flow_arrival(SwitchAccess& access, const FlowHeader& flow) override;
  double tick_period() const override { return options_.period_s; }
  void on_tick(SwitchAccess& access) override;
  std::map<std::string, double> metrics() const override;

 private:
  HederaOptions options_;
  std::map<FlowId, TrackedRoute> known_;
  WindowMeter meter_;
  std::uint64_t ticks_ = 0;
  std::uint64_t reroutes_ = 0;
  std::size_t elephants_max_ = 0;
  std::uint64_t gff_runs_ = 0;
  std::uint64_t gff_violations_ = 0;
  std::uint64_t gff_unplaced_ = 0;
};

// One Hedera scheduling round over polled per-flow stats. Returns the GFF
// outcome (empty when no flow reaches the threshold).
struct HederaDecision {
  std::vector<FlowId> elephants;
  GffOutcome gff;
  std::vector<double> background;
};
HederaDecision hedera_tick(const Topology& topology, const std::map<FlowId, TrackedRoute>& flows,
                           const WindowMeter& meter, double threshold_fraction);

}  // namespace dctesim
