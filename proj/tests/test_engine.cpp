#include <doctest.h>

#include <sstream>

#include "dctesim/engine.hpp"
#include "dctesim/te_baselines.hpp"
#include "dctesim/traffic.hpp"
#include "oracles.hpp"

using namespace dctesim;

namespace {

const Topology& desk() {
  static const Topology t = Topology::build_clos({.pods = 4, .racks_per_pod = 4, .hosts_per_rack = 10});
  return t;
}

Trace make_trace(std::vector<FlowSpec> flows, double duration = 100.0) {
  Trace t;
  t.duration_s = duration;
  t.flows = std::move(flows);
  return t;
}

// Routes by ECMP hashing and logs every callback with its time.
class Recorder final : public Controller {
 public:
  explicit Recorder(double period = 0.0) : period_(period) {}
  std::string name() const override { return "recorder"; }
  void start(SwitchAccess& a) override { topology_ = &a.topology(); }
  std::optional<Path> native_route(const FlowHeader& f) const override { return ecmp_route(*topology_, f, 1); }
  void on_flow_arrival(SwitchAccess& a, const FlowHeader& f) override { log("arrival", f.flow_id, a.now()); }
  void on_report(SwitchAccess& a, const ReportedFlow& r) override { log("report", r.flow_id, a.now()); }
  double tick_period() const override { return period_; }
  void on_tick(SwitchAccess& a) override { log("tick", 0, a.now()); }
  std::vector<std::string> events;

 private:
  void log(const char* what, FlowId f, double t) {
    std::ostringstream s;
    s << what << ' ' << f << " @" << t;
    events.push_back(s.str());
  }
  double period_;
  const Topology* topology_ = nullptr;
};

// Installs an exact entry for a flow that is not in the trace.
class Rogue final : public Controller {
 public:
  std::string name() const override { return "rogue"; }
  void start(SwitchAccess& a) override { a.install_exact(tor_node(0), 12345, pod_switch_node(0)); }
};

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("a lone 1 MB flow finishes in 0.8 ms") {
    EcmpController ecmp;
    const Trace t = make_trace({{0, 0, 150, 1'000'000, 0.0}});
    const auto r = run_simulation(desk(), t, ecmp, {});
    REQUIRE(r.flows[0].completed());
    CHECK(r.flows[0].fct() == doctest::Approx(0.8e-3).epsilon(1e-12));
    CHECK(r.incomplete_count() == 0);
  }

  TEST_CASE("two flows sharing a NIC get half each") {
    EcmpController ecmp;
    const Trace t = make_trace({{0, 0, 50, 10'000'000, 0.0}, {1, 0, 120, 10'000'000, 0.0}});
    const auto r = run_simulation(desk(), t, ecmp, {});
    CHECK(r.flows[0].fct() == doctest::Approx(16e-3).epsilon(1e-12));
    CHECK(r.flows[1].fct() == doctest::Approx(16e-3).epsilon(1e-12));
  }

  TEST_CASE("a short flow leaving speeds up the long one") {
    // 1 MB and 3 MB share the source NIC: both at 5 Gbps until 1.6 ms,
    // then the long flow sends the last 2 MB at 10 Gbps.
    EcmpController ecmp;
    const Trace t = make_trace({{0, 0, 50, 1'000'000, 0.0}, {1, 0, 60, 3'000'000, 0.0}});
    const auto r = run_simulation(desk(), t, ecmp, {});
    CHECK(r.flows[0].fct() == doctest::Approx(1.6e-3).epsilon(1e-12));
    CHECK(r.flows[1].fct() == doctest::Approx(3.2e-3).epsilon(1e-12));
  }

  TEST_CASE("runs are deterministic") {
    TraceParams p;
    p.duration_s = 0.5;
    p.seed = 4;
    const Trace t = generate_trace(desk(), p);
    EcmpController a({.seed = 3}), b({.seed = 3});
    const auto ra = run_simulation(desk(), t, a, {});
    const auto rb = run_simulation(desk(), t, b, {});
    REQUIRE(ra.flows.size() == rb.flows.size());
    for (std::size_t i = 0; i < ra.flows.size(); ++i) CHECK(ra.flows[i].completion_time == rb.flows[i].completion_time);
    CHECK(ra.link_bytes == rb.link_bytes);
    CHECK(ra.events == rb.events);
  }

  TEST_CASE("port counters add up to the bytes routed over each link") {
    TraceParams p;
    p.duration_s = 0.3;
    p.seed = 8;
    const Trace t = generate_trace(desk(), p);
    EcmpController ecmp({.seed = 5});
    const auto r = run_simulation(desk(), t, ecmp, {});
    REQUIRE(r.incomplete_count() == 0);
    std::vector<double> expect(desk().links().size(), 0.0);
    for (const FlowSpec& f : t.flows) {
      const Path path = ecmp_route(desk(), {f.flow_id, f.src_host, f.dst_host}, 5);
      expect[desk().host_uplink(f.src_host)] += static_cast<double>(f.bytes);
      for (LinkId l : path.links) expect[l] += static_cast<double>(f.bytes);
      expect[desk().host_downlink(f.dst_host)] += static_cast<double>(f.bytes);
    }
    for (LinkId l = 0; l < expect.size(); ++l) {
      CHECK(r.link_bytes[l] == doctest::Approx(expect[l]).epsilon(1e-9));
    }
  }

  TEST_CASE("every rate snapshot is feasible and max-min fair") {
    const auto topo = Topology::build_clos({.pods = 2, .racks_per_pod = 2, .hosts_per_rack = 3});
    TraceParams p;
    p.duration_s = 0.05;
    p.flows_per_host_per_second = 400;
    p.seed = 2;
    const Trace t = generate_trace(topo, p);
    EcmpController ecmp;
    Simulation sim(topo, t, ecmp, {});
    std::vector<double> cap;
    for (const auto& l : topo.links()) cap.push_back(l.capacity_bps);
    std::size_t snapshots = 0;
    sim.set_rate_observer([&](const RateSnapshot& s) {
      ++snapshots;
      std::vector<std::vector<LinkId>> flows;
      for (std::size_t f = 0; f < s.flows.size(); ++f) {
        flows.emplace_back(s.links.begin() + s.offsets[f], s.links.begin() + s.offsets[f + 1]);
      }
      const auto expect = oracle::waterfill(flows, cap);
      std::vector<double> load(cap.size(), 0.0);
      for (std::size_t f = 0; f < flows.size(); ++f) {
        CHECK(s.rates[f] == doctest::Approx(expect[f]).epsilon(1e-9));
        for (LinkId l : flows[f]) load[l] += s.rates[f];
      }
      for (LinkId l = 0; l < cap.size(); ++l) CHECK(load[l] <= cap[l] * (1 + 1e-9));
    });
    const auto r = sim.run();
    CHECK(snapshots > 10);
    CHECK(r.rate_recomputations == snapshots);
  }

  TEST_CASE("idle exact entries expire and occupancy tracks installs minus removals") {
    EcmpController acct({.seed = 1, .install_accounting = true});
    // Inter-pod flow finishing at 0.8 ms, then a late intra-rack flow that
    // keeps the run going past the expiry.
    const Trace t = make_trace({{0, 0, 150, 1'000'000, 0.0}, {1, 20, 21, 1'000, 10.0}});
    const auto r = run_simulation(desk(), t, acct, {}, {.idle_timeout_s = 5.0});
    std::uint64_t installs = 0, expiries = 0;
    for (const SwitchStats& s : r.switches) {
      installs += s.exact_installs;
      expiries += s.exact_expiries;
      CHECK(s.exact_entries == s.exact_installs - s.exact_removals);
      CHECK(s.exact_entries_max <= 2);
    }
    CHECK(installs == 5 + 1);
    CHECK(expiries == 5);
    const NodeId src_tor = desk().tor_of_rack(0);
    const auto& occ = r.switches[desk().dense(src_tor) - desk().host_count()].exact_occupancy;
    REQUIRE(occ.size() >= 6);
    for (int k = 0; k < 5; ++k) CHECK(occ[k] == 1);  // polls at 1..5 s, before 5.0008
    CHECK(occ[5] == 0);
  }

  TEST_CASE("a controller touching an unknown flow is an error") {
    Rogue rogue;
    const Trace t = make_trace({{0, 0, 1, 1000, 0.0}});
    CHECK_THROWS_AS(run_simulation(desk(), t, rogue, {}), std::invalid_argument);
    EcmpController ecmp;
    const std::vector<ReportedFlow> bad{{77, 0, 1, 0.0}};
    CHECK_THROWS_AS(run_simulation(desk(), t, ecmp, bad), std::invalid_argument);
    const std::vector<ReportedFlow> unsorted{{0, 0, 1, 0.5}, {0, 0, 1, 0.1}};
    CHECK_THROWS(Simulation(desk(), t, ecmp, unsorted));
    const Trace outside = make_trace({{0, 0, 999, 1000, 0.0}});
    CHECK_THROWS(Simulation(desk(), outside, ecmp, {}));
  }

  TEST_CASE("same-time events run completion, arrival, report, tick") {
    Recorder rec(5.0);
    const Trace t = make_trace({{0, 0, 1, 1000, 0.0}, {1, 2, 3, 1000, 5.0}});
    const std::vector<ReportedFlow> reports{{0, 0, 1, 0.0}, {1, 2, 3, 5.0}};
    run_simulation(desk(), t, rec, reports);
    CHECK(rec.events ==
          std::vector<std::string>{"arrival 0 @0", "report 0 @0", "tick 0 @0", "arrival 1 @5", "report 1 @5", "tick 0 @5"});
  }

  TEST_CASE("a completion at an arrival instant frees capacity first") {
    // Flow 0 ends at exactly 0.8 ms; flow 1 starts then on the same NIC and
    // must see the full 10 Gbps.
    EcmpController ecmp;
    const Trace t = make_trace({{0, 0, 50, 1'000'000, 0.0}, {1, 0, 60, 1'000'000, 0.0008}});
    const auto r = run_simulation(desk(), t, ecmp, {});
    CHECK(r.flows[0].fct() == doctest::Approx(0.8e-3).epsilon(1e-12));
    CHECK(r.flows[1].fct() == doctest::Approx(0.8e-3).epsilon(1e-9));
  }

  TEST_CASE("flows still running at the end time are incomplete") {
    EcmpController ecmp;
    const Trace t = make_trace({{0, 0, 50, 1'000'000'000, 0.0}, {1, 1, 50, 1000, 0.1}});
    const auto r = run_simulation(desk(), t, ecmp, {}, {.end_time = 0.5});
    CHECK_FALSE(r.flows[0].completed());
    CHECK(r.flows[1].completed());
    CHECK(r.incomplete_count() == 1);
    CHECK(r.stop_time == 0.5);
    // Line rate for 0.5 s, less the 1000 bytes ceded while flow 1 shared the downlink.
    CHECK(r.link_bytes[desk().host_uplink(0)] == doctest::Approx(6.25e8 - 1000).epsilon(1e-9));
  }
}
