#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dctesim/experiment.hpp"

using namespace dctesim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dctesim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig tiny(const fs::path& out) {
  auto c = parse_config(R"({
    "topology": {"pods": 2, "racks_per_pod": 2, "hosts_per_rack": 3, "fabric_link_bps": 2e9},
    "trace": {"duration_s": 2, "flows_per_host_per_second": 30},
    "hybridte": {"reroute_period_s": 0.5},
    "hedera": {"period_s": 0.5},
    "engine": {"drain_s": 5}
  })");
  c.output_dir = out.string();
  return c;
}

std::size_t count_prefixed(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().rfind(prefix, 0) == 0;
  return n;
}

std::size_t data_lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) - 1;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("load levels scale the fabric only") {
    const auto t = Topology::build_clos({.pods = 2, .racks_per_pod = 2, .hosts_per_rack = 2});
    const auto same = apply_load_level(t, 1.0);
    const auto l2 = apply_load_level(t, 2.0);
    const auto l175 = apply_load_level(t, 1.75);
    for (LinkId l = 0; l < t.links().size(); ++l) {
      CHECK(same.link(l).capacity_bps == t.link(l).capacity_bps);
      const double expect2 = t.is_fabric_link(l) ? 5e9 : 10e9;
      CHECK(l2.link(l).capacity_bps == expect2);
      if (t.is_fabric_link(l)) CHECK(l175.link(l).capacity_bps == doctest::Approx(10e9 / 1.75).epsilon(1e-15));
    }
    CHECK_THROWS_AS(apply_load_level(t, 0.5), std::invalid_argument);
    CHECK(apply_load_level(t, 0.5, true).link(t.link_between(tor_node(0), pod_switch_node(0))).capacity_bps == 20e9);
    CHECK_THROWS(apply_load_level(t, 0.0, true));
    CHECK_THROWS(apply_load_level(t, -1.0, true));
    CHECK_THROWS(apply_load_level(t, NAN, true));
    CHECK_THROWS(apply_load_level(t, INFINITY, true));
  }

  TEST_CASE("seeds derive deterministically and independently") {
    const auto c = parse_config("{}");
    const auto a = derive_seeds(c, 3), b = derive_seeds(c, 3), d = derive_seeds(c, 4);
    CHECK(a.trace == 3);
    CHECK(a.routing == b.routing);
    CHECK(a.detector == b.detector);
    CHECK(a.routing != d.routing);
    CHECK(a.ecmp != d.ecmp);
    CHECK(std::set<std::uint64_t>{a.routing, a.ecmp, a.detector}.size() == 3);
    auto c2 = c;
    c2.detector.seed = 99;
    CHECK(derive_seeds(c2, 3).detector != a.detector);
    CHECK(derive_seeds(c2, 3).routing == a.routing);
  }

  TEST_CASE("cell names") {
    CHECK(cell_name(Scheme::Ecmp, 1.5, 3, {.fn_rate = 0.5}) == "ecmp_l1.5_s3");
    CHECK(cell_name(Scheme::HybridTe, 2, 10, {.fn_rate = 0.25, .fp_rate = 0, .delay_s = 0.1}) ==
          "hybridte_l2_fn0.25_fp0_d0.1_s10");
    auto c = parse_config(R"({"scheme": "hedera", "load_level": 1.75, "trace": {"seed": 4}})");
    CHECK(single_cell(c).name == "hedera_l1.75_s4");
    c.cell = "custom";
    CHECK(single_cell(c).name == "custom");
  }

  TEST_CASE("the sweep grid") {
    auto c = parse_config(R"({"sweep": {"schemes": ["ecmp", "hybridte"], "load_levels": [1, 2],
                                        "fn_rates": [0, 0.5, 1], "fp_rates": [0, 0.1, 0.2], "seeds": [7]}})");
    const auto cells = expand_sweep(c);
    CHECK(cells.size() == 2 * (1 + 9));
    std::set<std::string> names;
    for (const auto& x : cells) names.insert(x.name);
    CHECK(names.size() == cells.size());
    CHECK(cells[0].name == "ecmp_l1_s7");
    CHECK(cells[1].name == "hybridte_l1_fn0_fp0_d0_s7");
    CHECK(cells[2].name == "hybridte_l1_fn0_fp0.1_d0_s7");
    CHECK(cells[10].name == "ecmp_l2_s7");
    CHECK(cells[9].detector.fn_rate == 1.0);
    CHECK(cells[9].detector.fp_rate == 0.2);

    const auto single = expand_sweep(parse_config(R"({"scheme": "ecmp", "trace": {"seed": 5}})"));
    REQUIRE(single.size() == 1);
    CHECK(single[0].name == "ecmp_l1_s5");
  }

  TEST_CASE("controllers match their schemes") {
    const auto c = parse_config("{}");
    for (Scheme s : {Scheme::Ecmp, Scheme::EcmpAccounting, Scheme::Hedera, Scheme::HybridTe}) {
      CellSpec cell;
      cell.scheme = s;
      CHECK(make_controller(c, cell)->name() == to_string(s));
    }
  }

  TEST_CASE("cell statistics") {
    Trace t;
    t.duration_s = 10;
    SimulationResult r;
    for (int i = 0; i < 4; ++i) r.flows.push_back({static_cast<FlowId>(i), 0.0, 100, double(i + 1)});
    r.flows.push_back({4, 0.0, 100, std::nullopt});
    SwitchStats tor{tor_node(0)}, pod{pod_switch_node(0)}, core{core_node(0)};
    tor.exact_entries_max = 9;
    tor.exact_installs = 1000;
    tor.installs_per_second = {1000};
    pod.exact_installs = 30;
    pod.installs_per_second = {10, 20};
    core.exact_installs = 10;
    core.installs_per_second = {0, 4, 6};
    core.exact_entries_max = 3;
    r.switches = {tor, pod, core};
    r.controller_metrics = {{"classified_elephants_max", 5}, {"gff_violations", 0}};
    CellSpec cell{"x", Scheme::Hedera, 1.0, 1, {}};
    const auto row = summarize_cell(cell, t, r);
    CHECK(row.flows == 5);
    CHECK(row.completed == 4);
    CHECK(row.incomplete == 1);
    CHECK(row.mean_fct_s == 2.5);
    CHECK(row.median_fct_s == 2.5);
    CHECK(row.p99_fct_s == 4.0);
    CHECK(row.max_exact_entries == 9);
    CHECK(row.peak_install_rate_fabric == 20);
    CHECK(row.mean_install_rate_fabric == doctest::Approx(40.0 / 2 / 10));
    CHECK(row.tracked_elephants_max == 5);
  }

  TEST_CASE("a small sweep writes one result file per cell") {
    const fs::path out = scratch("sweep");
    auto c = tiny(out);
    c.sweep.schemes = {Scheme::Ecmp, Scheme::Hedera, Scheme::HybridTe};
    c.sweep.seeds = {1, 2};
    c.sweep.jobs = 2;
    const auto result = run_sweep(c);
    CHECK(result.failures.empty());
    REQUIRE(result.rows.size() == 6);
    CHECK(count_prefixed(out, "result_") == 6);
    CHECK(count_prefixed(out, "flows_") == 6);
    CHECK(count_prefixed(out, "decisions_") == 6);
    CHECK(data_lines(out / "aggregate.csv") == 6);
    CHECK_FALSE(fs::exists(out / "failures.csv"));
    for (const auto& r : result.rows) {
      CHECK(r.incomplete == 0);
      REQUIRE(r.reduction_vs_baseline_pct.has_value());
      if (r.scheme == "ecmp") CHECK(*r.reduction_vs_baseline_pct == 0.0);
    }
    CHECK(result.rows[0].trace_fingerprint == result.rows[2].trace_fingerprint);
    CHECK(result.rows[0].trace_fingerprint != result.rows[3].trace_fingerprint);
    const std::string res = slurp(out / "result_hybridte_l1_fn0_fp0_d0_s1.csv");
    CHECK(res.rfind("metric,value\ncell,hybridte_l1_fn0_fp0_d0_s1\n", 0) == 0);
    CHECK(res.find("controller.placements,") != std::string::npos);
    const std::string flows = slurp(out / "flows_ecmp_l1_s2.csv");
    CHECK(flows.rfind("flow_id,start_s,fct_s,bytes,scheme\n", 0) == 0);
  }

  TEST_CASE("reruns are byte-identical regardless of parallelism") {
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    auto ca = tiny(a);
    ca.sweep.schemes = {Scheme::Ecmp, Scheme::HybridTe};
    ca.sweep.load_levels = {1, 1.5};
    ca.sweep.seeds = {3};
    ca.sweep.jobs = 1;
    auto cb = ca;
    cb.output_dir = b.string();
    cb.sweep.jobs = 3;
    run_sweep(ca);
    run_sweep(cb);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto other = b / e.path().filename();
      REQUIRE(fs::exists(other));
      CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
      ++compared;
    }
    CHECK(compared == 1 + 4 * 5);  // aggregate + result/flows/switches/timeseries/decisions per cell
  }

  TEST_CASE("failed cells are recorded and the rest still run") {
    const fs::path out = scratch("failures");
    // A trace naming host 50 on a 12-host fabric.
    const fs::path trace = out / "bad_trace.csv";
    fs::create_directories(out);
    std::ofstream(trace) << "# dctesim-trace v1\n# duration_s=1\n0,0.1,0,50,1000\n";
    auto c = tiny(out);
    c.trace_file = trace.string();
    c.sweep.schemes = {Scheme::Ecmp, Scheme::HybridTe};
    const auto r = run_sweep(c);
    CHECK(r.rows.empty());
    REQUIRE(r.failures.size() == 2);
    CHECK(r.failures[0].error.find("outside the topology") != std::string::npos);
    CHECK(fs::exists(out / "failures.csv"));
    CHECK(data_lines(out / "aggregate.csv") == 0);

    // A reports file that names flows absent from the trace fails only HybridTE.
    const fs::path out2 = scratch("failures2");
    fs::create_directories(out2);
    std::ofstream(out2 / "reports.csv") << "flow_id,report_time_s\n999999,0.5\n";
    auto c2 = tiny(out2);
    c2.reports_file = (out2 / "reports.csv").string();
    c2.sweep.schemes = {Scheme::Ecmp, Scheme::HybridTe};
    const auto r2 = run_sweep(c2);
    CHECK(r2.rows.size() == 1);
    REQUIRE(r2.failures.size() == 1);
    CHECK(r2.failures[0].cell == "hybridte_l1_fn0_fp0_d0_s1");
  }
}
