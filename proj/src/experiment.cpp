#include "dctesim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "dctesim/detection.hpp"
#include "dctesim/random.hpp"
#include "dctesim/te_baselines.hpp"
#include "dctesim/te_hybrid.hpp"

namespace dctesim {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

double metric_or(const std::map<std::string, double>& m, const char* key, double fallback = 0.0) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

bool is_fabric_switch(NodeId n) { return n.kind == NodeKind::PodSwitch || n.kind == NodeKind::CoreSwitch; }

}  // namespace

Topology apply_load_level(const Topology& topology, double load_level, bool allow_below_one) {
  if (!(load_level > 0.0) || !std::isfinite(load_level)) {
    throw std::invalid_argument("load level must be a positive number, got " + fmt("%g", load_level));
  }
  if (load_level < 1.0 && !allow_below_one) {
    throw std::invalid_argument("load level " + fmt("%g", load_level) +
                                " is below 1; set allow_load_below_one to permit it");
  }
  if (load_level == 1.0) return topology;
  return topology.with_fabric_scaled(load_level);
}

DerivedSeeds derive_seeds(const ExperimentConfig& config, std::uint64_t seed) {
  return DerivedSeeds{
      .trace = seed,
      .routing = hash_combine(hash_combine(config.routing_seed, 0x726f757465ULL), seed),
      .ecmp = hash_combine(hash_combine(config.ecmp_seed, 0x65636d70ULL), seed),
      .detector = hash_combine(hash_combine(config.detector.seed, 0x646574656374ULL), seed),
  };
}

std::string cell_name(Scheme scheme, double load_level, std::uint64_t seed, const DetectorConfig& detector) {
  std::string name = to_string(scheme) + "_l" + fmt("%g", load_level);
  if (scheme == Scheme::HybridTe) {
    name += "_fn" + fmt("%g", detector.fn_rate) + "_fp" + fmt("%g", detector.fp_rate) + "_d" +
            fmt("%g", detector.delay_s);
  }
  return name + "_s" + std::to_string(seed);
}

CellSpec single_cell(const ExperimentConfig& config) {
  CellSpec c;
  c.scheme = config.scheme;
  c.load_level = config.load_level;
  c.seed = config.trace.seed;
  c.detector = config.detector;
  c.name = config.cell.empty() ? cell_name(c.scheme, c.load_level, c.seed, c.detector) : config.cell;
  return c;
}

std::vector<CellSpec> expand_sweep(const ExperimentConfig& config) {
  const SweepSpec& s = config.sweep;
  auto or_single = [](auto list, auto single) {
    if (list.empty()) list.push_back(single);
    return list;
  };
  const auto schemes = or_single(s.schemes, config.scheme);
  const auto loads = or_single(s.load_levels, config.load_level);
  const auto fns = or_single(s.fn_rates, config.detector.fn_rate);
  const auto fps = or_single(s.fp_rates, config.detector.fp_rate);
  const auto delays = or_single(s.delays_s, config.detector.delay_s);
  const auto seeds = or_single(s.seeds, config.trace.seed);

  std::vector<CellSpec> cells;
  for (auto seed : seeds) {
    for (double load : loads) {
      for (Scheme scheme : schemes) {
        auto push = [&](DetectorConfig d) {
          CellSpec c{cell_name(scheme, load, seed, d), scheme, load, seed, d};
          cells.push_back(std::move(c));
        };
        if (scheme != Scheme::HybridTe) {
          push(config.detector);
          continue;
        }
        for (double fn : fns)
          for (double fp : fps)
            for (double d : delays) {
              DetectorConfig det = config.detector;
              det.fn_rate = fn;
              det.fp_rate = fp;
              det.delay_s = d;
              push(det);
            }
      }
    }
  }
  return cells;
}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config, const CellSpec& cell) {
  const DerivedSeeds seeds = derive_seeds(config, cell.seed);
  const StaticRoutingOptions routing{seeds.routing, config.fill_unreached};
  switch (cell.scheme) {
    case Scheme::Ecmp:
      return std::make_unique<EcmpController>(EcmpOptions{seeds.ecmp, false});
    case Scheme::EcmpAccounting:
      return std::make_unique<EcmpController>(EcmpOptions{seeds.ecmp, true});
    case Scheme::Hedera: {
      HederaOptions h = config.hedera;
      h.ecmp_seed = seeds.ecmp;
      h.routing = routing;
      return std::make_unique<HederaController>(h);
    }
    case Scheme::HybridTe:
      return std::make_unique<HybridTeController>(HybridTeOptions{routing, config.reroute_period_s});
  }
  throw std::logic_error("unknown scheme");
}

Trace obtain_trace(const ExperimentConfig& config, const Topology& topology, std::uint64_t seed) {
  if (!config.trace_file.empty()) {
    std::ifstream in(config.trace_file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file " + config.trace_file);
    Trace t = load_trace(in);
    for (const auto& f : t.flows) {
      if (f.src_host >= topology.host_count() || f.dst_host >= topology.host_count()) {
        throw std::runtime_error("trace flow " + std::to_string(f.flow_id) + " names a host outside the topology");
      }
    }
    return t;
  }
  TraceParams p = config.trace;
  p.seed = seed;
  return generate_trace(topology, p);
}

AggregateRow summarize_cell(const CellSpec& cell, const Trace& trace, const SimulationResult& result) {
  AggregateRow r;
  r.cell = cell.name;
  r.scheme = to_string(cell.scheme);
  r.load_level = cell.load_level;
  r.seed = cell.seed;
  if (cell.scheme == Scheme::HybridTe) {
    r.fn_rate = cell.detector.fn_rate;
    r.fp_rate = cell.detector.fp_rate;
    r.delay_s = cell.detector.delay_s;
  }
  r.trace_fingerprint = trace_fingerprint(trace);
  r.flows = result.flows.size();

  std::vector<double> fct;
  fct.reserve(result.flows.size());
  for (const auto& f : result.flows) {
    if (f.completed()) fct.push_back(f.fct());
  }
  r.completed = fct.size();
  r.incomplete = r.flows - r.completed;
  if (!fct.empty()) {
    double sum = 0.0;
    for (double v : fct) sum += v;
    r.mean_fct_s = sum / static_cast<double>(fct.size());
    std::sort(fct.begin(), fct.end());
    const std::size_t n = fct.size();
    r.median_fct_s = n % 2 ? fct[n / 2] : 0.5 * (fct[n / 2 - 1] + fct[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    r.p99_fct_s = fct[std::max<std::size_t>(rank, 1) - 1];
  }

  std::uint64_t fabric_installs = 0;
  for (const auto& s : result.switches) {
    r.max_exact_entries = std::max(r.max_exact_entries, s.exact_entries_max);
    if (!is_fabric_switch(s.sw)) continue;
    fabric_installs += s.exact_installs;
    for (auto b : s.installs_per_second) {
      r.peak_install_rate_fabric = std::max(r.peak_install_rate_fabric, static_cast<double>(b));
    }
  }
  std::size_t fabric_switches = 0;
  for (const auto& s : result.switches) fabric_switches += is_fabric_switch(s.sw);
  if (trace.duration_s > 0.0 && fabric_switches > 0) {
    r.mean_install_rate_fabric =
        static_cast<double>(fabric_installs) / static_cast<double>(fabric_switches) / trace.duration_s;
  }

  const auto& m = result.controller_metrics;
  r.tracked_elephants_max = metric_or(m, "tracked_elephants_max", metric_or(m, "classified_elephants_max"));
  r.gff_violations = metric_or(m, "gff_violations");
  return r;
}

void write_cell_files(const ExperimentConfig& config, const CellOutcome& outcome, const Trace& trace) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const auto& cell = outcome.spec;
  const auto& row = outcome.row;
  const auto& res = outcome.result;

  {
    auto out = open_out(dir / ("result_" + cell.name + ".csv"));
    out << "metric,value\n";
    auto put = [&](const std::string& k, const std::string& v) { out << k << ',' << v << '\n'; };
    auto putd = [&](const std::string& k, double v) { put(k, fmt("%.12g", v)); };
    put("cell", cell.name);
    put("scheme", row.scheme);
    putd("load_level", row.load_level);
    put("seed", std::to_string(row.seed));
    putd("fn_rate", row.fn_rate);
    putd("fp_rate", row.fp_rate);
    putd("delay_s", row.delay_s);
    put("trace_fingerprint", row.trace_fingerprint);
    putd("trace_duration_s", trace.duration_s);
    put("flows", std::to_string(row.flows));
    put("completed", std::to_string(row.completed));
    put("incomplete", std::to_string(row.incomplete));
    putd("mean_fct_s", row.mean_fct_s);
    putd("median_fct_s", row.median_fct_s);
    putd("p99_fct_s", row.p99_fct_s);
    put("max_exact_entries", std::to_string(row.max_exact_entries));
    putd("tracked_elephants_max", row.tracked_elephants_max);
    put("true_elephants_concurrent_max", std::to_string(res.true_elephants_concurrent_max));
    putd("peak_install_rate_fabric", row.peak_install_rate_fabric);
    putd("mean_install_rate_fabric", row.mean_install_rate_fabric);
    putd("gff_violations", row.gff_violations);
    putd("stop_time_s", res.stop_time);
    put("events", std::to_string(res.events));
    put("rate_recomputations", std::to_string(res.rate_recomputations));
    for (const auto& [k, v] : res.controller_metrics) putd("controller." + k, v);
    if (config.write_decisions) put("decision_log", "decisions_" + cell.name + ".csv");
  }

  if (res.flows.size() <= config.flow_records_max) {
    auto out = open_out(dir / ("flows_" + cell.name + ".csv"));
    out << "flow_id,start_s,fct_s,bytes,scheme\n";
    char buf[128];
    for (const auto& f : res.flows) {
      if (f.completed()) {
        std::snprintf(buf, sizeof buf, "%llu,%.6f,%.9f,%llu,", static_cast<unsigned long long>(f.flow_id),
                      f.start_time, f.fct(), static_cast<unsigned long long>(f.bytes));
      } else {
        std::snprintf(buf, sizeof buf, "%llu,%.6f,,%llu,", static_cast<unsigned long long>(f.flow_id), f.start_time,
                      static_cast<unsigned long long>(f.bytes));
      }
      out << buf << row.scheme << '\n';
    }
  }

  {
    auto out = open_out(dir / ("switches_" + cell.name + ".csv"));
    out << "switch,wildcard_entries,exact_entries_final,exact_entries_max,exact_installs,exact_removals,"
           "exact_expiries,peak_installs_per_second\n";
    for (const auto& s : res.switches) {
      std::uint32_t peak = 0;
      for (auto b : s.installs_per_second) peak = std::max(peak, b);
      out << to_string(s.sw) << ',' << s.wildcard_entries << ',' << s.exact_entries << ',' << s.exact_entries_max
          << ',' << s.exact_installs << ',' << s.exact_removals << ',' << s.exact_expiries << ',' << peak << '\n';
    }
  }

  {
    auto out = open_out(dir / ("timeseries_" + cell.name + ".csv"));
    out << "switch,second,installs,exact_occupancy\n";
    for (const auto& s : res.switches) {
      const std::size_t n = std::max(s.installs_per_second.size(), s.exact_occupancy.size());
      for (std::size_t k = 0; k < n; ++k) {
        out << to_string(s.sw) << ',' << k << ',' << (k < s.installs_per_second.size() ? s.installs_per_second[k] : 0)
            << ',';
        if (k < s.exact_occupancy.size()) out << s.exact_occupancy[k];
        out << '\n';
      }
    }
  }

  if (config.write_decisions) {
    auto out = open_out(dir / ("decisions_" + cell.name + ".csv"));
    out << "time_s,event,flow_id,path\n";
    for (const auto& d : res.decisions) {
      out << fmt("%.9f", d.time_s) << ',' << d.event << ',' << d.flow_id << ',' << d.path << '\n';
    }
  }
}

CellOutcome run_cell(const ExperimentConfig& config, const CellSpec& cell, const Topology& base_topology,
                     const Trace& trace, bool write_files) {
  const Topology topology = apply_load_level(base_topology, cell.load_level, config.allow_load_below_one);
  const DerivedSeeds seeds = derive_seeds(config, cell.seed);

  std::vector<ReportedFlow> reports;
  if (cell.scheme == Scheme::HybridTe) {
    if (!config.reports_file.empty()) {
      std::ifstream in(config.reports_file, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open reports file " + config.reports_file);
      reports = load_reports(in, trace);
    } else {
      DetectorConfig d = cell.detector;
      d.seed = seeds.detector;
      reports = controller_view(make_reports(trace, config.elephant_threshold_bytes, d));
    }
  }

  auto controller = make_controller(config, cell);
  EngineOptions opts;
  opts.end_time = trace.duration_s + config.drain_s;
  opts.idle_timeout_s = config.idle_timeout_s;
  opts.stats_period_s = config.stats_period_s;
  opts.match_mode = config.match_mode;
  opts.elephant_threshold_bytes = config.elephant_threshold_bytes;

  CellOutcome outcome;
  outcome.spec = cell;
  outcome.result = run_simulation(topology, trace, *controller, reports, opts);
  outcome.row = summarize_cell(cell, trace, outcome.result);
  if (write_files) write_cell_files(config, outcome, trace);
  return outcome;
}

SweepOutcome run_sweep(const ExperimentConfig& config, std::ostream* log) {
  const Topology base = Topology::build_clos(config.topology);
  const auto cells = expand_sweep(config);

  std::map<std::uint64_t, Trace> traces;
  std::map<std::uint64_t, std::string> trace_errors;
  for (const auto& c : cells) {
    if (traces.count(c.seed) || trace_errors.count(c.seed)) continue;
    try {
      traces.emplace(c.seed, obtain_trace(config, base, c.seed));
    } catch (const std::exception& e) {
      trace_errors.emplace(c.seed, e.what());
    }
  }

  std::vector<std::optional<AggregateRow>> rows(cells.size());
  std::vector<std::optional<std::string>> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const auto& c = cells[i];
      if (auto it = trace_errors.find(c.seed); it != trace_errors.end()) {
        errors[i] = it->second;
      } else {
        try {
          rows[i] = run_cell(config, c, base, traces.at(c.seed), true).row;
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << (errors[i] ? "FAILED " : "done   ") << c.name;
        if (rows[i]) *log << "  mean_fct_s=" << fmt("%.6g", rows[i]->mean_fct_s);
        if (errors[i]) *log << "  " << *errors[i];
        *log << '\n' << std::flush;
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(config.sweep.jobs, static_cast<unsigned>(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  SweepOutcome out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (rows[i]) out.rows.push_back(*rows[i]);
    if (errors[i]) out.failures.push_back({cells[i].name, *errors[i]});
  }
  attach_baseline_reductions(out.rows);

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  {
    auto a = open_out(dir / "aggregate.csv");
    write_aggregate(out.rows, a);
  }
  if (!out.failures.empty()) {
    auto f = open_out(dir / "failures.csv");
    f << "cell,error\n";
    for (const auto& x : out.failures) {
      std::string e = x.error;
      std::replace(e.begin(), e.end(), ',', ';');
      std::replace(e.begin(), e.end(), '\n', ' ');
      f << x.cell << ',' << e << '\n';
    }
  }
  return out;
}

}  // namespace dctesim
