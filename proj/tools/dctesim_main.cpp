// dctesim command line: generate, run, sweep, summarize.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dctesim/config.hpp"
#include "dctesim/detection.hpp"
#include "dctesim/experiment.hpp"
#include "dctesim/summary.hpp"
#include "dctesim/traffic.hpp"

namespace fs = std::filesystem;
using namespace dctesim;

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.sets, "override a config key, e.g. --set detector.fn_rate=0.25")
      ->type_name("KEY=VALUE");
  cmd->allow_extras();
  cmd->footer("Any config key may also be given as --<key>=<value>, e.g. --trace.seed=3 --load_level=1.5");
}

// Unknown "--a.b=v" / "--a.b v" arguments become overrides.
std::vector<std::string> overrides_from(const CLI::App* cmd, const CommonArgs& args) {
  std::vector<std::string> out = args.sets;
  const auto extra = cmd->remaining();
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const std::string& tok = extra[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw CLI::ExtrasError({tok});
    std::string key = tok.substr(2);
    if (key.find('=') != std::string::npos) {
      out.push_back(key);
    } else if (i + 1 < extra.size()) {
      out.push_back(key + "=" + extra[++i]);
    } else {
      throw CLI::ArgumentMismatch("--" + key + " needs a value");
    }
  }
  return out;
}

ExperimentConfig load(const CLI::App* cmd, const CommonArgs& args) {
  const auto ov = overrides_from(cmd, args);
  if (args.config.empty()) return parse_config("{}", ov, "defaults");
  return load_config(args.config, ov);
}

void print_row(const AggregateRow& r) {
  std::printf("cell               %s\n", r.cell.c_str());
  std::printf("flows              %zu (%zu completed, %zu incomplete)\n", r.flows, r.completed, r.incomplete);
  std::printf("mean fct           %.6f s\n", r.mean_fct_s);
  std::printf("median fct         %.6f s\n", r.median_fct_s);
  std::printf("p99 fct            %.6f s\n", r.p99_fct_s);
  std::printf("max exact entries  %zu\n", r.max_exact_entries);
  std::printf("peak fabric installs/s  %.0f\n", r.peak_install_rate_fabric);
}

int cmd_generate(const CLI::App* cmd, const CommonArgs& args, const std::string& out_path,
                 const std::string& reports_path) {
  const auto config = load(cmd, args);
  const Topology topo = Topology::build_clos(config.topology);
  const Trace trace = obtain_trace(config, topo, config.trace.seed);
  {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    save_trace(trace, out);
  }
  const auto part = classify_ground_truth(trace, config.elephant_threshold_bytes);
  std::printf("wrote %s: %zu flows, %zu elephants, fingerprint %s\n", out_path.c_str(), trace.flows.size(),
              part.elephants.size(), trace_fingerprint(trace).c_str());
  if (!reports_path.empty()) {
    DetectorConfig d = config.detector;
    d.seed = derive_seeds(config, config.trace.seed).detector;
    const auto reports = make_reports(trace, config.elephant_threshold_bytes, d);
    std::ofstream out(reports_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + reports_path);
    save_reports(reports, out);
    std::printf("wrote %s: %zu reports\n", reports_path.c_str(), reports.size());
  }
  return 0;
}

int cmd_run(const CLI::App* cmd, const CommonArgs& args) {
  const auto config = load(cmd, args);
  const CellSpec cell = single_cell(config);
  const Topology topo = Topology::build_clos(config.topology);
  const Trace trace = obtain_trace(config, topo, cell.seed);
  const auto outcome = run_cell(config, cell, topo, trace, true);
  print_row(outcome.row);
  std::printf("results in %s\n", config.output_dir.c_str());
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const CommonArgs& args, bool quiet) {
  const auto config = load(cmd, args);
  const auto outcome = run_sweep(config, quiet ? nullptr : &std::cerr);
  std::printf("%zu cells completed, %zu failed; aggregate in %s\n", outcome.rows.size(), outcome.failures.size(),
              (fs::path(config.output_dir) / "aggregate.csv").string().c_str());
  for (const auto& f : outcome.failures) std::fprintf(stderr, "failed %s: %s\n", f.cell.c_str(), f.error.c_str());
  return outcome.failures.empty() ? 0 : 1;
}

int cmd_summarize(const std::string& aggregate, std::string out_dir) {
  std::ifstream in(aggregate, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + aggregate);
  const auto rows = read_aggregate(in);
  const auto tables = summarize(rows);
  if (out_dir.empty()) out_dir = fs::path(aggregate).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  fs::create_directories(out_dir);
  std::ofstream per_seed(fs::path(out_dir) / "summary_per_seed.csv", std::ios::binary);
  std::ofstream across(fs::path(out_dir) / "summary_across_seeds.csv", std::ios::binary);
  std::ofstream resources(fs::path(out_dir) / "summary_resources.csv", std::ios::binary);
  if (!per_seed || !across || !resources) throw std::runtime_error("cannot write summaries to " + out_dir);
  write_summary(tables, per_seed, across, resources);
  for (const auto& a : tables.across_seeds) {
    std::printf("%-40s seeds=%zu mean_fct=%.6f s  vs ecmp %+.2f%%\n", a.variant.c_str(), a.seeds, a.mean_fct_s,
                a.reduction_of_means_pct);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-level data-center traffic engineering simulator"};
  app.require_subcommand(1);

  CommonArgs gen_args, run_args, sweep_args;
  std::string trace_out, reports_out, aggregate_in, summary_dir;
  bool quiet = false;

  auto* gen = app.add_subcommand("generate", "generate a flow trace");
  add_common(gen, gen_args);
  gen->add_option("-o,--out", trace_out, "trace file to write")->required();
  gen->add_option("--reports", reports_out, "also write detector reports for the trace");

  auto* run = app.add_subcommand("run", "run a single cell");
  add_common(run, run_args);

  auto* sweep = app.add_subcommand("sweep", "run the sweep matrix");
  add_common(sweep, sweep_args);
  sweep->add_flag("-q,--quiet", quiet, "no per-cell progress");

  auto* summ = app.add_subcommand("summarize", "compare cells of an aggregate CSV against ECMP");
  summ->add_option("aggregate", aggregate_in, "aggregate.csv")->required()->check(CLI::ExistingFile);
  summ->add_option("-o,--out", summary_dir, "directory for summary CSVs (default: beside the aggregate)");

  auto* schema = app.add_subcommand("schema", "print the config schema");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(gen, gen_args, trace_out, reports_out);
    if (*run) return cmd_run(run, run_args);
    if (*sweep) return cmd_sweep(sweep, sweep_args, quiet);
    if (*summ) return cmd_summarize(aggregate_in, summary_dir);
    if (*schema) {
      std::cout << config_schema_text();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
