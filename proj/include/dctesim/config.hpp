#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dctesim/detection.hpp"
#include "dctesim/flow_table.hpp"
#include "dctesim/te_baselines.hpp"
#include "dctesim/te_hybrid.hpp"
#include "dctesim/topology.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

enum class Scheme { Ecmp, EcmpAccounting, Hedera, HybridTe };

std::string to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

struct SweepSpec {
  std::vector<Scheme> schemes;
  std::vector<double> load_levels;
  std::vector<double> fn_rates;
  std::vector<double> fp_rates;
  std::vector<double> delays_s;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = 1;
};

struct ExperimentConfig {
  ClosParams topology{.pods = 4, .racks_per_pod = 4, .hosts_per_rack = 10};  // desk scale
  TraceParams trace;
  std::string trace_file;  // empty: generate from `trace`

  Scheme scheme = Scheme::HybridTe;
  std::uint64_t ecmp_seed = 1;
  HederaOptions hedera;
  double reroute_period_s = 5.0;
  std::uint64_t routing_seed = 1;
  bool fill_unreached = true;
  MatchMode match_mode = MatchMode::Subnet;

  DetectorConfig detector;
  std::string reports_file;  // empty: derive from the detector model

  double load_level = 1.0;
  bool allow_load_below_one = false;
  std::uint64_t elephant_threshold_bytes = 10'000'000;

  double idle_timeout_s = 5.0;
  double drain_s = 60.0;  // simulation stops at trace duration + drain
  double stats_period_s = 1.0;

  std::string output_dir = "out";
  std::string cell;  // empty: derived from the cell parameters
  std::size_t flow_records_max = 5'000'000;
  bool write_decisions = true;

  SweepSpec sweep;
};

// Syntax errors carry line and column; schema errors additionally carry the
// JSON pointer of the offending value (line/column 0 when the value came
// from an override rather than the file).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string pointer = {}, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), pointer_(std::move(pointer)), line_(line), column_(column) {}
  const std::string& pointer() const { return pointer_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string pointer_;
  std::size_t line_;
  std::size_t column_;
};

// Parses and validates a config document. `overrides` are "a.b=value"
// assignments applied before validation; a value that is not valid JSON is
// taken as a string.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                              std::string_view origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Human-readable schema listing: one "pointer  type  description" per key.
std::string config_schema_text();

// Line/column (1-based) of the value at `pointer` in JSON text; {0,0} when absent.
std::pair<std::size_t, std::size_t> locate_json_pointer(std::string_view text, std::string_view pointer);

}  // namespace dctesim
