#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dctesim/config.hpp"
#include "dctesim/control.hpp"
#include "dctesim/engine.hpp"
#include "dctesim/summary.hpp"
#include "dctesim/topology.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

// Divides fabric capacities by `load_level`; host links are untouched.
Topology apply_load_level(const Topology& topology, double load_level, bool allow_below_one = false);

struct CellSpec {
  std::string name;
  Scheme scheme = Scheme::HybridTe;
  double load_level = 1.0;
  std::uint64_t seed = 1;  // trace seed; the other seeds are derived from it
  DetectorConfig detector;
};

struct DerivedSeeds {
  std::uint64_t trace;
  std::uint64_t routing;
  std::uint64_t ecmp;
  std::uint64_t detector;
};
DerivedSeeds derive_seeds(const ExperimentConfig& config, std::uint64_t seed);

std::string cell_name(Scheme scheme, double load_level, std::uint64_t seed, const DetectorConfig& detector);

// The single cell described by the config's top-level scheme/load/detector.
CellSpec single_cell(const ExperimentConfig& config);
// schemes x load levels x seeds, with the detector grid applied to HybridTE.
std::vector<CellSpec> expand_sweep(const ExperimentConfig& config);

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config, const CellSpec& cell);

Trace obtain_trace(const ExperimentConfig& config, const Topology& topology, std::uint64_t seed);

struct CellOutcome {
  CellSpec spec;
  AggregateRow row;
  SimulationResult result;
};

// Runs one cell; writes its CSVs when `write_files` is set.
CellOutcome run_cell(const ExperimentConfig& config, const CellSpec& cell, const Topology& base_topology,
                     const Trace& trace, bool write_files = true);

AggregateRow summarize_cell(const CellSpec& cell, const Trace& trace, const SimulationResult& result);

void write_cell_files(const ExperimentConfig& config, const CellOutcome& outcome, const Trace& trace);

struct CellFailure {
  std::string cell;
  std::string error;
};

struct SweepOutcome {
  std::vector<AggregateRow> rows;  // completed cells in sweep order
  std::vector<CellFailure> failures;
};

// Progress lines go to `log` when given.
SweepOutcome run_sweep(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace dctesim
