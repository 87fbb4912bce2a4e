#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dctesim {

// One completed cell as it appears in aggregate.csv.
struct AggregateRow {
  std::string cell;
  std::string scheme;
  double load_level = 1.0;
  std::uint64_t seed = 0;
  double fn_rate = 0.0;
  double fp_rate = 0.0;
  double delay_s = 0.0;
  std::string trace_fingerprint;
  std::size_t flows = 0;
  std::size_t completed = 0;
  std::size_t incomplete = 0;
  double mean_fct_s = 0.0;
  double median_fct_s = 0.0;
  double p99_fct_s = 0.0;
  std::size_t max_exact_entries = 0;
  double tracked_elephants_max = 0.0;
  double peak_install_rate_fabric = 0.0;
  double mean_install_rate_fabric = 0.0;
  double gff_violations = 0.0;
  std::optional<double> reduction_vs_baseline_pct;

  // Cells that vary only by seed share a variant key.
  std::string variant() const;
};

class SummaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string aggregate_header();
void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out);
std::vector<AggregateRow> read_aggregate(std::istream& in);

// Percent reduction of mean FCT relative to a baseline; positive = faster.
double reduction_pct(double baseline_mean, double mean);

// Fills reduction_vs_baseline_pct from the ECMP cell with the same seed and
// load level. Cells without such a baseline keep an empty value.
void attach_baseline_reductions(std::vector<AggregateRow>& rows);

struct PerSeedRow {
  std::string cell;
  std::string variant;
  std::uint64_t seed = 0;
  std::string baseline_cell;
  double mean_fct_s = 0.0;
  double baseline_mean_fct_s = 0.0;
  double reduction_pct = 0.0;
};

struct AcrossSeedRow {
  std::string variant;
  std::string scheme;
  double load_level = 1.0;
  double fn_rate = 0.0;
  double fp_rate = 0.0;
  double delay_s = 0.0;
  std::size_t seeds = 0;
  double mean_fct_s = 0.0;           // mean over seeds
  double baseline_mean_fct_s = 0.0;  // mean over the same seeds
  double reduction_of_means_pct = 0.0;
  double mean_of_reductions_pct = 0.0;
};

struct ResourceRow {
  std::string scheme;
  std::size_t max_exact_entries = 0;
  double tracked_elephants_max = 0.0;
  double peak_install_rate_fabric = 0.0;
  double mean_install_rate_fabric = 0.0;
};

struct SummaryTables {
  std::vector<PerSeedRow> per_seed;
  std::vector<AcrossSeedRow> across_seeds;
  std::vector<ResourceRow> resources;
};

// Relative FCT differences against the ECMP cell of the same seed and load.
// Throws SummaryError when a compared cell has no baseline or replayed a
// different trace than its baseline.
SummaryTables summarize(const std::vector<AggregateRow>& rows);

void write_summary(const SummaryTables& tables, std::ostream& per_seed, std::ostream& across_seeds,
                   std::ostream& resources);

}  // namespace dctesim
