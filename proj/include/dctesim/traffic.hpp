#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctesim/topology.hpp"

namespace dctesim {

using FlowId = std::uint64_t;

// One Layer-4 transfer.
struct FlowSpec {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
  std::uint64_t bytes = 0;
  double start_time = 0.0;  // seconds, microsecond-quantized

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

struct Trace {
  std::vector<FlowSpec> flows;  // sorted by (start_time, flow_id)
  double duration_s = 0.0;
  bool resorted = false;  // set by load_trace when the input was out of order

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.duration_s == b.duration_s && a.flows == b.flows;
  }
};

struct TraceParams {
  double duration_s = 60.0;
  double mean_flow_bytes = 146e3;
  double fraction_small = 0.8;
  std::uint64_t small_cutoff_bytes = 10'000;
  double flows_per_host_per_second = 100.0;
  std::uint64_t seed = 1;
  std::uint64_t min_flow_bytes = 64;
  std::uint64_t max_flow_bytes = 1'000'000'000;
};

// Uniform small-flow component on [min, cutoff) plus a Pareto tail on
// [cutoff, max] whose shape is solved so the mixture mean hits the target.
struct SizeMixture {
  double fraction_small = 0.0;
  double small_min = 0.0;
  double small_cutoff = 0.0;
  double tail_shape = 0.0;
  double tail_max = 0.0;

  double mean() const;
  double tail_mean() const;
  double sample(double u_component, double u_value) const;
};

SizeMixture solve_size_mixture(const TraceParams& params);

Trace generate_trace(const Topology& topology, const TraceParams& params);

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, std::string field, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + " (" + field + "): " + what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

inline constexpr const char* kTraceHeader = "# dctesim-trace v1";

void save_trace(const Trace& trace, std::ostream& out);
Trace load_trace(std::istream& in);

struct FlowPartition {
  std::vector<FlowId> elephants;
  std::vector<FlowId> mice;
};

constexpr bool is_elephant(std::uint64_t bytes, std::uint64_t threshold) { return bytes > threshold; }

FlowPartition classify_ground_truth(const Trace& trace, std::uint64_t elephant_threshold_bytes);

// Stable content hash, used to check that compared cells replayed the same trace.
std::string trace_fingerprint(const Trace& trace);

}  // namespace dctesim
