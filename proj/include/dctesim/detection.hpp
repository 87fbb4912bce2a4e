#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dctesim/control.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

struct DetectorConfig {
  double fn_rate = 0.0;  // share of true elephants never reported
  double fp_rate = 0.0;  // share of mice reported anyway
  double delay_s = 0.0;
  std::uint64_t seed = 1;
};

void validate(const DetectorConfig& config);

struct ElephantReport {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
  double report_time = 0.0;
  bool is_true_elephant = false;  // analysis only

  friend bool operator==(const ElephantReport&, const ElephantReport&) = default;
};

// Every flow gets one seeded uniform draw u. Elephants are reported when
// u >= fn_rate and mice when u < fp_rate, so raising either rate only adds
// or removes reports at the margin.
std::vector<ElephantReport> make_reports(const Trace& trace, std::uint64_t elephant_threshold_bytes,
                                         const DetectorConfig& config);

// Strips the ground-truth flag.
std::vector<ReportedFlow> controller_view(const std::vector<ElephantReport>& reports);

// CSV "flow_id,report_time_s".
void save_reports(const std::vector<ElephantReport>& reports, std::ostream& out);
// Hosts are taken from the trace; unknown flow ids are rejected.
std::vector<ReportedFlow> load_reports(std::istream& in, const Trace& trace);

}  // namespace dctesim
