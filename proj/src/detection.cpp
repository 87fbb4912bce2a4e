#include "dctesim/detection.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dctesim/random.hpp"

namespace dctesim {

void validate(const DetectorConfig& c) {
  if (!(c.fn_rate >= 0.0 && c.fn_rate <= 1.0)) throw std::invalid_argument("fn_rate must lie in [0, 1]");
  if (!(c.fp_rate >= 0.0 && c.fp_rate <= 1.0)) throw std::invalid_argument("fp_rate must lie in [0, 1]");
  if (!(c.delay_s >= 0.0)) throw std::invalid_argument("detector delay must be >= 0");
}

std::vector<ElephantReport> make_reports(const Trace& trace, std::uint64_t threshold, const DetectorConfig& config) {
  validate(config);
  std::vector<ElephantReport> out;
  for (const FlowSpec& f : trace.flows) {
    const double u = unit_interval(hash_combine(config.seed, f.flow_id));
    const bool elephant = is_elephant(f.bytes, threshold);
    const bool reported = elephant ? u >= config.fn_rate : u < config.fp_rate;
    if (reported) out.push_back({f.flow_id, f.src_host, f.dst_host, f.start_time + config.delay_s, elephant});
  }
  std::stable_sort(out.begin(), out.end(), [](const ElephantReport& a, const ElephantReport& b) {
    return a.report_time != b.report_time ? a.report_time < b.report_time : a.flow_id < b.flow_id;
  });
  return out;
}

std::vector<ReportedFlow> controller_view(const std::vector<ElephantReport>& reports) {
  std::vector<ReportedFlow> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back({r.flow_id, r.src_host, r.dst_host, r.report_time});
  return out;
}

void save_reports(const std::vector<ElephantReport>& reports, std::ostream& out) {
  out << "flow_id,report_time_s\n";
  char buf[64];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g\n", static_cast<unsigned long long>(r.flow_id), r.report_time);
    out << buf;
  }
}

std::vector<ReportedFlow> load_reports(std::istream& in, const Trace& trace) {
  std::unordered_map<FlowId, const FlowSpec*> by_id;
  for (const FlowSpec& f : trace.flows) by_id.emplace(f.flow_id, &f);

  std::vector<ReportedFlow> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || (lineno == 1 && line.rfind("flow_id", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("reports line " + std::to_string(lineno) + ": expected flow_id,report_time_s");
    }
    FlowId id = 0;
    double t = 0.0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, id);
    auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), t);
    if (r1.ec != std::errc{} || r1.ptr != line.data() + comma || r2.ec != std::errc{} ||
        r2.ptr != line.data() + line.size()) {
      throw std::runtime_error("reports line " + std::to_string(lineno) + ": malformed field");
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::runtime_error("reports line " + std::to_string(lineno) + ": flow " + std::to_string(id) +
                               " is not in the trace");
    }
    if (t < it->second->start_time) {
      throw std::runtime_error("reports line " + std::to_string(lineno) + ": report precedes flow start");
    }
    out.push_back({id, it->second->src_host, it->second->dst_host, t});
  }
  std::stable_sort(out.begin(), out.end(), [](const ReportedFlow& a, const ReportedFlow& b) {
    return a.report_time != b.report_time ? a.report_time < b.report_time : a.flow_id < b.flow_id;
  });
  return out;
}

}  // namespace dctesim
