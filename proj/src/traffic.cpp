#include "dctesim/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_set>

#include "dctesim/random.hpp"

namespace dctesim {

namespace {

double truncated_pareto_mean(double shape, double lo, double hi) {
  const double z = 1.0 - std::pow(lo / hi, shape);
  if (std::abs(shape - 1.0) < 1e-9) return lo * std::log(hi / lo) / z;
  return shape * std::pow(lo, shape) * (std::pow(hi, 1.0 - shape) - std::pow(lo, 1.0 - shape)) /
         ((1.0 - shape) * z);
}

double quantize_us(double t) { return std::round(t * 1e6) / 1e6; }

}  // namespace

double SizeMixture::tail_mean() const { return truncated_pareto_mean(tail_shape, small_cutoff, tail_max); }

double SizeMixture::mean() const {
  const double small_mean = (small_min + small_cutoff - 1.0) / 2.0;
  return fraction_small * small_mean + (1.0 - fraction_small) * tail_mean();
}

double SizeMixture::sample(double u_component, double u_value) const {
  if (u_component < fraction_small) return std::floor(small_min + u_value * (small_cutoff - small_min));
  const double floor_mass = std::pow(small_cutoff / tail_max, tail_shape);
  const double x = small_cutoff / std::pow(1.0 - u_value * (1.0 - floor_mass), 1.0 / tail_shape);
  return std::floor(std::min(x, tail_max));
}

SizeMixture solve_size_mixture(const TraceParams& p) {
  if (!(p.fraction_small > 0.0 && p.fraction_small < 1.0)) {
    throw std::invalid_argument("fraction_small must lie in (0, 1)");
  }
  if (p.min_flow_bytes < 1 || p.small_cutoff_bytes <= p.min_flow_bytes ||
      p.max_flow_bytes <= p.small_cutoff_bytes) {
    throw std::invalid_argument("flow size bounds must satisfy 1 <= min < small_cutoff < max");
  }
  if (!(p.mean_flow_bytes > 0.0)) throw std::invalid_argument("mean_flow_bytes must be positive");

  SizeMixture m;
  m.fraction_small = p.fraction_small;
  m.small_min = static_cast<double>(p.min_flow_bytes);
  m.small_cutoff = static_cast<double>(p.small_cutoff_bytes);
  m.tail_max = static_cast<double>(p.max_flow_bytes);

  const double small_mean = (m.small_min + m.small_cutoff - 1.0) / 2.0;
  const double want_tail = (p.mean_flow_bytes - p.fraction_small * small_mean) / (1.0 - p.fraction_small);

  // The truncated tail mean falls monotonically from (max-c)/ln(max/c) as the
  // shape -> 0 towards the cutoff as the shape grows.
  double lo = 1e-6;
  double hi = 64.0;
  if (!(want_tail > truncated_pareto_mean(hi, m.small_cutoff, m.tail_max)) ||
      !(want_tail < truncated_pareto_mean(lo, m.small_cutoff, m.tail_max))) {
    throw std::invalid_argument("no size mixture reaches the requested mean flow size");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_pareto_mean(mid, m.small_cutoff, m.tail_max) > want_tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  m.tail_shape = 0.5 * (lo + hi);
  return m;
}

Trace generate_trace(const Topology& topology, const TraceParams& p) {
  const std::uint32_t hosts = topology.host_count();
  if (hosts < 2) throw std::invalid_argument("generate_trace: topology needs at least two hosts");
  if (!(p.duration_s > 0.0)) throw std::invalid_argument("generate_trace: duration must be positive");
  if (!(p.flows_per_host_per_second >= 0.0)) {
    throw std::invalid_argument("generate_trace: flows_per_host_per_second must be >= 0");
  }
  const SizeMixture sizes = solve_size_mixture(p);

  Trace trace;
  trace.duration_s = p.duration_s;
  if (p.flows_per_host_per_second == 0.0) return trace;

  // Superposition of per-host Poisson processes: one process at the total
  // rate with the sender drawn uniformly.
  const double total_rate = p.flows_per_host_per_second * hosts;
  trace.flows.reserve(static_cast<std::size_t>(total_rate * p.duration_s * 1.05) + 16);
  Rng rng(p.seed);
  double t = 0.0;
  for (FlowId id = 0;; ++id) {
    t += -std::log1p(-rng.uniform01()) / total_rate;
    const double start = quantize_us(t);
    if (start >= p.duration_s) break;
    FlowSpec f;
    f.flow_id = id;
    f.start_time = start;
    f.src_host = static_cast<HostIndex>(rng.below(hosts));
    f.dst_host = static_cast<HostIndex>(rng.below(hosts - 1));
    if (f.dst_host >= f.src_host) ++f.dst_host;
    const double u_component = rng.uniform01();
    const double u_value = rng.uniform01();
    f.bytes = static_cast<std::uint64_t>(sizes.sample(u_component, u_value));
    trace.flows.push_back(f);
  }
  return trace;
}

void save_trace(const Trace& trace, std::ostream& out) {
  char buf[160];
  out << kTraceHeader << '\n';
  std::snprintf(buf, sizeof buf, "# duration_s=%.17g\n", trace.duration_s);
  out << buf;
  for (const FlowSpec& f : trace.flows) {
    std::snprintf(buf, sizeof buf, "%llu,%.6f,%u,%u,%llu\n", static_cast<unsigned long long>(f.flow_id),
                  f.start_time, f.src_host, f.dst_host, static_cast<unsigned long long>(f.bytes));
    out << buf;
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* field) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw TraceParseError(line, field, "cannot parse '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Trace load_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_duration = false;
  std::unordered_set<FlowId> seen;

  if (!std::getline(in, line)) throw TraceParseError(1, "header", "missing header line");
  lineno = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw TraceParseError(1, "header", "expected '" + std::string(kTraceHeader) + "'");

  std::vector<std::size_t> line_of_flow;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view key = "# duration_s=";
      if (std::string_view(line).substr(0, key.size()) == key) {
        trace.duration_s = parse_field<double>(std::string_view(line).substr(key.size()), lineno, "duration_s");
        if (!(trace.duration_s >= 0.0)) throw TraceParseError(lineno, "duration_s", "must be >= 0");
        have_duration = true;
      }
      continue;
    }

    std::string_view rest(line);
    std::string_view fields[5];
    std::size_t n = 0;
    while (n < 5) {
      const auto comma = rest.find(',');
      fields[n++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) {
        rest = {};
        break;
      }
      rest.remove_prefix(comma + 1);
      if (n == 5) throw TraceParseError(lineno, "line", "more than 5 fields");
    }
    if (n != 5) throw TraceParseError(lineno, "line", "expected 5 comma-separated fields");

    FlowSpec f;
    f.flow_id = parse_field<FlowId>(fields[0], lineno, "flow_id");
    f.start_time = parse_field<double>(fields[1], lineno, "start_time_s");
    f.src_host = parse_field<HostIndex>(fields[2], lineno, "src_host");
    f.dst_host = parse_field<HostIndex>(fields[3], lineno, "dst_host");
    f.bytes = parse_field<std::uint64_t>(fields[4], lineno, "bytes");
    if (!(f.start_time >= 0.0) || !std::isfinite(f.start_time)) {
      throw TraceParseError(lineno, "start_time_s", "must be a finite value >= 0");
    }
    if (f.src_host == f.dst_host) throw TraceParseError(lineno, "dst_host", "source equals destination");
    if (f.bytes == 0) throw TraceParseError(lineno, "bytes", "must be >= 1");
    if (!seen.insert(f.flow_id).second) throw TraceParseError(lineno, "flow_id", "duplicate flow id");
    trace.flows.push_back(f);
    line_of_flow.push_back(lineno);
  }

  for (std::size_t i = 0; i < trace.flows.size(); ++i) {
    if (have_duration && trace.flows[i].start_time >= trace.duration_s) {
      throw TraceParseError(line_of_flow[i], "start_time_s", "flow starts at or after the trace duration");
    }
  }
  auto order = [](const FlowSpec& a, const FlowSpec& b) {
    return a.start_time != b.start_time ? a.start_time < b.start_time : a.flow_id < b.flow_id;
  };
  if (!std::is_sorted(trace.flows.begin(), trace.flows.end(), order)) {
    std::sort(trace.flows.begin(), trace.flows.end(), order);
    trace.resorted = true;
  }
  if (!have_duration) trace.duration_s = trace.flows.empty() ? 0.0 : trace.flows.back().start_time + 1e-6;
  return trace;
}

FlowPartition classify_ground_truth(const Trace& trace, std::uint64_t threshold) {
  FlowPartition out;
  for (const FlowSpec& f : trace.flows) {
    (is_elephant(f.bytes, threshold) ? out.elephants : out.mice).push_back(f.flow_id);
  }
  return out;
}

std::string trace_fingerprint(const Trace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(std::llround(trace.duration_s * 1e6)));
  for (const FlowSpec& f : trace.flows) {
    feed(f.flow_id);
    feed(static_cast<std::uint64_t>(std::llround(f.start_time * 1e6)));
    feed(f.src_host);
    feed(f.dst_host);
    feed(f.bytes);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dctesim
