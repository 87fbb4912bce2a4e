#include "dctesim/summary.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dctesim {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) return out;
    pos = comma + 1;
  }
}

template <typename T>
T parse_num(const std::string& s, std::size_t line, const char* column) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw SummaryError("aggregate line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
  }
  return v;
}

const AggregateRow* find_baseline(const std::vector<AggregateRow>& rows, const AggregateRow& r) {
  const AggregateRow* fallback = nullptr;
  for (const auto& b : rows) {
    if (b.seed != r.seed || b.load_level != r.load_level) continue;
    if (b.scheme == "ecmp") return &b;
    if (b.scheme == "ecmp_accounting" && !fallback) fallback = &b;
  }
  return fallback;
}

}  // namespace

std::string AggregateRow::variant() const {
  char buf[160];
  if (scheme == "hybridte") {
    std::snprintf(buf, sizeof buf, "%s_l%g_fn%g_fp%g_d%g", scheme.c_str(), load_level, fn_rate, fp_rate, delay_s);
  } else {
    std::snprintf(buf, sizeof buf, "%s_l%g", scheme.c_str(), load_level);
  }
  return buf;
}

std::string aggregate_header() {
  return "cell,scheme,load_level,seed,fn_rate,fp_rate,delay_s,trace_fingerprint,flows,completed,incomplete,"
         "mean_fct_s,median_fct_s,p99_fct_s,max_exact_entries,tracked_elephants_max,peak_install_rate_fabric,"
         "mean_install_rate_fabric,gff_violations,reduction_vs_baseline_pct";
}

void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << aggregate_header() << '\n';
  for (const auto& r : rows) {
    out << r.cell << ',' << r.scheme << ',' << num(r.load_level) << ',' << r.seed << ',' << num(r.fn_rate) << ','
        << num(r.fp_rate) << ',' << num(r.delay_s) << ',' << r.trace_fingerprint << ',' << r.flows << ','
        << r.completed << ',' << r.incomplete << ',' << num(r.mean_fct_s) << ',' << num(r.median_fct_s) << ','
        << num(r.p99_fct_s) << ',' << r.max_exact_entries << ',' << num(r.tracked_elephants_max) << ','
        << num(r.peak_install_rate_fabric) << ',' << num(r.mean_install_rate_fabric) << ','
        << num(r.gff_violations) << ',';
    if (r.reduction_vs_baseline_pct) out << num(*r.reduction_vs_baseline_pct);
    out << '\n';
  }
}

std::vector<AggregateRow> read_aggregate(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SummaryError("aggregate file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != aggregate_header()) throw SummaryError("aggregate file has an unexpected header");
  const std::size_t columns = split(aggregate_header()).size();

  std::vector<AggregateRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != columns) {
      throw SummaryError("aggregate line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                         " columns, got " + std::to_string(f.size()));
    }
    AggregateRow r;
    r.cell = f[0];
    r.scheme = f[1];
    r.load_level = parse_num<double>(f[2], lineno, "load_level");
    r.seed = parse_num<std::uint64_t>(f[3], lineno, "seed");
    r.fn_rate = parse_num<double>(f[4], lineno, "fn_rate");
    r.fp_rate = parse_num<double>(f[5], lineno, "fp_rate");
    r.delay_s = parse_num<double>(f[6], lineno, "delay_s");
    r.trace_fingerprint = f[7];
    r.flows = parse_num<std::size_t>(f[8], lineno, "flows");
    r.completed = parse_num<std::size_t>(f[9], lineno, "completed");
    r.incomplete = parse_num<std::size_t>(f[10], lineno, "incomplete");
    r.mean_fct_s = parse_num<double>(f[11], lineno, "mean_fct_s");
    r.median_fct_s = parse_num<double>(f[12], lineno, "median_fct_s");
    r.p99_fct_s = parse_num<double>(f[13], lineno, "p99_fct_s");
    r.max_exact_entries = parse_num<std::size_t>(f[14], lineno, "max_exact_entries");
    r.tracked_elephants_max = parse_num<double>(f[15], lineno, "tracked_elephants_max");
    r.peak_install_rate_fabric = parse_num<double>(f[16], lineno, "peak_install_rate_fabric");
    r.mean_install_rate_fabric = parse_num<double>(f[17], lineno, "mean_install_rate_fabric");
    r.gff_violations = parse_num<double>(f[18], lineno, "gff_violations");
    if (!f[19].empty()) r.reduction_vs_baseline_pct = parse_num<double>(f[19], lineno, "reduction_vs_baseline_pct");
    rows.push_back(std::move(r));
  }
  return rows;
}

double reduction_pct(double baseline_mean, double mean) {
  if (!(baseline_mean > 0.0)) throw SummaryError("baseline mean FCT must be positive");
  return 100.0 * (baseline_mean - mean) / baseline_mean;
}

void attach_baseline_reductions(std::vector<AggregateRow>& rows) {
  for (auto& r : rows) {
    const AggregateRow* b = find_baseline(rows, r);
    if (b && b->trace_fingerprint == r.trace_fingerprint && b->mean_fct_s > 0.0) {
      r.reduction_vs_baseline_pct = reduction_pct(b->mean_fct_s, r.mean_fct_s);
    } else {
      r.reduction_vs_baseline_pct.reset();
    }
  }
}

SummaryTables summarize(const std::vector<AggregateRow>& rows) {
  SummaryTables out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<const AggregateRow*, const AggregateRow*>>> groups;

  for (const auto& r : rows) {
    const AggregateRow* b = find_baseline(rows, r);
    if (!b) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "ecmp_l%g_s%llu", r.load_level, static_cast<unsigned long long>(r.seed));
      throw SummaryError("missing ECMP baseline cell " + std::string(buf) + " for cell " + r.cell);
    }
    if (b->trace_fingerprint != r.trace_fingerprint) {
      throw SummaryError("cell " + r.cell + " replayed trace " + r.trace_fingerprint + " but baseline " + b->cell +
                         " replayed " + b->trace_fingerprint);
    }
    PerSeedRow p;
    p.cell = r.cell;
    p.variant = r.variant();
    p.seed = r.seed;
    p.baseline_cell = b->cell;
    p.mean_fct_s = r.mean_fct_s;
    p.baseline_mean_fct_s = b->mean_fct_s;
    p.reduction_pct = reduction_pct(b->mean_fct_s, r.mean_fct_s);
    out.per_seed.push_back(p);

    if (!groups.count(p.variant)) order.push_back(p.variant);
    groups[p.variant].push_back({&r, b});
  }

  for (const auto& v : order) {
    const auto& members = groups[v];
    AcrossSeedRow a;
    a.variant = v;
    a.scheme = members.front().first->scheme;
    a.load_level = members.front().first->load_level;
    a.fn_rate = members.front().first->fn_rate;
    a.fp_rate = members.front().first->fp_rate;
    a.delay_s = members.front().first->delay_s;
    a.seeds = members.size();
    double reductions = 0.0;
    for (const auto& [r, b] : members) {
      a.mean_fct_s += r->mean_fct_s;
      a.baseline_mean_fct_s += b->mean_fct_s;
      reductions += reduction_pct(b->mean_fct_s, r->mean_fct_s);
    }
    a.mean_fct_s /= static_cast<double>(a.seeds);
    a.baseline_mean_fct_s /= static_cast<double>(a.seeds);
    a.reduction_of_means_pct = reduction_pct(a.baseline_mean_fct_s, a.mean_fct_s);
    a.mean_of_reductions_pct = reductions / static_cast<double>(a.seeds);
    out.across_seeds.push_back(a);
  }

  std::vector<std::string> schemes;
  for (const auto& r : rows) {
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) schemes.push_back(r.scheme);
  }
  for (const auto& s : schemes) {
    ResourceRow res;
    res.scheme = s;
    for (const auto& r : rows) {
      if (r.scheme != s) continue;
      res.max_exact_entries = std::max(res.max_exact_entries, r.max_exact_entries);
      res.tracked_elephants_max = std::max(res.tracked_elephants_max, r.tracked_elephants_max);
      res.peak_install_rate_fabric = std::max(res.peak_install_rate_fabric, r.peak_install_rate_fabric);
      res.mean_install_rate_fabric = std::max(res.mean_install_rate_fabric, r.mean_install_rate_fabric);
    }
    out.resources.push_back(res);
  }
  return out;
}

void write_summary(const SummaryTables& t, std::ostream& per_seed, std::ostream& across, std::ostream& resources) {
  per_seed << "cell,variant,seed,baseline_cell,mean_fct_s,baseline_mean_fct_s,reduction_pct\n";
  for (const auto& p : t.per_seed) {
    per_seed << p.cell << ',' << p.variant << ',' << p.seed << ',' << p.baseline_cell << ',' << num(p.mean_fct_s)
             << ',' << num(p.baseline_mean_fct_s) << ',' << num(p.reduction_pct) << '\n';
  }
  across << "variant,scheme,load_level,fn_rate,fp_rate,delay_s,seeds,mean_fct_s,baseline_mean_fct_s,"
            "reduction_of_means_pct,mean_of_reductions_pct\n";
  for (const auto& a : t.across_seeds) {
    across << a.variant << ',' << a.scheme << ',' << num(a.load_level) << ',' << num(a.fn_rate) << ','
           << num(a.fp_rate) << ',' << num(a.delay_s) << ',' << a.seeds << ',' << num(a.mean_fct_s) << ','
           << num(a.baseline_mean_fct_s) << ',' << num(a.reduction_of_means_pct) << ','
           << num(a.mean_of_reductions_pct) << '\n';
  }
  resources << "scheme,max_exact_entries,tracked_elephants_max,peak_install_rate_fabric,mean_install_rate_fabric\n";
  for (const auto& r : t.resources) {
    resources << r.scheme << ',' << r.max_exact_entries << ',' << num(r.tracked_elephants_max) << ','
              << num(r.peak_install_rate_fabric) << ',' << num(r.mean_install_rate_fabric) << '\n';
  }
}

}  // namespace dctesim
