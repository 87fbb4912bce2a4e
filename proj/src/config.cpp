#include "dctesim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace dctesim {

using nlohmann::json;

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Ecmp: return "ecmp";
    case Scheme::EcmpAccounting: return "ecmp_accounting";
    case Scheme::Hedera: return "hedera";
    case Scheme::HybridTe: return "hybridte";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "ecmp") return Scheme::Ecmp;
  if (text == "ecmp_accounting") return Scheme::EcmpAccounting;
  if (text == "hedera") return Scheme::Hedera;
  if (text == "hybridte") return Scheme::HybridTe;
  throw std::invalid_argument("unknown scheme '" + std::string(text) + "'");
}

namespace {

enum class Kind { Object, Uint, Number, Bool, String, Enum, NumberList, UintList, SchemeList };

struct Field {
  const char* pointer;
  Kind kind;
  const char* doc;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  std::vector<std::string> choices = {};
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"/topology", Kind::Object, "Clos fabric shape"},
      {"/topology/pods", Kind::Uint, "number of pods", 1, 1 << 20},
      {"/topology/racks_per_pod", Kind::Uint, "racks in each pod", 1, 1 << 20},
      {"/topology/hosts_per_rack", Kind::Uint, "hosts behind each ToR", 1, 1 << 20},
      {"/topology/pod_switches_per_pod", Kind::Uint, "pod switches in each pod", 1, 1 << 20},
      {"/topology/core_switches", Kind::Uint, "core switches", 1, 1 << 20},
      {"/topology/host_link_bps", Kind::Number, "host NIC and access link capacity", 0, kInf, true},
      {"/topology/fabric_link_bps", Kind::Number, "switch-to-switch link capacity at load 1", 0, kInf, true},

      {"/trace", Kind::Object, "flow trace source"},
      {"/trace/file", Kind::String, "trace file to replay instead of generating one"},
      {"/trace/duration_s", Kind::Number, "arrival window length", 0, kInf, true},
      {"/trace/mean_flow_bytes", Kind::Number, "target mean flow size", 0, kInf, true},
      {"/trace/fraction_small", Kind::Number, "share of flows below the small cutoff", 0, 1, true},
      {"/trace/small_cutoff_bytes", Kind::Uint, "upper bound of the small-flow component", 2},
      {"/trace/min_flow_bytes", Kind::Uint, "smallest flow size", 1},
      {"/trace/max_flow_bytes", Kind::Uint, "tail truncation point", 2},
      {"/trace/flows_per_host_per_second", Kind::Number, "Poisson arrival rate per host", 0},
      {"/trace/seed", Kind::Uint, "trace generator seed"},

      {"/scheme", Kind::Enum, "routing scheme for single runs", -kInf, kInf, false,
       {"ecmp", "ecmp_accounting", "hedera", "hybridte"}},
      {"/load_level", Kind::Number, "divisor applied to fabric link capacities", 0, kInf, true},
      {"/allow_load_below_one", Kind::Bool, "accept load levels below 1"},
      {"/elephant_threshold_bytes", Kind::Uint, "flows larger than this are elephants", 1},

      {"/ecmp", Kind::Object, "ECMP hashing"},
      {"/ecmp/seed", Kind::Uint, "hash seed"},

      {"/hedera", Kind::Object, "Hedera baseline"},
      {"/hedera/period_s", Kind::Number, "poll and reschedule period", 0, kInf, true},
      {"/hedera/threshold_fraction", Kind::Number, "elephant rate threshold as a share of NIC capacity", 0, 1},

      {"/hybridte", Kind::Object, "HybridTE controller"},
      {"/hybridte/reroute_period_s", Kind::Number, "rerouting period", 0, kInf, true},

      {"/routing", Kind::Object, "static forwarding trees"},
      {"/routing/seed", Kind::Uint, "tree randomization seed"},
      {"/routing/fill_unreached", Kind::Bool, "give every switch an entry for every rack"},
      {"/routing/match_mode", Kind::Enum, "wildcard match key", -kInf, kInf, false, {"subnet", "label"}},

      {"/detector", Kind::Object, "elephant report model"},
      {"/detector/fn_rate", Kind::Number, "share of elephants never reported", 0, 1},
      {"/detector/fp_rate", Kind::Number, "share of mice reported", 0, 1},
      {"/detector/delay_s", Kind::Number, "delay from flow start to report", 0},
      {"/detector/seed", Kind::Uint, "detector sampling seed"},
      {"/detector/reports_file", Kind::String, "report CSV to replay instead of sampling"},

      {"/engine", Kind::Object, "simulation engine"},
      {"/engine/idle_timeout_s", Kind::Number, "exact-match idle timeout (0 = none)", 0},
      {"/engine/drain_s", Kind::Number, "time simulated after the last arrival window", 0},
      {"/engine/stats_period_s", Kind::Number, "table occupancy sampling period", 0, kInf, true},

      {"/output", Kind::Object, "result files"},
      {"/output/dir", Kind::String, "output directory"},
      {"/output/cell", Kind::String, "cell name for single runs"},
      {"/output/flow_records_max", Kind::Uint, "skip per-flow records above this flow count"},
      {"/output/write_decisions", Kind::Bool, "write controller decision logs"},

      {"/sweep", Kind::Object, "sweep matrix"},
      {"/sweep/schemes", Kind::SchemeList, "schemes to run"},
      {"/sweep/load_levels", Kind::NumberList, "load levels", 0, kInf, true},
      {"/sweep/fn_rates", Kind::NumberList, "HybridTE false-negative grid", 0, 1},
      {"/sweep/fp_rates", Kind::NumberList, "HybridTE false-positive grid", 0, 1},
      {"/sweep/delays_s", Kind::NumberList, "HybridTE report delay grid", 0},
      {"/sweep/seeds", Kind::UintList, "trace seeds"},
      {"/sweep/jobs", Kind::Uint, "cells run in parallel", 1, 1024},
  };
  return fields;
}

const Field* find_field(const std::string& pointer) {
  for (const Field& f : schema()) {
    if (pointer == f.pointer) return &f;
  }
  return nullptr;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Object: return "object";
    case Kind::Uint: return "nonnegative integer";
    case Kind::Number: return "number";
    case Kind::Bool: return "boolean";
    case Kind::String: return "string";
    case Kind::Enum: return "string";
    case Kind::NumberList: return "array of numbers";
    case Kind::UintList: return "array of nonnegative integers";
    case Kind::SchemeList: return "array of scheme names";
  }
  return "?";
}

bool is_uint(const json& v) {
  if (v.is_number_unsigned()) return true;
  if (v.is_number_integer()) return v.get<std::int64_t>() >= 0;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return d >= 0 && d == std::floor(d) && d < 1.8e19;
  }
  return false;
}

std::string range_text(const Field& f) {
  std::ostringstream s;
  s << (f.min_exclusive ? "> " : ">= ") << f.min;
  if (f.max != kInf) s << " and <= " << f.max;
  return s.str();
}

bool in_range(const Field& f, double x) {
  if (f.min_exclusive ? !(x > f.min) : !(x >= f.min)) return false;
  return x <= f.max;
}

class Validator {
 public:
  Validator(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    auto [line, col] = locate_json_pointer(text_, pointer);
    std::string where = std::string(origin_);
    if (line) where += ":" + std::to_string(line) + ":" + std::to_string(col);
    else where += " (override)";
    throw ConfigError(where + ": " + (pointer.empty() ? "/" : pointer) + ": " + message, pointer, line, col);
  }

  void check(const json& v, const std::string& pointer) const {
    if (pointer.empty()) {
      if (!v.is_object()) fail(pointer, "top level must be an object");
      for (const auto& [key, child] : v.items()) check(child, "/" + key);
      return;
    }
    const Field* f = find_field(pointer);
    if (!f) fail(pointer, "unknown key");
    switch (f->kind) {
      case Kind::Object:
        if (!v.is_object()) fail(pointer, "expected an object");
        for (const auto& [key, child] : v.items()) check(child, pointer + "/" + key);
        return;
      case Kind::Uint:
        if (!is_uint(v)) fail(pointer, "expected a nonnegative integer");
        if (!in_range(*f, v.get<double>())) fail(pointer, "must be " + range_text(*f));
        return;
      case Kind::Number:
        if (!v.is_number()) fail(pointer, "expected a number");
        if (!in_range(*f, v.get<double>())) fail(pointer, "must be " + range_text(*f));
        return;
      case Kind::Bool:
        if (!v.is_boolean()) fail(pointer, "expected true or false");
        return;
      case Kind::String:
        if (!v.is_string()) fail(pointer, "expected a string");
        return;
      case Kind::Enum: {
        if (!v.is_string()) fail(pointer, "expected a string");
        const auto s = v.get<std::string>();
        for (const auto& c : f->choices) {
          if (s == c) return;
        }
        std::string allowed;
        for (const auto& c : f->choices) allowed += (allowed.empty() ? "" : ", ") + c;
        fail(pointer, "'" + s + "' is not one of: " + allowed);
      }
      case Kind::NumberList:
      case Kind::UintList:
      case Kind::SchemeList: {
        if (!v.is_array()) fail(pointer, "expected an array");
        if (v.empty()) fail(pointer, "must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
          const std::string item = pointer + "/" + std::to_string(i);
          const json& x = v[i];
          if (f->kind == Kind::SchemeList) {
            if (!x.is_string()) fail(item, "expected a scheme name");
            try {
              parse_scheme(x.get<std::string>());
            } catch (const std::invalid_argument& e) {
              fail(item, e.what());
            }
          } else if (f->kind == Kind::UintList) {
            if (!is_uint(x)) fail(item, "expected a nonnegative integer");
          } else {
            if (!x.is_number()) fail(item, "expected a number");
            if (!in_range(*f, x.get<double>())) fail(item, "must be " + range_text(*f));
          }
        }
        return;
      }
    }
  }

 private:
  std::string_view text_;
  std::string_view origin_;
};

template <typename T>
void read(const json& doc, const char* pointer, T& out) {
  const json::json_pointer p(pointer);
  if (!doc.contains(p)) return;
  const json& v = doc.at(p);
  if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::string>) {
    out = v.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    out = v.is_number_float() ? static_cast<T>(v.get<double>()) : v.get<T>();
  } else {
    out = v.get<T>();
  }
}

template <typename T>
void read_list(const json& doc, const char* pointer, std::vector<T>& out) {
  const json::json_pointer p(pointer);
  if (!doc.contains(p)) return;
  out.clear();
  for (const json& x : doc.at(p)) {
    if constexpr (std::is_integral_v<T>) {
      out.push_back(x.is_number_float() ? static_cast<T>(x.get<double>()) : x.get<T>());
    } else {
      out.push_back(x.get<T>());
    }
  }
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Minimal walker over already-valid JSON text that finds where the value at
// a given pointer starts.
class PointerScanner {
 public:
  PointerScanner(std::string_view text, std::vector<std::string> target) : s_(text), target_(std::move(target)) {}

  std::optional<std::size_t> run() {
    skip_ws();
    return value(0);
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  std::string string_token() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        ++i_;
        switch (s_[i_]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'u': out += '?'; i_ += 4; break;
          default: out += s_[i_];
        }
        ++i_;
        continue;
      }
      out += s_[i_++];
    }
    ++i_;  // closing quote
    return out;
  }

  // Parses the value at i_; returns its offset when it or a descendant is the target.
  std::optional<std::size_t> value(std::size_t depth) {
    const std::size_t start = i_;
    const bool on_target = depth == target_.size();
    std::optional<std::size_t> found;
    if (on_target) found = start;
    if (i_ >= s_.size()) return found;

    if (s_[i_] == '{') {
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        const bool follow = !on_target && !found && depth < target_.size() && key == target_[depth];
        auto r = value(follow ? depth + 1 : target_.size() + 1);
        if (follow && r) found = r;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (s_[i_] == '[') {
      ++i_;
      skip_ws();
      std::size_t index = 0;
      while (i_ < s_.size() && s_[i_] != ']') {
        const bool follow = !on_target && !found && depth < target_.size() && target_[depth] == std::to_string(index);
        auto r = value(follow ? depth + 1 : target_.size() + 1);
        if (follow && r) found = r;
        ++index;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (s_[i_] == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' &&
             s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t') {
        ++i_;
      }
    }
    return found;
  }

  std::string_view s_;
  std::vector<std::string> target_;
  std::size_t i_ = 0;
};

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  std::string pointer;
  std::string_view key(assignment.data(), eq);
  std::size_t pos = 0;
  while (pos <= key.size()) {
    const auto dot = key.find('.', pos);
    const auto part = key.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    pointer += "/" + std::string(part);
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  try {
    doc[json::json_pointer(pointer)] = value;
  } catch (const json::exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.what(), pointer);
  }
}

}  // namespace

std::pair<std::size_t, std::size_t> locate_json_pointer(std::string_view text, std::string_view pointer) {
  std::vector<std::string> parts;
  if (!pointer.empty()) {
    std::size_t pos = 1;
    for (;;) {
      const auto slash = pointer.find('/', pos);
      std::string part(pointer.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos));
      for (std::size_t k; (k = part.find("~1")) != std::string::npos;) part.replace(k, 2, "/");
      for (std::size_t k; (k = part.find("~0")) != std::string::npos;) part.replace(k, 2, "~");
      parts.push_back(std::move(part));
      if (slash == std::string_view::npos) break;
      pos = slash + 1;
    }
  }
  PointerScanner scanner(text, std::move(parts));
  if (auto offset = scanner.run()) return line_col(text, *offset);
  return {0, 0};
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": syntax error: " + e.what(),
                      {}, line, col);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  Validator(text, origin).check(doc, "");

  ExperimentConfig c;
  read(doc, "/topology/pods", c.topology.pods);
  read(doc, "/topology/racks_per_pod", c.topology.racks_per_pod);
  read(doc, "/topology/hosts_per_rack", c.topology.hosts_per_rack);
  read(doc, "/topology/pod_switches_per_pod", c.topology.pod_switches_per_pod);
  read(doc, "/topology/core_switches", c.topology.core_switches);
  read(doc, "/topology/host_link_bps", c.topology.host_link_bps);
  read(doc, "/topology/fabric_link_bps", c.topology.fabric_link_bps);

  read(doc, "/trace/file", c.trace_file);
  read(doc, "/trace/duration_s", c.trace.duration_s);
  read(doc, "/trace/mean_flow_bytes", c.trace.mean_flow_bytes);
  read(doc, "/trace/fraction_small", c.trace.fraction_small);
  read(doc, "/trace/small_cutoff_bytes", c.trace.small_cutoff_bytes);
  read(doc, "/trace/min_flow_bytes", c.trace.min_flow_bytes);
  read(doc, "/trace/max_flow_bytes", c.trace.max_flow_bytes);
  read(doc, "/trace/flows_per_host_per_second", c.trace.flows_per_host_per_second);
  read(doc, "/trace/seed", c.trace.seed);

  std::string scheme = to_string(c.scheme);
  read(doc, "/scheme", scheme);
  c.scheme = parse_scheme(scheme);
  read(doc, "/load_level", c.load_level);
  read(doc, "/allow_load_below_one", c.allow_load_below_one);
  read(doc, "/elephant_threshold_bytes", c.elephant_threshold_bytes);

  read(doc, "/ecmp/seed", c.ecmp_seed);
  read(doc, "/hedera/period_s", c.hedera.period_s);
  read(doc, "/hedera/threshold_fraction", c.hedera.threshold_fraction);
  read(doc, "/hybridte/reroute_period_s", c.reroute_period_s);
  read(doc, "/routing/seed", c.routing_seed);
  read(doc, "/routing/fill_unreached", c.fill_unreached);
  std::string mode = c.match_mode == MatchMode::Label ? "label" : "subnet";
  read(doc, "/routing/match_mode", mode);
  c.match_mode = mode == "label" ? MatchMode::Label : MatchMode::Subnet;

  read(doc, "/detector/fn_rate", c.detector.fn_rate);
  read(doc, "/detector/fp_rate", c.detector.fp_rate);
  read(doc, "/detector/delay_s", c.detector.delay_s);
  read(doc, "/detector/seed", c.detector.seed);
  read(doc, "/detector/reports_file", c.reports_file);

  read(doc, "/engine/idle_timeout_s", c.idle_timeout_s);
  read(doc, "/engine/drain_s", c.drain_s);
  read(doc, "/engine/stats_period_s", c.stats_period_s);

  read(doc, "/output/dir", c.output_dir);
  read(doc, "/output/cell", c.cell);
  read(doc, "/output/flow_records_max", c.flow_records_max);
  read(doc, "/output/write_decisions", c.write_decisions);

  if (doc.contains(json::json_pointer("/sweep/schemes"))) {
    for (const json& s : doc.at(json::json_pointer("/sweep/schemes"))) c.sweep.schemes.push_back(parse_scheme(s.get<std::string>()));
  }
  read_list(doc, "/sweep/load_levels", c.sweep.load_levels);
  read_list(doc, "/sweep/fn_rates", c.sweep.fn_rates);
  read_list(doc, "/sweep/fp_rates", c.sweep.fp_rates);
  read_list(doc, "/sweep/delays_s", c.sweep.delays_s);
  read_list(doc, "/sweep/seeds", c.sweep.seeds);
  read(doc, "/sweep/jobs", c.sweep.jobs);

  if (c.trace.small_cutoff_bytes <= c.trace.min_flow_bytes) {
    Validator(text, origin).fail("/trace/small_cutoff_bytes", "must exceed min_flow_bytes");
  }
  if (c.trace.max_flow_bytes <= c.trace.small_cutoff_bytes) {
    Validator(text, origin).fail("/trace/max_flow_bytes", "must exceed small_cutoff_bytes");
  }
  if (c.load_level < 1.0 && !c.allow_load_below_one) {
    Validator(text, origin).fail("/load_level", "load levels below 1 need allow_load_below_one");
  }
  for (std::size_t i = 0; i < c.sweep.load_levels.size(); ++i) {
    if (c.sweep.load_levels[i] < 1.0 && !c.allow_load_below_one) {
      Validator(text, origin).fail("/sweep/load_levels/" + std::to_string(i),
                                   "load levels below 1 need allow_load_below_one");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  ExperimentConfig c = parse_config(text, overrides, path.string());
  auto resolve = [&](std::string& file) {
    if (file.empty() || std::filesystem::path(file).is_absolute()) return;
    const auto beside = path.parent_path() / file;
    if (!std::filesystem::exists(file) && std::filesystem::exists(beside)) file = beside.string();
  };
  resolve(c.trace_file);
  resolve(c.reports_file);
  return c;
}

std::string config_schema_text() {
  std::ostringstream out;
  for (const Field& f : schema()) {
    out << f.pointer << "  " << kind_name(f.kind);
    if (f.kind == Kind::Enum) {
      out << " {";
      for (std::size_t i = 0; i < f.choices.size(); ++i) out << (i ? "," : "") << f.choices[i];
      out << "}";
    }
    out << "  " << f.doc << '\n';
  }
  return out.str();
}

}  // namespace dctesim
