#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "dctesim/traffic.hpp"

using namespace dctesim;

namespace {

const Topology& desk() {
  static const Topology t = Topology::build_clos({.pods = 4, .racks_per_pod = 4, .hosts_per_rack = 10});
  return t;
}

std::string saved(const Trace& t) {
  std::ostringstream out;
  save_trace(t, out);
  return out.str();
}

Trace parse(const std::string& text) {
  std::istringstream in(text);
  return load_trace(in);
}

}  // namespace

TEST_SUITE("traffic") {
  TEST_CASE("size statistics over 1e5 flows") {
    TraceParams p;
    p.duration_s = 7.0;  // 160 hosts x 100/s x 7 s ~ 112k flows
    p.seed = 11;
    const Trace t = generate_trace(desk(), p);
    REQUIRE(t.flows.size() >= 100'000);
    double small = 0, sum = 0, elephant_bytes = 0;
    for (const auto& f : t.flows) {
      small += f.bytes < p.small_cutoff_bytes;
      sum += static_cast<double>(f.bytes);
      if (is_elephant(f.bytes, 10'000'000)) elephant_bytes += static_cast<double>(f.bytes);
      CHECK(f.bytes >= p.min_flow_bytes);
      CHECK(f.bytes <= p.max_flow_bytes);
    }
    const double n = static_cast<double>(t.flows.size());
    CHECK(std::abs(small / n - 0.8) <= 0.03);
    CHECK(std::abs(sum / n - 146e3) <= 0.15 * 146e3);
    CHECK(elephant_bytes > 0.5 * sum);
  }

  TEST_CASE("the solved mixture mean hits the target") {
    TraceParams p;
    const SizeMixture m = solve_size_mixture(p);
    CHECK(m.mean() == doctest::Approx(146e3).epsilon(1e-6));
    // Midpoint quadrature of the inverse CDF, independent of the closed form.
    const int n = 4'000'000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += m.sample(1.0, (i + 0.5) / n);
    const double tail_mean = acc / n;
    CHECK(tail_mean == doctest::Approx(m.tail_mean()).epsilon(0.01));
    CHECK(m.sample(1.0, 0.0) == doctest::Approx(m.small_cutoff));
    CHECK(m.sample(0.0, 0.999) < m.small_cutoff);
    CHECK(m.sample(0.0, 0.0) == m.small_min);
  }

  TEST_CASE("unreachable means are rejected") {
    TraceParams p;
    p.mean_flow_bytes = 2000;  // below the small component's own mean
    CHECK_THROWS_AS(solve_size_mixture(p), std::invalid_argument);
    p.mean_flow_bytes = 2e9;  // above the truncation point
    CHECK_THROWS_AS(solve_size_mixture(p), std::invalid_argument);
    p = TraceParams{};
    p.fraction_small = 1.0;
    CHECK_THROWS_AS(solve_size_mixture(p), std::invalid_argument);
  }

  TEST_CASE("rejects topologies with fewer than two hosts") {
    const auto one = Topology::build_clos({});
    CHECK_THROWS_AS(generate_trace(one, TraceParams{}), std::invalid_argument);
  }

  TEST_CASE("zero arrival rate gives an empty trace") {
    TraceParams p;
    p.flows_per_host_per_second = 0.0;
    const Trace t = generate_trace(desk(), p);
    CHECK(t.flows.empty());
    CHECK(t.duration_s == 60.0);
  }

  TEST_CASE("deterministic per seed, different across seeds") {
    TraceParams p;
    p.duration_s = 1.0;
    p.seed = 5;
    const Trace a = generate_trace(desk(), p);
    const Trace b = generate_trace(desk(), p);
    CHECK(saved(a) == saved(b));
    CHECK(trace_fingerprint(a) == trace_fingerprint(b));
    p.seed = 6;
    const Trace c = generate_trace(desk(), p);
    CHECK(trace_fingerprint(a) != trace_fingerprint(c));
    std::size_t same_bytes = 0;
    for (std::size_t i = 0; i < std::min(a.flows.size(), c.flows.size()); ++i) {
      same_bytes += a.flows[i].bytes == c.flows[i].bytes;
    }
    CHECK(same_bytes < a.flows.size() / 2);
  }

  TEST_CASE("arrival process and endpoints") {
    TraceParams p;
    p.duration_s = 5.0;
    p.seed = 3;
    const Trace t = generate_trace(desk(), p);
    const double expect = 160 * 100 * 5.0;
    CHECK(std::abs(static_cast<double>(t.flows.size()) - expect) <= 4 * std::sqrt(expect));

    std::vector<double> src(160, 0), dst(160, 0);
    double last = 0.0;
    for (std::size_t i = 0; i < t.flows.size(); ++i) {
      const auto& f = t.flows[i];
      CHECK(f.src_host != f.dst_host);
      CHECK(f.flow_id == i);
      CHECK(f.start_time >= last);
      CHECK(f.start_time < p.duration_s);
      CHECK(std::abs(f.start_time * 1e6 - std::round(f.start_time * 1e6)) < 1e-6);
      last = f.start_time;
      ++src[f.src_host];
      ++dst[f.dst_host];
    }
    // Chi-square, 159 degrees of freedom; 99.9th percentile is about 219.
    const double e = static_cast<double>(t.flows.size()) / 160;
    double x_src = 0, x_dst = 0;
    for (int h = 0; h < 160; ++h) {
      x_src += (src[h] - e) * (src[h] - e) / e;
      x_dst += (dst[h] - e) * (dst[h] - e) / e;
    }
    CHECK(x_src < 219);
    CHECK(x_dst < 219);
  }

  TEST_CASE("save and load round-trip") {
    TraceParams p;
    p.duration_s = 0.07;  // ~1100 flows
    p.seed = 9;
    const Trace t = generate_trace(desk(), p);
    REQUIRE(t.flows.size() >= 1000);
    const Trace back = parse(saved(t));
    CHECK(back == t);
    CHECK_FALSE(back.resorted);
    CHECK(saved(back) == saved(t));
  }

  TEST_CASE("empty file with a header") {
    const Trace t = parse("# dctesim-trace v1\n");
    CHECK(t.flows.empty());
  }

  TEST_CASE("malformed input names the line and field") {
    const std::string head = "# dctesim-trace v1\n# duration_s=10\n";
    auto fails_at = [&](const std::string& body, std::size_t line, const std::string& field) {
      try {
        parse(head + body);
        FAIL("accepted: " << body);
      } catch (const TraceParseError& e) {
        CHECK(e.line() == line);
        CHECK(e.field() == field);
      }
    };
    fails_at("0,0.5,1,2,100\n1,0.6,1,2,0\n", 4, "bytes");
    fails_at("0,0.5,1,1,100\n", 3, "dst_host");
    fails_at("0,abc,1,2,100\n", 3, "start_time_s");
    fails_at("0,0.5,1,2\n", 3, "line");
    fails_at("0,0.5,1,2,100\n0,0.6,1,2,100\n", 4, "flow_id");
    fails_at("0,11,1,2,100\n", 3, "start_time_s");
    CHECK_THROWS_AS(parse("flow_id,start\n"), TraceParseError);
  }

  TEST_CASE("unsorted input is re-sorted and flagged") {
    const Trace t = parse("# dctesim-trace v1\n# duration_s=10\n# comment\n5,0.5,1,2,100\n3,0.5,2,1,7\n1,0.1,0,3,9\n");
    REQUIRE(t.flows.size() == 3);
    CHECK(t.resorted);
    CHECK(t.flows[0].flow_id == 1);
    CHECK(t.flows[1].flow_id == 3);
    CHECK(t.flows[2].flow_id == 5);
  }

  TEST_CASE("ground-truth classification") {
    Trace t;
    t.duration_s = 1;
    t.flows = {{0, 0, 1, 10'000'001, 0.0}, {1, 0, 1, 10'000'000, 0.0}, {2, 1, 0, 5, 0.1}};
    const auto part = classify_ground_truth(t, 10'000'000);
    CHECK(part.elephants == std::vector<FlowId>{0});
    CHECK(part.mice == std::vector<FlowId>{1, 2});
    CHECK(classify_ground_truth(t, 20'000'000).elephants.empty());
    CHECK(part.elephants.size() + part.mice.size() == t.flows.size());
  }
}
