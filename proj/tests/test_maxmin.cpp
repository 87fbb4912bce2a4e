#include <doctest.h>

#include <random>

#include "dctesim/maxmin.hpp"
#include "oracles.hpp"

using namespace dctesim;

namespace {

struct Instance {
  std::vector<std::vector<LinkId>> flows;
  std::vector<double> cap;
};

Instance random_instance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n_links(1, 6), n_flows(0, 8), coin(0, 3), cap_int(1, 10);
  std::uniform_real_distribution<double> cap_real(0.5, 20.0);
  Instance in;
  const int links = n_links(gen);
  const bool integral = coin(gen) == 0;  // integer capacities provoke ties
  for (int l = 0; l < links; ++l) in.cap.push_back(integral ? cap_int(gen) : cap_real(gen));
  const int flows = n_flows(gen);
  for (int f = 0; f < flows; ++f) {
    std::vector<LinkId> path;
    for (LinkId l = 0; l < static_cast<LinkId>(links); ++l) {
      if (coin(gen) == 0) path.push_back(l);
    }
    if (path.empty()) path.push_back(static_cast<LinkId>(gen() % links));
    in.flows.push_back(path);
  }
  return in;
}

// Max-min characterisation: every flow crosses a saturated link on which
// no other flow gets more.
bool has_bottleneck(const Instance& in, const std::vector<double>& rate, std::size_t f) {
  for (LinkId l : in.flows[f]) {
    double load = 0.0, top = 0.0;
    for (std::size_t g = 0; g < in.flows.size(); ++g) {
      if (std::count(in.flows[g].begin(), in.flows[g].end(), l)) {
        load += rate[g];
        top = std::max(top, rate[g]);
      }
    }
    if (load >= in.cap[l] * (1 - 1e-9) && rate[f] >= top * (1 - 1e-9)) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("maxmin") {
  TEST_CASE("two flows on one link split it") {
    const std::vector<std::vector<LinkId>> flows{{0}, {0}};
    const std::vector<double> cap{10e9};
    const auto r = allocate_rates(flows, cap);
    CHECK(r[0] == 5e9);
    CHECK(r[1] == 5e9);
  }

  TEST_CASE("a second bottleneck frees capacity for the other flow") {
    // A on L1; B on L1 and L2 (4 Gbps)
    const std::vector<std::vector<LinkId>> flows{{0}, {0, 1}};
    const std::vector<double> cap{10e9, 4e9};
    const auto r = allocate_rates(flows, cap);
    CHECK(r[0] == doctest::Approx(6e9).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(4e9).epsilon(1e-12));
  }

  TEST_CASE("degenerate inputs") {
    CHECK(allocate_rates({}, std::vector<double>{1.0}).empty());
    const std::vector<std::vector<LinkId>> nolink{{}};
    CHECK_THROWS_AS(allocate_rates(nolink, std::vector<double>{1.0}), std::invalid_argument);
    const std::vector<std::vector<LinkId>> bad{{3}};
    CHECK_THROWS(allocate_rates(bad, std::vector<double>{1.0}));
    const std::vector<std::vector<LinkId>> zero{{0}, {0, 1}};
    const auto r = allocate_rates(zero, std::vector<double>{0.0, 5.0});
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
  }

  TEST_CASE("matches the water-filling oracle on random instances") {
    std::mt19937_64 gen(20240601);
    MaxMinSolver solver(6);
    int checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
      const Instance in = random_instance(gen);
      const auto expect = oracle::waterfill(in.flows, in.cap);
      const auto got = allocate_rates(in.flows, in.cap);
      REQUIRE(got.size() == expect.size());
      for (std::size_t f = 0; f < got.size(); ++f) {
        CHECK(std::abs(got[f] - expect[f]) <= 1e-9 * std::max(1.0, std::abs(expect[f])));
        CHECK(has_bottleneck(in, got, f));
      }
      for (std::size_t l = 0; l < in.cap.size(); ++l) {
        double load = 0.0;
        for (std::size_t f = 0; f < got.size(); ++f) {
          load += std::count(in.flows[f].begin(), in.flows[f].end(), l) ? got[f] : 0.0;
        }
        CHECK(load <= in.cap[l] * (1 + 1e-12));
      }
      // The reusable solver gives the same answer as the one-shot call.
      std::vector<std::uint32_t> off{0};
      std::vector<LinkId> links;
      for (const auto& p : in.flows) {
        links.insert(links.end(), p.begin(), p.end());
        off.push_back(static_cast<std::uint32_t>(links.size()));
      }
      std::vector<double> again;
      solver.solve(off, links, in.cap, again);
      CHECK(again == got);
      ++checked;
    }
    CHECK(checked == 3000);
  }
}
