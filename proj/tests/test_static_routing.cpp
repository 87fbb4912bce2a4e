#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "dctesim/flow_table.hpp"
#include "dctesim/static_routing.hpp"
#include "oracles.hpp"

using namespace dctesim;

namespace {

const Topology& desk() {
  static const Topology t = Topology::build_clos({.pods = 4, .racks_per_pod = 4, .hosts_per_rack = 10});
  return t;
}

std::string dumped(const ForwardingTreeSet& trees) {
  std::ostringstream out;
  trees.dump(out);
  return out.str();
}

std::vector<NodeId> walk(const Topology& t, const ForwardingTreeSet& trees, RackId from, RackId to) {
  std::vector<NodeId> nodes{t.tor_of_rack(from)};
  while (nodes.back() != t.tor_of_rack(to)) nodes.push_back(*trees.next_hop(to, nodes.back()));
  return nodes;
}

}  // namespace

TEST_SUITE("static_routing") {
  TEST_CASE("entry counts at paper scale") {
    const auto t = Topology::build_clos({.pods = 9, .racks_per_pod = 8, .hosts_per_rack = 20});
    const auto trees = install_static_routes(t, {.seed = 1});
    FlowTables ft(t, MatchMode::Subnet);
    trees.install(ft);
    for (std::uint32_t d = t.host_count(); d < t.node_count(); ++d) {
      const NodeId sw = t.node(d);
      CHECK(trees.rack_entries(sw) == 72);
      CHECK(ft.wildcard_count(sw) == (sw.kind == NodeKind::ToR ? 92u : 72u));
    }
  }

  TEST_CASE("a single rack needs only its local entry") {
    const auto t = Topology::build_clos({.pods = 1, .racks_per_pod = 1, .hosts_per_rack = 4});
    const auto bare = install_static_routes(t, {.seed = 3, .fill_unreached = false});
    CHECK(bare.next_hop(0, tor_node(0)) == tor_node(0));
    CHECK_FALSE(bare.next_hop(0, core_node(0)).has_value());
    const auto full = install_static_routes(t, {.seed = 3});
    CHECK(full.next_hop(0, pod_switch_node(0)) == tor_node(0));
    CHECK(full.next_hop(0, core_node(1))->kind == NodeKind::PodSwitch);
    CHECK_FALSE(oracle::check_tree(t, full, 0).has_value());
  }

  TEST_CASE("every destination gets a loop-free tree") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      for (bool fill : {true, false}) {
        const auto trees = install_static_routes(desk(), {.seed = seed, .fill_unreached = fill});
        for (RackId r = 0; r < desk().rack_count(); ++r) {
          const auto err = oracle::check_tree(desk(), trees, r);
          CHECK_MESSAGE(!err.has_value(), "seed ", seed, " rack ", r, ": ", err.value_or(""));
        }
        for (std::uint32_t d = desk().host_count(); d < desk().node_count(); ++d) {
          CHECK(trees.rack_entries(desk().node(d)) <= desk().rack_count());
          if (fill) CHECK(trees.rack_entries(desk().node(d)) == desk().rack_count());
        }
      }
    }
  }

  TEST_CASE("every host pair is routable along a shortest path") {
    const auto trees = install_static_routes(desk(), {.seed = 8});
    FlowTables ft(desk(), MatchMode::Subnet);
    trees.install(ft);
    FlowId id = 0;
    for (HostIndex a = 0; a < desk().host_count(); a += 3) {
      for (HostIndex b = 0; b < desk().host_count(); ++b) {
        if (a == b) continue;
        const Path p = ft.lookup({id++, a, b});
        const RackId ra = desk().rack_of_host(a), rb = desk().rack_of_host(b);
        if (ra == rb) {
          CHECK(p.nodes.size() == 1);
        } else {
          const auto& sp = desk().shortest_paths(ra, rb);
          CHECK(std::find(sp.begin(), sp.end(), p) != sp.end());
        }
      }
    }
  }

  TEST_CASE("the first pair's path is uniform over its candidates") {
    // Rack 0 is the first source laid toward rack 4, so its tree path is the
    // sampled candidate itself.
    const auto& cands = desk().shortest_paths(0, 4);
    REQUIRE(cands.size() == 8);
    std::map<std::vector<NodeId>, int> hits;
    const int n = 1600;
    for (int seed = 1; seed <= n; ++seed) {
      const auto trees = install_static_routes(desk(), {.seed = static_cast<std::uint64_t>(seed)});
      ++hits[walk(desk(), trees, 0, 4)];
    }
    CHECK(hits.size() == 8);
    double chi = 0.0;
    for (const Path& p : cands) {
      const double k = hits[p.nodes];
      chi += (k - n / 8.0) * (k - n / 8.0) / (n / 8.0);
    }
    CHECK(chi < 24.3);  // 7 degrees of freedom, 99.9th percentile
  }

  TEST_CASE("deterministic in the seed") {
    const auto a = install_static_routes(desk(), {.seed = 42});
    const auto b = install_static_routes(desk(), {.seed = 42});
    const auto c = install_static_routes(desk(), {.seed = 43});
    CHECK(dumped(a) == dumped(b));
    CHECK(dumped(a) != dumped(c));
    CHECK(a.seed() == 42);
  }

  TEST_CASE("dump lists wildcard then host entries") {
    const auto t = Topology::build_clos({.pods = 1, .racks_per_pod = 2, .hosts_per_rack = 2});
    const auto trees = install_static_routes(t, {.seed = 1});
    std::istringstream in(dumped(trees));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() >= 4);
    CHECK(lines[0] == "tor0,rack0,local");
    CHECK(lines[1].rfind("tor0,rack1,pod", 0) == 0);
    CHECK(lines[2] == "tor0,host0,host0");
    CHECK(lines[3] == "tor0,host1,host1");
    // 2 ToRs x (2 racks + 2 hosts) + 4 other switches x 2 racks
    CHECK(lines.size() == 16);
  }
}
