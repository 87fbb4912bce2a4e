#include "dctesim/te_baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "dctesim/random.hpp"

namespace dctesim {

const Path& ecmp_assign(FlowId flow, const std::vector<Path>& candidates, std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("ecmp_assign: empty candidate set");
  return candidates[bounded(hash_combine(seed, flow), candidates.size())];
}

Path ecmp_route(const Topology& topology, const FlowHeader& flow, std::uint64_t seed) {
  const RackId src = topology.rack_of_host(flow.src_host);
  const RackId dst = topology.rack_of_host(flow.dst_host);
  if (src == dst) return Path{{topology.tor_of_rack(src)}, {}};
  return ecmp_assign(flow.flow_id, topology.shortest_paths(src, dst), seed);
}

// ---- ECMP ------------------------------------------------------------------

std::optional<Path> EcmpController::native_route(const FlowHeader& flow) const {
  if (!topology_) throw std::logic_error("EcmpController used before start");
  return ecmp_route(*topology_, flow, options_.seed);
}

void EcmpController::on_flow_arrival(SwitchAccess& access, const FlowHeader& flow) {
  ++flows_;
  if (!options_.install_accounting) return;
  install_route(access, flow.flow_id, ecmp_route(access.topology(), flow, options_.seed), flow.dst_host);
}

std::map<std::string, double> EcmpController::metrics() const {
  return {{"flows_hashed", static_cast<double>(flows_)}};
}

// ---- Hedera ----------------------------------------------------------------

HederaDecision hedera_tick(const Topology& topology, const std::map<FlowId, TrackedRoute>& flows,
                           const WindowMeter& meter, double threshold_fraction) {
  HederaDecision d;
  std::vector<ElephantEndpoints> ends;
  std::vector<MeasuredElephant> measured;
  std::vector<const TrackedRoute*> chosen;
  for (const auto& [id, f] : flows) {
    const double rate = meter.flow_rate(id);
    if (rate < threshold_fraction * topology.nic_capacity(f.src_host)) continue;
    if (topology.rack_of_host(f.src_host) == topology.rack_of_host(f.dst_host)) continue;
    d.elephants.push_back(id);
    ends.push_back({id, f.src_host, f.dst_host});
    MeasuredElephant m;
    m.flow_id = id;
    m.rate = rate;
    m.links.push_back(topology.host_uplink(f.src_host));
    m.links.insert(m.links.end(), f.path.links.begin(), f.path.links.end());
    m.links.push_back(topology.host_downlink(f.dst_host));
    measured.push_back(std::move(m));
    chosen.push_back(&f);
  }
  d.background = background_rates(meter.link_rates(), measured);
  if (chosen.empty()) return d;

  const std::vector<double> demand = estimate_natural_demands(topology, ends);
  std::vector<GffElephant> input;
  input.reserve(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const TrackedRoute& f = *chosen[k];
    input.push_back({f.flow_id, topology.rack_of_host(f.src_host), topology.rack_of_host(f.dst_host), demand[k], f.path});
  }
  d.gff = global_first_fit(topology, std::move(input), d.background);
  return d;
}

void HederaController::start(SwitchAccess& access) {
  const ForwardingTreeSet trees = install_static_routes(access.topology(), options_.routing);
  trees.install(access);
}

void HederaController::on_flow_arrival(SwitchAccess& access, const FlowHeader& flow) {
  const Path path = ecmp_route(access.topology(), flow, options_.ecmp_seed);
  install_route(access, flow.flow_id, path, flow.dst_host);
  known_[flow.flow_id] = TrackedRoute{flow.flow_id, flow.src_host, flow.dst_host, path};
}

void HederaController::on_tick(SwitchAccess& access) {
  ++ticks_;
  std::vector<FlowCounter> counters;
  counters.reserve(known_.size());
  for (auto it = known_.begin(); it != known_.end();) {
    if (auto s = access.exact_stats(it->second.path.nodes.front(), it->first)) {
      counters.push_back({it->first, s->bytes, s->install_time});
      ++it;
    } else {
      it = known_.erase(it);
    }
  }
  const auto ports = access.read_port_counters();
  if (!meter_.poll(ports, counters, access.now())) return;

  const Topology& topo = access.topology();
  HederaDecision d = hedera_tick(topo, known_, meter_, options_.threshold_fraction);
  elephants_max_ = std::max(elephants_max_, d.elephants.size());
  if (d.elephants.empty()) return;
  ++gff_runs_;
  gff_violations_ += gff_violations(topo, d.background, d.gff.assignments);

  for (const GffAssignment& a : d.gff.assignments) {
    if (!a.reserved) ++gff_unplaced_;
    if (!a.moved) continue;
    TrackedRoute& f = known_.at(a.flow_id);
    install_route(access, a.flow_id, a.path, f.dst_host);
    for (NodeId sw : f.path.nodes) {
      if (std::find(a.path.nodes.begin(), a.path.nodes.end(), sw) == a.path.nodes.end()) {
        access.remove_exact(sw, a.flow_id);
      }
    }
    f.path = a.path;
    ++reroutes_;
    access.log_decision("reroute", a.flow_id, path_to_string(a.path));
  }
}

std::map<std::string, double> HederaController::metrics() const {
  return {
      {"ticks", static_cast<double>(ticks_)},
      {"reroutes", static_cast<double>(reroutes_)},
      {"classified_elephants_max", static_cast<double>(elephants_max_)},
      {"gff_runs", static_cast<double>(gff_runs_)},
      {"gff_violations", static_cast<double>(gff_violations_)},
      {"gff_unplaced", static_cast<double>(gff_unplaced_)},
  };
}

}  // namespace dctesim
