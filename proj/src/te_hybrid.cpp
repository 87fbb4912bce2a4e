#include "dctesim/te_hybrid.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "dctesim/maxmin.hpp"

namespace dctesim {

std::vector<double> estimate_natural_demands(const Topology& topology, std::span<const ElephantEndpoints> elephants) {
  std::vector<std::vector<LinkId>> links;
  links.reserve(elephants.size());
  for (const auto& e : elephants) links.push_back({topology.host_uplink(e.src_host), topology.host_downlink(e.dst_host)});
  std::vector<double> capacity(topology.links().size());
  for (LinkId l = 0; l < capacity.size(); ++l) capacity[l] = topology.link(l).capacity_bps;
  return allocate_rates(links, capacity);
}

bool WindowMeter::poll(std::span<const double> ports, std::span<const FlowCounter> flows, double now) {
  if (primed_) {
    if (now <= last_time_) throw std::logic_error("counter poll did not advance in time");
    if (ports.size() != last_ports_.size()) throw std::invalid_argument("port counter vector changed size");
    window_ = now - last_time_;
    link_rates_.assign(ports.size(), 0.0);
    for (std::size_t l = 0; l < ports.size(); ++l) {
      if (ports[l] < last_ports_[l]) {
        throw std::runtime_error("port counter regression on link " + std::to_string(l));
      }
      link_rates_[l] = (ports[l] - last_ports_[l]) * 8.0 / window_;
    }
  }

  flow_rates_.clear();
  std::unordered_map<FlowId, double> snapshot;
  snapshot.reserve(flows.size());
  for (const FlowCounter& c : flows) {
    snapshot.emplace(c.flow_id, c.bytes);
    if (!primed_) continue;
    // A counter that appeared (or was reset by a reinstall) during the window
    // counts from zero.
    double base = 0.0;
    if (auto it = last_flow_bytes_.find(c.flow_id); it != last_flow_bytes_.end() && c.install_time <= last_time_) {
      base = it->second;
    }
    flow_rates_[c.flow_id] = std::max(0.0, c.bytes - base) * 8.0 / window_;
  }
  last_flow_bytes_ = std::move(snapshot);
  last_ports_.assign(ports.begin(), ports.end());
  last_time_ = now;
  const bool measured = primed_;
  primed_ = true;
  return measured;
}

double WindowMeter::flow_rate(FlowId flow) const {
  auto it = flow_rates_.find(flow);
  return it == flow_rates_.end() ? 0.0 : it->second;
}

std::vector<double> background_rates(std::span<const double> link_rates, std::span<const MeasuredElephant> elephants) {
  std::vector<double> bg(link_rates.begin(), link_rates.end());
  for (const auto& e : elephants) {
    for (LinkId l : e.links) bg.at(l) -= e.rate;
  }
  for (double& b : bg) b = std::max(0.0, b);
  return bg;
}

std::optional<Measurement> poll_and_measure(WindowMeter& meter, const Topology& topology,
                                            std::span<const double> port_counters,
                                            std::span<const FlowCounter> elephant_counters,
                                            std::span<const TrackedRoute> routes, double now) {
  if (!meter.poll(port_counters, elephant_counters, now)) return std::nullopt;
  Measurement m;
  m.window_s = meter.window_s();
  m.link_rates = meter.link_rates();
  std::vector<MeasuredElephant> measured;
  measured.reserve(routes.size());
  for (const TrackedRoute& r : routes) {
    MeasuredElephant e;
    e.flow_id = r.flow_id;
    e.rate = meter.flow_rate(r.flow_id);
    e.links.push_back(topology.host_uplink(r.src_host));
    e.links.insert(e.links.end(), r.path.links.begin(), r.path.links.end());
    e.links.push_back(topology.host_downlink(r.dst_host));
    m.elephant_rates[r.flow_id] = e.rate;
    measured.push_back(std::move(e));
  }
  m.background = background_rates(m.link_rates, measured);
  return m;
}

std::size_t least_loaded_path(const std::vector<Path>& candidates, std::span<const double> load) {
  if (candidates.empty()) throw std::invalid_argument("least_loaded_path: no candidates");
  std::size_t best = 0;
  double best_load = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    double worst = 0.0;
    for (LinkId l : candidates[k].links) worst = std::max(worst, load[l]);
    if (worst < best_load) {
      best_load = worst;
      best = k;
    }
  }
  return best;
}

GffOutcome global_first_fit(const Topology& topology, std::vector<GffElephant> elephants,
                            std::span<const double> background) {
  std::sort(elephants.begin(), elephants.end(), [](const GffElephant& a, const GffElephant& b) {
    return a.demand != b.demand ? a.demand > b.demand : a.flow_id < b.flow_id;
  });

  GffOutcome out;
  out.reserved.assign(topology.links().size(), 0.0);
  auto fits = [&](const Path& p, double demand) {
    for (LinkId l : p.links) {
      if (background[l] + out.reserved[l] + demand > topology.link(l).capacity_bps) return false;
    }
    return true;
  };

  for (GffElephant& e : elephants) {
    const auto& candidates = topology.shortest_paths(e.src_rack, e.dst_rack);
    const Path* chosen = nullptr;
    if (!e.current.nodes.empty() && fits(e.current, e.demand)) chosen = &e.current;
    for (std::size_t k = 0; !chosen && k < candidates.size(); ++k) {
      if (candidates[k] != e.current && fits(candidates[k], e.demand)) chosen = &candidates[k];
    }

    GffAssignment a;
    a.flow_id = e.flow_id;
    a.demand = e.demand;
    if (chosen) {
      for (LinkId l : chosen->links) out.reserved[l] += e.demand;
      a.path = *chosen;
      a.reserved = true;
      a.moved = *chosen != e.current;
    } else {
      a.path = e.current;
    }
    out.assignments.push_back(std::move(a));
  }
  return out;
}

std::size_t gff_violations(const Topology& topology, std::span<const double> background,
                           const std::vector<GffAssignment>& assignments) {
  std::vector<double> load(background.begin(), background.end());
  std::vector<char> used(load.size(), 0);
  for (const auto& a : assignments) {
    if (!a.reserved) continue;
    for (LinkId l : a.path.links) {
      load[l] += a.demand;
      used[l] = 1;
    }
  }
  std::size_t bad = 0;
  for (LinkId l = 0; l < load.size(); ++l) {
    const double cap = topology.link(l).capacity_bps;
    // Summation order differs from the placement pass; allow for it.
    if (used[l] && load[l] > cap * (1.0 + 1e-12)) ++bad;
  }
  return bad;
}

void install_route(SwitchAccess& access, FlowId flow, const Path& path, HostIndex dst_host) {
  for (std::size_t k = 0; k + 1 < path.nodes.size(); ++k) access.install_exact(path.nodes[k], flow, path.nodes[k + 1]);
  access.install_exact(path.nodes.back(), flow, host_node(dst_host));
}

// ---- HybridTeController ------------------------------------------------------

void HybridTeController::start(SwitchAccess& access) {
  trees_ = install_static_routes(access.topology(), options_.routing);
  trees_.install(access);
  background_.assign(access.topology().links().size(), 0.0);
  placement_load_.assign(access.topology().links().size(), 0.0);
  tracked_from_.assign(access.topology().host_count(), 0);
  tracked_to_.assign(access.topology().host_count(), 0);
}

void HybridTeController::refresh_tracked(SwitchAccess& access) {
  for (auto it = tracked_.begin(); it != tracked_.end();) {
    if (!access.has_exact(it->second.path.nodes.front(), it->first)) {
      ++finished_;
      access.log_decision("finished", it->first, path_to_string(it->second.path));
      --tracked_from_[it->second.src_host];
      --tracked_to_[it->second.dst_host];
      it = tracked_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<ElephantEndpoints> HybridTeController::endpoints() const {
  std::vector<ElephantEndpoints> out;
  out.reserve(tracked_.size());
  for (const auto& [id, t] : tracked_) out.push_back({id, t.src_host, t.dst_host});
  return out;
}

void HybridTeController::on_report(SwitchAccess& access, const ReportedFlow& report) {
  ++reports_;
  const Topology& topo = access.topology();
  const RackId src_rack = topo.rack_of_host(report.src_host);
  const RackId dst_rack = topo.rack_of_host(report.dst_host);
  if (src_rack == dst_rack) {
    ++intra_rack_reports_;
    access.log_decision("skip_intra_rack", report.flow_id, to_string(topo.tor_of_rack(src_rack)));
    return;
  }
  if (tracked_.count(report.flow_id)) return;

  // NIC fair share among the elephants tracked at either end host.
  const double demand =
      std::min(topo.link(topo.host_uplink(report.src_host)).capacity_bps / ++tracked_from_[report.src_host],
               topo.link(topo.host_downlink(report.dst_host)).capacity_bps / ++tracked_to_[report.dst_host]);
  const auto& candidates = topo.shortest_paths(src_rack, dst_rack);
  const Path& chosen = candidates[least_loaded_path(candidates, placement_load_)];
  for (LinkId l : chosen.links) placement_load_[l] += demand;
  install_route(access, report.flow_id, chosen, report.dst_host);
  tracked_[report.flow_id] = TrackedRoute{report.flow_id, report.src_host, report.dst_host, chosen};
  tracked_max_ = std::max(tracked_max_, tracked_.size());
  ++placements_;
  access.log_decision("place", report.flow_id, path_to_string(chosen));
}

void HybridTeController::on_tick(SwitchAccess& access) {
  ++ticks_;
  refresh_tracked(access);
  const Topology& topo = access.topology();

  std::vector<FlowCounter> counters;
  std::vector<TrackedRoute> routes;
  counters.reserve(tracked_.size());
  for (const auto& [id, t] : tracked_) {
    if (auto s = access.exact_stats(t.path.nodes.front(), id)) counters.push_back({id, s->bytes, s->install_time});
    routes.push_back(t);
  }
  const auto ports = access.read_port_counters();
  auto m = poll_and_measure(meter_, topo, ports, counters, routes, access.now());
  if (!m) return;
  background_ = m->background;
  placement_load_ = m->link_rates;
  if (tracked_.empty()) return;

  const auto ends = endpoints();
  const std::vector<double> demand = estimate_natural_demands(topo, ends);
  std::vector<GffElephant> input;
  input.reserve(tracked_.size());
  std::size_t k = 0;
  for (const auto& [id, t] : tracked_) {
    input.push_back({id, topo.rack_of_host(t.src_host), topo.rack_of_host(t.dst_host), demand[k++], t.path});
  }
  const GffOutcome gff = global_first_fit(topo, std::move(input), background_);
  ++gff_runs_;
  gff_violations_ += gff_violations(topo, background_, gff.assignments);

  for (const GffAssignment& a : gff.assignments) {
    if (!a.reserved) ++gff_unplaced_;
    if (!a.moved) continue;
    TrackedRoute& t = tracked_.at(a.flow_id);
    install_route(access, a.flow_id, a.path, t.dst_host);
    for (NodeId sw : t.path.nodes) {
      if (std::find(a.path.nodes.begin(), a.path.nodes.end(), sw) == a.path.nodes.end()) {
        access.remove_exact(sw, a.flow_id);
      }
    }
    t.path = a.path;
    ++reroutes_;
    access.log_decision("reroute", a.flow_id, path_to_string(a.path));
  }
}

std::map<std::string, double> HybridTeController::metrics() const {
  return {
      {"tracked_elephants_max", static_cast<double>(tracked_max_)},
      {"reports", static_cast<double>(reports_)},
      {"reports_intra_rack", static_cast<double>(intra_rack_reports_)},
      {"placements", static_cast<double>(placements_)},
      {"reroutes", static_cast<double>(reroutes_)},
      {"ticks", static_cast<double>(ticks_)},
      {"finished_observed", static_cast<double>(finished_)},
      {"gff_runs", static_cast<double>(gff_runs_)},
      {"gff_violations", static_cast<double>(gff_violations_)},
      {"gff_unplaced", static_cast<double>(gff_unplaced_)},
  };
}

}  // namespace dctesim
