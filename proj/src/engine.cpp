#include "dctesim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dctesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::size_t SimulationResult::completed_count() const {
  return static_cast<std::size_t>(
      std::count_if(flows.begin(), flows.end(), [](const FlowRecord& f) { return f.completed(); }));
}

Simulation::Simulation(const Topology& topology, const Trace& trace, Controller& controller,
                       std::span<const ReportedFlow> reports, EngineOptions options)
    : topology_(&topology),
      trace_(&trace),
      controller_(&controller),
      reports_(reports),
      options_(options),
      tables_(topology, options.match_mode),
      solver_(topology.links().size()) {
  flows_.reserve(trace.flows.size());
  index_of_.reserve(trace.flows.size() * 2);
  for (const FlowSpec& spec : trace.flows) {
    if (spec.src_host >= topology.host_count() || spec.dst_host >= topology.host_count()) {
      throw std::invalid_argument("flow " + std::to_string(spec.flow_id) + " names a host outside the topology");
    }
    FlowState f;
    f.spec = spec;
    f.remaining = static_cast<double>(spec.bytes);
    if (!index_of_.emplace(spec.flow_id, static_cast<std::uint32_t>(flows_.size())).second) {
      throw std::invalid_argument("duplicate flow id " + std::to_string(spec.flow_id));
    }
    flows_.push_back(std::move(f));
  }
  for (std::size_t i = 1; i < reports_.size(); ++i) {
    if (reports_[i].report_time < reports_[i - 1].report_time) {
      throw std::invalid_argument("elephant reports must be sorted by time");
    }
  }

  const std::size_t n_links = topology.links().size();
  link_acc_.assign(n_links, 0.0);
  link_rate_.assign(n_links, 0.0);
  link_since_.assign(n_links, 0.0);
  capacity_.resize(n_links);
  for (LinkId l = 0; l < n_links; ++l) capacity_[l] = topology.link(l).capacity_bps;

  const std::uint32_t switches = topology.node_count() - topology.host_count();
  stats_.resize(switches);
  for (std::uint32_t s = 0; s < switches; ++s) stats_[s].sw = switch_at(s);
}

Simulation::FlowState& Simulation::flow_by_id(FlowId id) {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw std::invalid_argument("controller referenced unknown flow " + std::to_string(id));
  return flows_[it->second];
}

const Simulation::FlowState* Simulation::find_flow(FlowId id) const {
  auto it = index_of_.find(id);
  return it == index_of_.end() ? nullptr : &flows_[it->second];
}

double Simulation::delivered_at(const FlowState& f, double t) const {
  if (f.phase != FlowPhase::Active) return f.delivered;
  return std::min(static_cast<double>(f.spec.bytes), f.delivered + f.rate * (t - f.last_update) / 8.0);
}

double Simulation::entry_bytes(const ExactEntry& e, FlowId flow) const {
  if (!e.attached) return e.counted_bytes;
  const FlowState* f = find_flow(flow);
  return e.counted_bytes + (f ? delivered_at(*f, now_) - e.attach_mark : 0.0);
}

// ---- SwitchAccess -----------------------------------------------------------

void Simulation::install_wildcard(NodeId sw, RackId rack, NodeId next_hop) {
  const bool had = tables_.wildcard(sw, rack).has_value();
  tables_.set_wildcard(sw, rack, next_hop);
  if (!had) ++stats_[switch_slot(sw)].wildcard_entries;
  if (started_) {
    for (std::uint32_t idx : active_) {
      flows_[idx].dirty = true;
      dirty_.push_back(idx);
    }
  }
}

void Simulation::install_host_entry(NodeId tor, HostIndex host) {
  const bool had = tables_.has_host_entry(tor, host);
  tables_.set_host_entry(tor, host);
  if (!had) ++stats_[switch_slot(tor)].wildcard_entries;
}

void Simulation::install_exact(NodeId sw, FlowId flow, NodeId next_hop) {
  if (!topology_->contains(sw) || sw.kind == NodeKind::Host) {
    throw std::invalid_argument("install_exact: " + to_string(sw) + " is not a switch");
  }
  if (next_hop.kind == NodeKind::Host) {
    if (!topology_->contains(next_hop) || sw.kind != NodeKind::ToR ||
        topology_->rack_of_host(next_hop.index) != sw.index) {
      throw std::invalid_argument("install_exact: " + to_string(next_hop) + " is not behind " + to_string(sw));
    }
  } else if (!topology_->find_link(sw, next_hop)) {
    throw std::invalid_argument("install_exact: " + to_string(next_hop) + " is not adjacent to " + to_string(sw));
  }
  FlowState& f = flow_by_id(flow);

  auto [entry, created] = tables_.put_exact(sw, flow);
  entry->next_hop = next_hop;
  entry->install_time = now_;
  entry->idle_timeout = options_.idle_timeout_s;
  entry->counted_bytes = 0.0;
  if (entry->attached) {
    entry->attach_mark = delivered_at(f, now_);
  } else {
    entry->idle_since = now_;
    schedule_expiry(sw, flow, *entry);
  }

  SwitchStats& st = stats_[switch_slot(sw)];
  ++st.exact_installs;
  const auto bucket = static_cast<std::size_t>(std::floor(now_));
  if (st.installs_per_second.size() <= bucket) st.installs_per_second.resize(bucket + 1, 0);
  ++st.installs_per_second[bucket];
  if (created) {
    ++st.exact_entries;
    st.exact_entries_max = std::max(st.exact_entries_max, st.exact_entries);
  }

  if (f.phase == FlowPhase::Active && !f.dirty) {
    f.dirty = true;
    dirty_.push_back(index_of_.at(flow));
  }
}

bool Simulation::remove_exact(NodeId sw, FlowId flow) {
  ExactEntry* e = tables_.find_exact(sw, flow);
  if (!e) return false;
  const bool attached = e->attached;
  tables_.erase_exact(sw, flow);
  count_removal(sw, false);
  if (attached) {
    FlowState& f = flow_by_id(flow);
    std::erase(f.attached, sw);
    if (!f.dirty) {
      f.dirty = true;
      dirty_.push_back(index_of_.at(flow));
    }
  }
  return true;
}

bool Simulation::has_exact(NodeId sw, FlowId flow) const { return tables_.find_exact(sw, flow) != nullptr; }

std::optional<ExactEntryStats> Simulation::exact_stats(NodeId sw, FlowId flow) const {
  const ExactEntry* e = tables_.find_exact(sw, flow);
  if (!e) return std::nullopt;
  return ExactEntryStats{flow, e->next_hop, entry_bytes(*e, flow), e->install_time};
}

std::vector<ExactEntryStats> Simulation::read_exact_entries(NodeId sw) const {
  std::vector<ExactEntryStats> out;
  const auto& entries = tables_.exact_entries(sw);
  out.reserve(entries.size());
  for (const auto& [flow, e] : entries) out.push_back({flow, e.next_hop, entry_bytes(e, flow), e.install_time});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.flow_id < b.flow_id; });
  return out;
}

std::vector<double> Simulation::read_port_counters() const {
  std::vector<double> out(link_acc_.size());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = link_acc_[l] + link_rate_[l] * (now_ - link_since_[l]) / 8.0;
  return out;
}

void Simulation::log_decision(std::string event, FlowId flow, std::string path) {
  decisions_.push_back({now_, std::move(event), flow, std::move(path)});
}

// ---- internals --------------------------------------------------------------

void Simulation::count_removal(NodeId sw, bool expired) {
  SwitchStats& st = stats_[switch_slot(sw)];
  ++st.exact_removals;
  if (expired) ++st.exact_expiries;
  --st.exact_entries;
}

void Simulation::schedule_expiry(NodeId sw, FlowId flow, ExactEntry& e) {
  ++e.generation;
  if (e.idle_timeout > 0.0) expiries_.push({e.idle_since + e.idle_timeout, switch_slot(sw), flow, e.generation});
}

void Simulation::attach_entries(FlowState& f) {
  f.attached.clear();
  const double mark = delivered_at(f, now_);
  for (NodeId sw : f.path.nodes) {
    if (ExactEntry* e = tables_.find_exact(sw, f.spec.flow_id)) {
      e->attached = true;
      e->attach_mark = mark;
      ++e->generation;
      f.attached.push_back(sw);
    }
  }
}

void Simulation::detach_entries(FlowState& f) {
  const double delivered = delivered_at(f, now_);
  for (NodeId sw : f.attached) {
    ExactEntry* e = tables_.find_exact(sw, f.spec.flow_id);
    if (!e || !e->attached) continue;
    e->counted_bytes += delivered - e->attach_mark;
    e->attached = false;
    e->idle_since = now_;
    schedule_expiry(sw, f.spec.flow_id, *e);
  }
  f.attached.clear();
}

void Simulation::route(FlowState& f) {
  const FlowHeader h{f.spec.flow_id, f.spec.src_host, f.spec.dst_host};
  if (auto native = controller_->native_route(h)) {
    f.path = std::move(*native);
  } else {
    f.path = tables_.lookup(h);
  }
  f.links.clear();
  f.links.push_back(topology_->host_uplink(f.spec.src_host));
  f.links.insert(f.links.end(), f.path.links.begin(), f.path.links.end());
  f.links.push_back(topology_->host_downlink(f.spec.dst_host));
}

void Simulation::arrive(FlowState& f) {
  controller_->on_flow_arrival(*this, FlowHeader{f.spec.flow_id, f.spec.src_host, f.spec.dst_host});
  f.phase = FlowPhase::Active;
  f.last_update = now_;
  f.rate = 0.0;
  f.dirty = false;
  route(f);
  attach_entries(f);
  f.active_slot = static_cast<std::uint32_t>(active_.size());
  active_.push_back(index_of_.at(f.spec.flow_id));
  rates_dirty_ = true;
  if (is_elephant(f.spec.bytes, options_.elephant_threshold_bytes)) {
    true_elephants_max_ = std::max(true_elephants_max_, ++true_elephants_active_);
  }
}

void Simulation::complete(FlowState& f) {
  f.delivered = static_cast<double>(f.spec.bytes);
  f.remaining = 0.0;
  detach_entries(f);
  f.phase = FlowPhase::Completed;
  f.completion_time = now_;
  f.rate = 0.0;
  f.finish = kInf;
  const std::uint32_t slot = f.active_slot;
  active_[slot] = active_.back();
  flows_[active_[slot]].active_slot = slot;
  active_.pop_back();
  rates_dirty_ = true;
  if (is_elephant(f.spec.bytes, options_.elephant_threshold_bytes)) --true_elephants_active_;
}

void Simulation::advance_to(double t) {
  if (t < now_) throw std::logic_error("simulation time moved backwards");
  const double dt = t - now_;
  if (dt > 0.0) {
    for (std::uint32_t idx : active_) {
      FlowState& f = flows_[idx];
      const double moved = std::min(f.remaining, f.rate * (t - f.last_update) / 8.0);
      f.delivered += moved;
      f.remaining -= moved;
      f.last_update = t;
    }
  } else {
    for (std::uint32_t idx : active_) flows_[idx].last_update = t;
  }
  now_ = t;
}

void Simulation::expire_due(double t) {
  while (!expiries_.empty() && expiries_.top().time <= t) {
    const ExpiryItem item = expiries_.top();
    expiries_.pop();
    const NodeId sw = switch_at(item.switch_slot);
    ExactEntry* e = tables_.find_exact(sw, item.flow);
    if (!e || e->attached || e->generation != item.generation) continue;
    ++events_;
    tables_.erase_exact(sw, item.flow);
    count_removal(sw, true);
  }
}

void Simulation::reroute_dirty() {
  if (dirty_.empty()) return;
  std::sort(dirty_.begin(), dirty_.end());
  dirty_.erase(std::unique(dirty_.begin(), dirty_.end()), dirty_.end());
  for (std::uint32_t idx : dirty_) {
    FlowState& f = flows_[idx];
    f.dirty = false;
    if (f.phase != FlowPhase::Active) continue;
    detach_entries(f);
    const Path old = f.path;
    route(f);
    attach_entries(f);
    if (f.path != old) rates_dirty_ = true;
  }
  dirty_.clear();
}

void Simulation::recompute_rates() {
  ++recomputations_;
  for (LinkId l : busy_links_) {
    link_acc_[l] += link_rate_[l] * (now_ - link_since_[l]) / 8.0;
    link_since_[l] = now_;
    link_rate_[l] = 0.0;
  }
  busy_links_.clear();

  csr_offsets_.assign(1, 0);
  csr_links_.clear();
  csr_flows_.clear();
  for (std::uint32_t idx : active_) {
    const FlowState& f = flows_[idx];
    csr_links_.insert(csr_links_.end(), f.links.begin(), f.links.end());
    csr_offsets_.push_back(static_cast<std::uint32_t>(csr_links_.size()));
    csr_flows_.push_back(f.spec.flow_id);
  }
  solver_.solve(csr_offsets_, csr_links_, capacity_, rates_);

  next_completion_ = kInf;
  for (std::size_t k = 0; k < active_.size(); ++k) {
    FlowState& f = flows_[active_[k]];
    f.rate = rates_[k];
    f.last_update = now_;
    f.finish = f.rate > 0.0 ? now_ + f.remaining * 8.0 / f.rate : kInf;
    for (LinkId l : f.links) {
      if (link_rate_[l] == 0.0 && f.rate > 0.0) {
        busy_links_.push_back(l);
        link_since_[l] = now_;
      }
      link_rate_[l] += f.rate;
    }
    if (f.finish < next_completion_ ||
        (f.finish == next_completion_ && f.spec.flow_id < flows_[next_completion_flow_].spec.flow_id)) {
      next_completion_ = f.finish;
      next_completion_flow_ = active_[k];
    }
  }
  rates_dirty_ = false;

  if (observer_) observer_(RateSnapshot{now_, csr_flows_, rates_, csr_offsets_, csr_links_});
}

void Simulation::sample_occupancy() {
  for (std::uint32_t s = 0; s < stats_.size(); ++s) {
    stats_[s].exact_occupancy.push_back(static_cast<std::uint32_t>(stats_[s].exact_entries));
  }
}

SimulationResult Simulation::run() {
  if (started_) throw std::logic_error("Simulation::run called twice");
  controller_->start(*this);
  started_ = true;
  dirty_.clear();

  const double period = controller_->tick_period();
  std::uint64_t tick_k = 0;
  auto tick_time = [&] { return period > 0.0 ? static_cast<double>(tick_k) * period : kInf; };
  std::uint64_t poll_k = 1;
  auto poll_time = [&] {
    return options_.stats_period_s > 0.0 ? static_cast<double>(poll_k) * options_.stats_period_s : kInf;
  };

  std::size_t next_arrival = 0;
  std::size_t next_report = 0;
  const std::size_t n_flows = flows_.size();

  for (;;) {
    if (next_arrival == n_flows && active_.empty() && next_report == reports_.size()) break;

    double t = next_completion_;
    while (!expiries_.empty()) {
      const ExpiryItem& top = expiries_.top();
      const ExactEntry* e = tables_.find_exact(switch_at(top.switch_slot), top.flow);
      if (e && !e->attached && e->generation == top.generation) break;
      expiries_.pop();
    }
    if (!expiries_.empty()) t = std::min(t, expiries_.top().time);
    if (next_arrival < n_flows) t = std::min(t, flows_[next_arrival].spec.start_time);
    if (next_report < reports_.size()) t = std::min(t, reports_[next_report].report_time);
    t = std::min({t, tick_time(), poll_time()});
    if (t == kInf) break;
    if (t > options_.end_time) {
      advance_to(std::max(now_, options_.end_time));
      break;
    }
    advance_to(std::max(t, now_));

    if (t == next_completion_) {
      std::vector<std::uint32_t> done;
      for (std::uint32_t idx : active_) {
        const FlowState& f = flows_[idx];
        if (idx == next_completion_flow_ || f.remaining <= 1e-6 ||
            (f.rate > 0.0 && f.remaining * 8.0 / f.rate <= 1e-12)) {
          done.push_back(idx);
        }
      }
      std::sort(done.begin(), done.end());
      for (std::uint32_t idx : done) {
        ++events_;
        complete(flows_[idx]);
      }
      next_completion_ = kInf;
    }

    expire_due(t);

    while (next_arrival < n_flows && flows_[next_arrival].spec.start_time == t) {
      ++events_;
      arrive(flows_[next_arrival++]);
    }
    while (next_report < reports_.size() && reports_[next_report].report_time == t) {
      ++events_;
      const ReportedFlow& r = reports_[next_report++];
      flow_by_id(r.flow_id);
      controller_->on_report(*this, r);
    }
    if (tick_time() == t) {
      ++events_;
      controller_->on_tick(*this);
      ++tick_k;
    }
    if (poll_time() == t) {
      ++events_;
      sample_occupancy();
      ++poll_k;
    }

    reroute_dirty();
    if (rates_dirty_) recompute_rates();
  }

  // Settle counters at the stop time.
  for (LinkId l = 0; l < link_acc_.size(); ++l) {
    link_acc_[l] += link_rate_[l] * (now_ - link_since_[l]) / 8.0;
    link_since_[l] = now_;
  }

  SimulationResult result;
  result.controller = controller_->name();
  result.flows.reserve(flows_.size());
  for (const FlowState& f : flows_) {
    result.flows.push_back({f.spec.flow_id, f.spec.start_time, f.spec.bytes, f.completion_time});
  }
  result.switches = stats_;
  result.controller_metrics = controller_->metrics();
  result.decisions = std::move(decisions_);
  result.link_bytes = link_acc_;
  result.stop_time = now_;
  result.events = events_;
  result.rate_recomputations = recomputations_;
  result.true_elephants_concurrent_max = true_elephants_max_;
  return result;
}

SimulationResult run_simulation(const Topology& topology, const Trace& trace, Controller& controller,
                                std::span<const ReportedFlow> reports, const EngineOptions& options) {
  Simulation sim(topology, trace, controller, reports, options);
  return sim.run();
}

}  // namespace dctesim
