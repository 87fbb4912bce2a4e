#include "dctesim/maxmin.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace dctesim {

void MaxMinSolver::resize(std::size_t link_count) {
  remaining_.assign(link_count, 0.0);
  unfrozen_.assign(link_count, 0);
  version_.assign(link_count, 0);
  cursor_.assign(link_count, 0);
  incidence_offsets_.assign(link_count + 1, 0);
}

void MaxMinSolver::solve(std::span<const std::uint32_t> offsets, std::span<const LinkId> links,
                         std::span<const double> capacity, std::vector<double>& rates) {
  const std::size_t flows = offsets.empty() ? 0 : offsets.size() - 1;
  rates.assign(flows, 0.0);
  if (flows == 0) return;
  if (capacity.size() > remaining_.size()) resize(capacity.size());
  const auto n_links = static_cast<std::uint32_t>(capacity.size());

  touched_.clear();
  for (std::size_t f = 0; f < flows; ++f) {
    if (offsets[f] == offsets[f + 1]) throw std::invalid_argument("allocate_rates: flow crosses no link");
    for (std::uint32_t k = offsets[f]; k < offsets[f + 1]; ++k) {
      const LinkId l = links[k];
      if (l >= n_links) throw std::out_of_range("allocate_rates: link id out of range");
      if (unfrozen_[l]++ == 0) touched_.push_back(l);
    }
  }

  // A link crossed by one flow only caps that flow; fold it into a per-flow
  // bound instead of tracking it as a link.
  private_cap_.assign(flows, std::numeric_limits<double>::infinity());
  for (std::size_t f = 0; f < flows; ++f) {
    for (std::uint32_t k = offsets[f]; k < offsets[f + 1]; ++k) {
      const LinkId l = links[k];
      if (unfrozen_[l] == 1) private_cap_[f] = std::min(private_cap_[f], capacity[l]);
    }
  }

  std::size_t total = 0;
  for (LinkId l : touched_) {
    incidence_offsets_[l] = static_cast<std::uint32_t>(total);
    if (unfrozen_[l] > 1) total += unfrozen_[l];
  }
  incidence_.resize(total);
  for (LinkId l : touched_) cursor_[l] = incidence_offsets_[l];
  for (std::size_t f = 0; f < flows; ++f) {
    for (std::uint32_t k = offsets[f]; k < offsets[f + 1]; ++k) {
      const LinkId l = links[k];
      if (unfrozen_[l] > 1) incidence_[cursor_[l]++] = static_cast<std::uint32_t>(f);
    }
  }

  heap_.clear();
  auto later = [](const HeapItem& a, const HeapItem& b) {
    return a.share != b.share ? a.share > b.share : a.id > b.id;
  };
  for (LinkId l : touched_) {
    version_[l] = 0;
    remaining_[l] = capacity[l];
    if (unfrozen_[l] > 1) heap_.push_back({capacity[l] / unfrozen_[l], l, 0});
  }
  for (std::size_t f = 0; f < flows; ++f) {
    if (private_cap_[f] < std::numeric_limits<double>::infinity()) {
      heap_.push_back({private_cap_[f], n_links + static_cast<std::uint32_t>(f), 0});
    }
  }
  std::make_heap(heap_.begin(), heap_.end(), later);
  frozen_.assign(flows, 0);

  auto freeze = [&](std::uint32_t f, double share) {
    frozen_[f] = 1;
    rates[f] = share;
    for (std::uint32_t j = offsets[f]; j < offsets[f + 1]; ++j) {
      const LinkId m = links[j];
      remaining_[m] -= share;
      --unfrozen_[m];
      ++version_[m];
    }
  };

  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    const HeapItem top = heap_.back();
    heap_.pop_back();

    if (top.id >= n_links) {
      const std::uint32_t f = top.id - n_links;
      if (!frozen_[f]) freeze(f, top.share);
      continue;
    }
    const LinkId l = top.id;
    if (unfrozen_[l] == 0) continue;
    if (top.version != version_[l]) {
      // Shares only grow, so a stale key is a lower bound: refresh and retry.
      heap_.push_back({std::max(0.0, remaining_[l]) / unfrozen_[l], l, version_[l]});
      std::push_heap(heap_.begin(), heap_.end(), later);
      continue;
    }
    const double share = std::max(0.0, remaining_[l] / unfrozen_[l]);
    for (std::uint32_t k = incidence_offsets_[l]; unfrozen_[l] > 0; ++k) {
      const std::uint32_t f = incidence_[k];
      if (!frozen_[f]) freeze(f, share);
    }
  }
}

std::vector<double> allocate_rates(std::span<const std::vector<LinkId>> flow_links,
                                   std::span<const double> capacity) {
  std::vector<std::uint32_t> offsets{0};
  std::vector<LinkId> links;
  for (const auto& fl : flow_links) {
    links.insert(links.end(), fl.begin(), fl.end());
    offsets.push_back(static_cast<std::uint32_t>(links.size()));
  }
  MaxMinSolver solver(capacity.size());
  std::vector<double> rates;
  solver.solve(offsets, links, capacity, rates);
  return rates;
}

}  // namespace dctesim
