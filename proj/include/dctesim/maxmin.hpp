#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dctesim/topology.hpp"

namespace dctesim {

// Max-min fair rates by progressive filling. flow_links[f] lists the directed
// links flow f crosses; capacity is indexed by LinkId. Every flow must cross
// at least one link.
std::vector<double> allocate_rates(std::span<const std::vector<LinkId>> flow_links,
                                   std::span<const double> capacity);

// Reusable solver over a CSR flow/link incidence. Keeps scratch buffers
// between calls, so repeated solves on the same link space do not allocate.
class MaxMinSolver {
 public:
  explicit MaxMinSolver(std::size_t link_count = 0) { resize(link_count); }

  void resize(std::size_t link_count);

  // Links of flow f are links[offsets[f] .. offsets[f+1]).
  void solve(std::span<const std::uint32_t> offsets, std::span<const LinkId> links,
             std::span<const double> capacity, std::vector<double>& rates);

 private:
  // id < link count: a shared link; otherwise flow (id - link count) capped
  // by its private links.
  struct HeapItem {
    double share;
    std::uint32_t id;
    std::uint32_t version;
  };

  std::vector<double> remaining_;
  std::vector<std::uint32_t> unfrozen_;
  std::vector<std::uint32_t> version_;
  std::vector<std::uint32_t> incidence_offsets_;
  std::vector<std::uint32_t> cursor_;
  std::vector<std::uint32_t> incidence_;
  std::vector<LinkId> touched_;
  std::vector<HeapItem> heap_;
  std::vector<char> frozen_;
  std::vector<double> private_cap_;
};

}  // namespace dctesim
