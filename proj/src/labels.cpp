#include "dctesim/labels.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace dctesim {

MacLabel encode_label(std::uint32_t rack_id, std::uint32_t host_id) {
  if (rack_id >= kLabelIdLimit || host_id >= kLabelIdLimit) {
    throw std::out_of_range("encode_label: rack and host ids must be below 2^20");
  }
  return (kLabelFlagOctet << 40) | (static_cast<std::uint64_t>(rack_id) << kLabelIdBits) | host_id;
}

std::pair<std::uint32_t, std::uint32_t> decode_label(MacLabel label) {
  if ((label >> 40) != kLabelFlagOctet) throw std::invalid_argument("decode_label: not a rack label");
  return {static_cast<std::uint32_t>((label >> kLabelIdBits) & (kLabelIdLimit - 1)),
          static_cast<std::uint32_t>(label & (kLabelIdLimit - 1))};
}

std::string format_mac(MacLabel label) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", static_cast<unsigned>((label >> 40) & 0xff),
                static_cast<unsigned>((label >> 32) & 0xff), static_cast<unsigned>((label >> 24) & 0xff),
                static_cast<unsigned>((label >> 16) & 0xff), static_cast<unsigned>((label >> 8) & 0xff),
                static_cast<unsigned>(label & 0xff));
  return buf;
}

HostDirectory::HostDirectory(const Topology& topology, double remap_idle_timeout_s)
    : topology_(&topology), idle_timeout_(remap_idle_timeout_s) {
  hosts_.reserve(topology.host_count());
  for (HostIndex h = 0; h < topology.host_count(); ++h) {
    const RackId r = topology.rack_of_host(h);
    hosts_.push_back({r, encode_label(r, h)});
  }
}

MacLabel HostDirectory::arp_resolve(HostIndex host) const {
  if (host >= hosts_.size()) throw std::out_of_range("arp_resolve: unknown host " + std::to_string(host));
  return hosts_[host].label;
}

RackId HostDirectory::current_rack(HostIndex host) const {
  if (host >= hosts_.size()) throw std::out_of_range("current_rack: unknown host " + std::to_string(host));
  return hosts_[host].rack;
}

MacLabel HostDirectory::real_mac(HostIndex host) const {
  if (host >= hosts_.size()) throw std::out_of_range("real_mac: unknown host " + std::to_string(host));
  return 0x00163e000000ULL | host;
}

std::optional<RemapRule> HostDirectory::migrate_host(HostIndex host, RackId new_rack, double now) {
  if (host >= hosts_.size()) throw std::out_of_range("migrate_host: unknown host " + std::to_string(host));
  if (new_rack >= topology_->rack_count()) throw std::out_of_range("migrate_host: unknown rack");
  Entry& e = hosts_[host];
  if (e.rack == new_rack) return std::nullopt;

  const NodeId tor = topology_->tor_of_rack(new_rack);
  // Earlier remaps for this host now point at a rack it has left; carry them
  // over to the new ToR.
  std::vector<RemapRule> carried;
  for (auto it = remaps_.begin(); it != remaps_.end();) {
    if (it->second.host == host) {
      carried.push_back(it->second);
      it = remaps_.erase(it);
    } else {
      ++it;
    }
  }
  for (RemapRule r : carried) {
    r.tor = tor;
    remaps_[{tor.index, r.old_label}] = r;
  }

  RemapRule rule{tor, e.label, host, now};
  remaps_[{tor.index, e.label}] = rule;
  e.rack = new_rack;
  e.label = encode_label(new_rack, host);
  return rule;
}

std::optional<HostIndex> HostDirectory::lookup_remap(NodeId tor, MacLabel label, double now) {
  collect_garbage(now);
  auto it = remaps_.find({tor.index, label});
  if (it == remaps_.end()) return std::nullopt;
  it->second.last_used = now;
  return it->second.host;
}

void HostDirectory::collect_garbage(double now) {
  if (idle_timeout_ <= 0.0) return;
  for (auto it = remaps_.begin(); it != remaps_.end();) {
    if (now >= it->second.last_used + idle_timeout_) {
      it = remaps_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<RemapRule> HostDirectory::remaps() const {
  std::vector<RemapRule> out;
  for (const auto& [key, rule] : remaps_) out.push_back(rule);
  return out;
}

void HostDirectory::dump(std::ostream& out) const {
  for (HostIndex h = 0; h < hosts_.size(); ++h) {
    out << h << ' ' << hosts_[h].rack << ' ' << format_mac(hosts_[h].label) << '\n';
  }
  for (const auto& [key, rule] : remaps_) {
    out << "remap " << to_string(rule.tor) << ' ' << format_mac(rule.old_label) << ' ' << rule.host << '\n';
  }
}

}  // namespace dctesim
