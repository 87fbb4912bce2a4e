#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctesim/flow_table.hpp"
#include "dctesim/topology.hpp"
#include "dctesim/traffic.hpp"

namespace dctesim {

// An elephant report as the controller receives it. Whether the flow really
// is an elephant is not part of it.
struct ReportedFlow {
  FlowId flow_id = 0;
  HostIndex src_host = 0;
  HostIndex dst_host = 0;
  double report_time = 0.0;
};

struct ExactEntryStats {
  FlowId flow_id = 0;
  NodeId next_hop;
  double bytes = 0.0;
  double install_time = 0.0;
};

struct DecisionRecord {
  double time_s = 0.0;
  std::string event;
  FlowId flow_id = 0;
  std::string path;
};

// Everything a controller may observe or change: switch tables, port
// counters and the topology. There is no access to flow state.
class SwitchAccess {
 public:
  virtual ~SwitchAccess() = default;

  virtual double now() const = 0;
  virtual const Topology& topology() const = 0;

  virtual void install_wildcard(NodeId sw, RackId rack, NodeId next_hop) = 0;
  virtual void install_host_entry(NodeId tor, HostIndex host) = 0;
  // Overwrites an existing entry for the same flow.
  virtual void install_exact(NodeId sw, FlowId flow, NodeId next_hop) = 0;
  virtual bool remove_exact(NodeId sw, FlowId flow) = 0;

  virtual bool has_exact(NodeId sw, FlowId flow) const = 0;
  virtual std::optional<ExactEntryStats> exact_stats(NodeId sw, FlowId flow) const = 0;
  virtual std::vector<ExactEntryStats> read_exact_entries(NodeId sw) const = 0;

  // Cumulative bytes sent on every directed link, indexed by LinkId.
  virtual std::vector<double> read_port_counters() const = 0;

  virtual void log_decision(std::string event, FlowId flow, std::string path) = 0;
};

class Controller {
 public:
  virtual ~Controller() = default;

  virtual std::string name() const = 0;

  // Called once before time 0.
  virtual void start(SwitchAccess& access) = 0;

  // Switch-local routing that bypasses the flow tables (hash-based ECMP).
  virtual std::optional<Path> native_route(const FlowHeader&) const { return std::nullopt; }

  // First packet of a new flow, seen before it is routed.
  virtual void on_flow_arrival(SwitchAccess&, const FlowHeader&) {}

  virtual void on_report(SwitchAccess&, const ReportedFlow&) {}

  // 0 disables periodic ticks.
  virtual double tick_period() const { return 0.0; }
  virtual void on_tick(SwitchAccess&) {}

  virtual std::map<std::string, double> metrics() const { return {}; }
};

}  // namespace dctesim
