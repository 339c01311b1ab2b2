#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wsiflow/device_profile.hpp"
#include "wsiflow/task_graph.hpp"

namespace wsiflow {

enum class Policy : std::uint8_t { Fcfs, Pats };

std::string_view policy_name(Policy p) noexcept;
std::optional<Policy> policy_from_name(std::string_view name) noexcept;

struct Assignment {
  std::size_t task = 0;
  int device = 0;  // global id: node * devices_per_node + local id
  double start = 0.0;
  double end = 0.0;
};

struct ScheduleTrace {
  std::vector<Assignment> assignments;  // in dispatch order
  double makespan = 0.0;
  int nodes = 1;
  int devices_per_node = 0;
  std::vector<std::string> device_class;  // per global device
};

struct SimOptions {
  int nodes = 1;
  // Compute window per device: a node works on up to prefetch_depth * devices
  // tiles at once and reads as many more ahead.
  int prefetch_depth = 2;
  IoModel io;
  bool keep_trace = true;
};

struct SimMetrics {
  double makespan = 0.0;
  std::size_t tasks = 0;
  std::vector<double> utilization;  // per global device, busy time / makespan
  double mean_read_latency_ms = 0.0;
};

struct SimResult {
  ScheduleTrace trace;
  SimMetrics metrics;
};

/// Discrete-event simulation of the manager/worker runtime.
///
/// Tiles are handed to nodes on demand in tile-id order. Each node reads its
/// tiles one at a time (latency from the io model with every node counted as
/// a concurrent reader) into a read-ahead buffer, starts computing once a full
/// window of tiles is resident, and then opens a buffered tile whenever one
/// of its window slots frees. An operation becomes ready once its tile is open
/// and its predecessors are done. Whenever devices go idle they request work
/// in device-id order:
///   FCFS  oldest ready task;
///   PATS  accelerators take the ready task with the highest accelerator
///         speedup, cpu-cores the one with the lowest; equal speedups fall
///         back to readiness order, then task id.
/// Task duration is base_cost(op) / speedup(op, device class). Events at the
/// same instant are processed in (device id, task id) order.
SimResult simulate(const TaskGraph& graph, const DeviceProfile& profile, Policy policy, const SimOptions& options = {});

ScheduleTrace schedule_fcfs(const TaskGraph& graph, const DeviceProfile& profile);
ScheduleTrace schedule_pats(const TaskGraph& graph, const DeviceProfile& profile);

struct ScalingRow {
  int nodes = 0;
  std::size_t tiles = 0;
  double makespan = 0.0;
  double efficiency = 0.0;  // makespan on one node / makespan on `nodes` nodes
};

/// Weak scaling: `tiles_per_node * n` tiles on n nodes for each n.
std::vector<ScalingRow> weak_scaling(const DeviceProfile& profile, Policy policy, std::size_t tiles_per_node,
                                     std::span<const int> node_counts, const SimOptions& base = {});

/// Contention coefficient alpha of `io` for which weak-scaling efficiency at
/// `nodes` equals `target` (bisection; efficiency falls as alpha grows).
double fit_contention_alpha(const DeviceProfile& profile, Policy policy, std::size_t tiles_per_node, int nodes,
                            double target, const SimOptions& base, double tolerance = 1e-4);

void write_trace_jsonl(std::ostream& out, const TaskGraph& graph, const ScheduleTrace& trace);

}  // namespace wsiflow
