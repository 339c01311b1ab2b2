#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wsiflow/device_profile.hpp"
#include "wsiflow/scheduler.hpp"
#include "wsiflow/task_graph.hpp"

namespace wsiflow {

struct TraceReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks a trace against its graph without trusting the scheduler: every
/// task appears exactly once, start <= end, no device runs two tasks at once,
/// and each task starts no earlier than all of its predecessors end. With a
/// profile, each duration must also equal base_cost / speedup of the device
/// class (relative tolerance 1e-9).
TraceReport validate_trace(const TaskGraph& graph, const ScheduleTrace& trace,
                           const DeviceProfile* profile = nullptr);

// Columns: nodes,tiles,policy,makespan_ms,efficiency,mean_utilization
struct MetricsRow {
  int nodes = 1;
  std::size_t tiles = 0;
  Policy policy = Policy::Fcfs;
  double makespan_ms = 0.0;
  double efficiency = 1.0;
  double mean_utilization = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace wsiflow
