#include "wsiflow/trace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

namespace wsiflow {

TraceReport validate_trace(const TaskGraph& graph, const ScheduleTrace& trace, const DeviceProfile* profile) {
  TraceReport report;
  auto fail = [&](std::string msg) {
    if (report.violations.size() < 50) {
      report.violations.push_back(std::move(msg));
    }
  };

  const std::size_t n = graph.size();
  std::vector<const Assignment*> of_task(n, nullptr);
  for (const auto& a : trace.assignments) {
    if (a.task >= n) {
      fail("assignment references missing task " + std::to_string(a.task));
      continue;
    }
    if (of_task[a.task] != nullptr) {
      fail("task " + std::to_string(a.task) + " scheduled more than once");
      continue;
    }
    of_task[a.task] = &a;
    if (!(a.start <= a.end) || !std::isfinite(a.start) || !std::isfinite(a.end) || a.start < 0.0) {
      fail("task " + std::to_string(a.task) + " has an invalid interval");
    }
    if (a.device < 0 || static_cast<std::size_t>(a.device) >= trace.device_class.size()) {
      fail("task " + std::to_string(a.task) + " runs on unknown device " + std::to_string(a.device));
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (of_task[t] == nullptr) {
      fail("task " + std::to_string(t) + " never scheduled");
    }
  }
  if (!report.ok()) {
    return report;
  }

  std::map<int, std::vector<const Assignment*>> per_device;
  for (const auto& a : trace.assignments) {
    per_device[a.device].push_back(&a);
  }
  for (auto& [device, list] : per_device) {
    std::sort(list.begin(), list.end(), [](const Assignment* a, const Assignment* b) {
      return a->start != b->start ? a->start < b->start : a->end < b->end;
    });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->start < list[i - 1]->end) {
        fail("device " + std::to_string(device) + " overlaps tasks " + std::to_string(list[i - 1]->task) + " and " +
             std::to_string(list[i]->task));
      }
    }
  }

  double last_end = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    last_end = std::max(last_end, of_task[t]->end);
    for (std::size_t p : graph.predecessors(t)) {
      if (of_task[t]->start < of_task[p]->end) {
        fail("task " + std::to_string(t) + " starts before predecessor " + std::to_string(p) + " ends");
      }
    }
  }
  if (n > 0 && trace.makespan != last_end) {
    fail("makespan " + std::to_string(trace.makespan) + " differs from last end " + std::to_string(last_end));
  }

  if (profile != nullptr) {
    for (const auto& a : trace.assignments) {
      const std::string& name = trace.device_class[static_cast<std::size_t>(a.device)];
      std::size_t cls = profile->classes.size();
      for (std::size_t c = 0; c < profile->classes.size(); ++c) {
        if (profile->classes[c].name == name) {
          cls = c;
        }
      }
      if (cls == profile->classes.size()) {
        fail("device class '" + name + "' not in profile");
        continue;
      }
      const double want = profile->duration_ms(graph.task(a.task).op, cls);
      const double got = a.end - a.start;
      if (std::abs(got - want) > 1e-9 * std::max({1.0, std::abs(want), std::abs(a.end)})) {
        fail("task " + std::to_string(a.task) + " lasts " + std::to_string(got) + " ms, expected " +
             std::to_string(want));
      }
    }
  }
  return report;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(12);
  out << "nodes,tiles,policy,makespan_ms,efficiency,mean_utilization\n";
  for (const auto& r : rows) {
    out << r.nodes << ',' << r.tiles << ',' << policy_name(r.policy) << ',' << r.makespan_ms << ',' << r.efficiency
        << ',' << r.mean_utilization << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace wsiflow
