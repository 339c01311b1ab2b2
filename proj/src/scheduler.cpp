#include "wsiflow/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <queue>
#include <set>
#include <string>

#include "wsiflow/error.hpp"

namespace wsiflow {

std::string_view policy_name(Policy p) noexcept {
  return p == Policy::Fcfs ? "fcfs" : "pats";
}

std::optional<Policy> policy_from_name(std::string_view name) noexcept {
  if (name == "fcfs") {
    return Policy::Fcfs;
  }
  if (name == "pats") {
    return Policy::Pats;
  }
  return std::nullopt;
}

namespace {

constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

struct ReadyKey {
  double speedup;
  std::uint64_t seq;
  std::size_t task;

  friend bool operator<(const ReadyKey& a, const ReadyKey& b) {
    if (a.speedup != b.speedup) {
      return a.speedup < b.speedup;
    }
    if (a.seq != b.seq) {
      return a.seq < b.seq;
    }
    return a.task < b.task;
  }
};

enum class EventKind : std::uint8_t { TaskDone = 0, ReadDone = 1 };

struct Event {
  double time;
  EventKind kind;
  std::size_t who;   // global device, or node
  std::size_t what;  // task, or tile

  // std::priority_queue is a max-heap; invert for earliest-first.
  friend bool operator<(const Event& a, const Event& b) {
    if (a.time != b.time) {
      return a.time > b.time;
    }
    if (a.kind != b.kind) {
      return a.kind > b.kind;
    }
    if (a.who != b.who) {
      return a.who > b.who;
    }
    return a.what > b.what;
  }
};

struct Node {
  std::size_t held = 0;      // tiles handed to the node and not yet finished
  std::size_t admitted = 0;  // tiles open for computation
  std::deque<std::size_t> read_queue;
  std::deque<std::size_t> staged;  // read, waiting for a compute slot
  bool reading = false;
  bool started = false;
  std::set<ReadyKey> ready;
  std::set<int> idle;  // local device ids
  bool dirty = true;
};

class Simulator {
 public:
  Simulator(const TaskGraph& graph, const DeviceProfile& profile, Policy policy, const SimOptions& options)
      : graph_(graph), profile_(profile), policy_(policy), options_(options) {}

  SimResult run() {
    profile_.validate();
    options_.io.validate();
    if (options_.nodes < 1) {
      throw InvalidArgument("simulate: node count must be >= 1");
    }
    if (options_.prefetch_depth < 1) {
      throw InvalidArgument("simulate: prefetch depth must be >= 1");
    }
    graph_.validate();

    per_node_ = profile_.device_count();
    local_class_ = profile_.device_classes();
    const std::size_t devices = static_cast<std::size_t>(per_node_) * static_cast<std::size_t>(options_.nodes);
    busy_.assign(devices, 0.0);
    read_latency_ = options_.io.read_latency(options_.nodes);

    const std::size_t n = graph_.size();
    remaining_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      remaining_[t] = graph_.predecessors(t).size();
    }
    tile_tasks_.assign(graph_.tile_count(), {});
    for (const auto& t : graph_.tasks()) {
      tile_tasks_[t.tile].push_back(t.id);
    }
    tile_node_.assign(tile_tasks_.size(), kNoNode);
    tile_admitted_.assign(tile_tasks_.size(), 0);
    tile_left_.resize(tile_tasks_.size());
    for (std::size_t tile = 0; tile < tile_tasks_.size(); ++tile) {
      tile_left_[tile] = tile_tasks_[tile].size();
    }
    key_.resize(kOpKindCount);
    for (OpKind op : kAllOps) {
      key_[static_cast<std::size_t>(op)] = policy_ == Policy::Pats ? profile_.accelerator_speedup(op) : 0.0;
    }

    nodes_.assign(static_cast<std::size_t>(options_.nodes), Node{});
    for (auto& node : nodes_) {
      for (int d = 0; d < per_node_; ++d) {
        node.idle.insert(d);
      }
    }

    SimResult result;
    if (options_.keep_trace) {
      result.trace.assignments.reserve(n);
    }
    trace_ = options_.keep_trace ? &result.trace : nullptr;

    settle(0.0);
    std::size_t finished = 0;
    while (!events_.empty()) {
      const double now = events_.top().time;
      current_ = now;
      while (!events_.empty() && events_.top().time == now) {
        const Event ev = events_.top();
        events_.pop();
        if (ev.kind == EventKind::TaskDone) {
          task_done(ev);
          ++finished;
        } else {
          read_done(ev.who, ev.what);
        }
      }
      settle(now);
    }
    if (finished != n) {
      throw Error("simulate: " + std::to_string(n - finished) + " tasks never became ready");
    }

    auto& trace = result.trace;
    trace.makespan = makespan_;
    trace.nodes = options_.nodes;
    trace.devices_per_node = per_node_;
    trace.device_class.reserve(devices);
    for (std::size_t d = 0; d < devices; ++d) {
      trace.device_class.push_back(profile_.classes[local_class_[d % static_cast<std::size_t>(per_node_)]].name);
    }
    result.metrics.makespan = makespan_;
    result.metrics.tasks = n;
    result.metrics.mean_read_latency_ms = reads_ > 0 ? read_latency_ : 0.0;
    result.metrics.utilization.resize(devices);
    for (std::size_t d = 0; d < devices; ++d) {
      result.metrics.utilization[d] = makespan_ > 0.0 ? busy_[d] / makespan_ : 0.0;
    }
    return result;
  }

 private:
  void mark(std::size_t node) { nodes_[node].dirty = true; }

  void make_ready(std::size_t task) {
    const std::size_t node = tile_node_[graph_.task(task).tile];
    nodes_[node].ready.insert({key_[static_cast<std::size_t>(graph_.task(task).op)], seq_++, task});
    mark(node);
  }

  void task_done(const Event& ev) {
    const std::size_t node = ev.who / static_cast<std::size_t>(per_node_);
    nodes_[node].idle.insert(static_cast<int>(ev.who % static_cast<std::size_t>(per_node_)));
    mark(node);
    const auto& task = graph_.task(ev.what);
    for (std::size_t s : graph_.successors(ev.what)) {
      if (--remaining_[s] == 0 && tile_admitted_[graph_.task(s).tile] != 0) {
        make_ready(s);
      }
    }
    if (--tile_left_[task.tile] == 0) {
      --nodes_[node].held;
      --nodes_[node].admitted;
    }
  }

  void read_done(std::size_t node, std::size_t tile) {
    auto& nd = nodes_[node];
    nd.staged.push_back(tile);
    nd.reading = false;
    start_read(node, current_);
    mark(node);
  }

  void start_read(std::size_t node, double now) {
    auto& nd = nodes_[node];
    if (nd.reading || nd.read_queue.empty()) {
      return;
    }
    const std::size_t tile = nd.read_queue.front();
    nd.read_queue.pop_front();
    nd.reading = true;
    ++reads_;
    events_.push({now + read_latency_, EventKind::ReadDone, node, tile});
  }

  std::size_t window() const {
    return static_cast<std::size_t>(options_.prefetch_depth) * static_cast<std::size_t>(per_node_);
  }

  bool tiles_left() {
    while (next_tile_ < tile_tasks_.size() && tile_tasks_[next_tile_].empty()) {
      ++next_tile_;
    }
    return next_tile_ < tile_tasks_.size();
  }

  // Compute starts once a full window is resident (or nothing more can
  // arrive); after that a staged tile is admitted whenever a slot frees.
  void admit(std::size_t node) {
    auto& nd = nodes_[node];
    if (!nd.started) {
      const bool more = nd.reading || !nd.read_queue.empty() || tiles_left();
      if (nd.staged.size() < window() && more) {
        return;
      }
      nd.started = true;
    }
    while (nd.admitted < window() && !nd.staged.empty()) {
      const std::size_t tile = nd.staged.front();
      nd.staged.pop_front();
      ++nd.admitted;
      tile_admitted_[tile] = 1;
      for (std::size_t t : tile_tasks_[tile]) {
        if (remaining_[t] == 0) {
          make_ready(t);
        }
      }
    }
  }

  // Free tiles go out one at a time, round robin over the nodes in id order,
  // so nodes asking at the same instant share them evenly.
  void request_tiles(const std::vector<std::size_t>& asking) {
    for (bool handed = true; handed && tiles_left();) {
      handed = false;
      for (std::size_t node : asking) {
        auto& nd = nodes_[node];
        if (nd.held >= 2 * window() || !tiles_left()) {
          continue;
        }
        const std::size_t tile = next_tile_++;
        tile_node_[tile] = node;
        ++nd.held;
        nd.read_queue.push_back(tile);
        handed = true;
      }
    }
  }

  void dispatch(std::size_t node, double now) {
    auto& nd = nodes_[node];
    for (auto it = nd.idle.begin(); it != nd.idle.end() && !nd.ready.empty();) {
      const int local = *it;
      const bool cpu = profile_.classes[local_class_[static_cast<std::size_t>(local)]].is_cpu();
      auto pick = nd.ready.begin();
      if (!cpu) {
        // Highest speedup; among equals the earliest-ready.
        const double top = std::prev(nd.ready.end())->speedup;
        pick = nd.ready.lower_bound({top, 0, 0});
      }
      const std::size_t task = pick->task;
      nd.ready.erase(pick);
      it = nd.idle.erase(it);

      const std::size_t device = node * static_cast<std::size_t>(per_node_) + static_cast<std::size_t>(local);
      const double duration = profile_.duration_ms(graph_.task(task).op, local_class_[static_cast<std::size_t>(local)]);
      const double end = now + duration;
      busy_[device] += duration;
      makespan_ = std::max(makespan_, end);
      if (trace_ != nullptr) {
        trace_->assignments.push_back({task, static_cast<int>(device), now, end});
      }
      events_.push({end, EventKind::TaskDone, device, task});
    }
  }

  void settle(double now) {
    current_ = now;
    asking_.clear();
    for (std::size_t node = 0; node < nodes_.size(); ++node) {
      if (nodes_[node].dirty) {
        nodes_[node].dirty = false;
        asking_.push_back(node);
        admit(node);
      }
    }
    request_tiles(asking_);
    for (std::size_t node : asking_) {
      start_read(node, now);
      dispatch(node, now);
    }
  }

  const TaskGraph& graph_;
  const DeviceProfile& profile_;
  Policy policy_;
  SimOptions options_;

  int per_node_ = 0;
  std::vector<std::size_t> local_class_;
  std::vector<double> key_;
  std::vector<std::size_t> remaining_;
  std::vector<std::vector<std::size_t>> tile_tasks_;
  std::vector<std::size_t> tile_node_;
  std::vector<std::uint8_t> tile_admitted_;
  std::vector<std::size_t> tile_left_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> asking_;
  std::vector<double> busy_;
  std::priority_queue<Event> events_;
  std::size_t next_tile_ = 0;
  std::uint64_t seq_ = 0;
  std::size_t reads_ = 0;
  double read_latency_ = 0.0;
  double makespan_ = 0.0;
  double current_ = 0.0;
  ScheduleTrace* trace_ = nullptr;
};

}  // namespace

SimResult simulate(const TaskGraph& graph, const DeviceProfile& profile, Policy policy, const SimOptions& options) {
  return Simulator(graph, profile, policy, options).run();
}

ScheduleTrace schedule_fcfs(const TaskGraph& graph, const DeviceProfile& profile) {
  return simulate(graph, profile, Policy::Fcfs).trace;
}

ScheduleTrace schedule_pats(const TaskGraph& graph, const DeviceProfile& profile) {
  return simulate(graph, profile, Policy::Pats).trace;
}

namespace {

double run_makespan(const DeviceProfile& profile, Policy policy, std::size_t tiles, int nodes, SimOptions options) {
  options.nodes = nodes;
  options.keep_trace = false;
  return simulate(build_task_graph(tiles), profile, policy, options).metrics.makespan;
}

}  // namespace

std::vector<ScalingRow> weak_scaling(const DeviceProfile& profile, Policy policy, std::size_t tiles_per_node,
                                     std::span<const int> node_counts, const SimOptions& base) {
  if (tiles_per_node == 0) {
    throw InvalidArgument("weak_scaling: tiles per node must be >= 1");
  }
  const double baseline = run_makespan(profile, policy, tiles_per_node, 1, base);
  std::vector<ScalingRow> rows;
  for (int n : node_counts) {
    if (n < 1) {
      throw InvalidArgument("weak_scaling: node counts must be >= 1");
    }
    const std::size_t tiles = tiles_per_node * static_cast<std::size_t>(n);
    const double makespan = n == 1 ? baseline : run_makespan(profile, policy, tiles, n, base);
    rows.push_back({n, tiles, makespan, makespan > 0.0 ? baseline / makespan : 1.0});
  }
  return rows;
}

double fit_contention_alpha(const DeviceProfile& profile, Policy policy, std::size_t tiles_per_node, int nodes,
                            double target, const SimOptions& base, double tolerance) {
  if (!(target > 0.0 && target < 1.0)) {
    throw InvalidArgument("fit_contention_alpha: target efficiency must lie in (0, 1)");
  }
  if (!(base.io.base_read_ms > 0.0)) {
    throw InvalidArgument("fit_contention_alpha: io model needs a positive base read latency");
  }
  const double baseline = run_makespan(profile, policy, tiles_per_node, 1, base);
  const std::size_t tiles = tiles_per_node * static_cast<std::size_t>(nodes);
  const auto efficiency = [&](double alpha) {
    SimOptions o = base;
    o.io.alpha = alpha;
    return baseline / run_makespan(profile, policy, tiles, nodes, o);
  };

  double lo = 0.0;
  double hi = 1e-3;
  while (efficiency(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw Error("fit_contention_alpha: efficiency never drops to the target");
    }
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double e = efficiency(mid);
    if (std::abs(e - target) <= tolerance) {
      return mid;
    }
    (e > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void write_trace_jsonl(std::ostream& out, const TaskGraph& graph, const ScheduleTrace& trace) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& a : trace.assignments) {
    const auto& t = graph.task(a.task);
    out << "{\"task\":" << a.task << ",\"tile\":" << t.tile << ",\"op\":\"" << op_name(t.op)
        << "\",\"device\":" << a.device << ",\"device_class\":\""
        << trace.device_class.at(static_cast<std::size_t>(a.device)) << "\",\"start\":" << a.start
        << ",\"end\":" << a.end << "}\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace wsiflow
