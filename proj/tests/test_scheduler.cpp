#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "schedule_oracles.hpp"
#include "wsiflow/device_profile.hpp"
#include "wsiflow/error.hpp"
#include "wsiflow/scheduler.hpp"
#include "wsiflow/task_graph.hpp"
#include "wsiflow/trace.hpp"

using namespace wsiflow;

namespace {

DeviceProfile flat_profile(std::vector<DeviceClass> classes, double cost = 10.0) {
  DeviceProfile p;
  p.classes = std::move(classes);
  p.base_cost_ms.fill(cost);
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    std::array<double, kOpKindCount> row{};
    row.fill(1.0);
    p.speedup.push_back(row);
  }
  return p;
}

std::size_t class_index(const DeviceProfile& p, std::string_view name) {
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    if (p.classes[c].name == name) {
      return c;
    }
  }
  return p.classes.size();
}

const Assignment& assignment_of(const ScheduleTrace& trace, std::size_t task) {
  for (const auto& a : trace.assignments) {
    if (a.task == task) {
      return a;
    }
  }
  throw std::logic_error("task missing from trace");
}

}  // namespace

TEST_CASE("task graph shape") {
  const auto one = build_task_graph(1);
  CHECK(one.size() == 11);
  CHECK(one.edge_count() == 10);
  std::set<OpKind> ops;
  for (const auto& t : one.tasks()) {
    ops.insert(t.op);
  }
  CHECK(ops.size() == kOpKindCount);
  CHECK(one.topological_order().size() == 11);

  CHECK_THROWS_AS(build_task_graph(0), InvalidArgument);

  const auto many = build_task_graph(5);
  CHECK(many.size() == 55);
  CHECK(many.edge_count() == 50);
  CHECK(many.tile_count() == 5);
  for (const auto& t : many.tasks()) {
    for (std::size_t s : many.successors(t.id)) {
      CHECK(many.task(s).tile == t.tile);
    }
  }
  CHECK(many.stage_tasks().size() == 10);
}

TEST_CASE("task graph validation") {
  TaskGraph g;
  const auto a = g.add_task(0, OpKind::RgbToGray);
  const auto b = g.add_task(0, OpKind::MorphOpen);
  const auto c = g.add_task(1, OpKind::FillHoles);
  g.add_edge(a, b);
  g.add_edge(b, c);
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(g.add_edge(a, 9), InvalidArgument);
  CHECK_THROWS_AS(g.add_edge(a, a), InvalidArgument);

  TaskGraph backwards = g;
  backwards.add_edge(c, a);
  CHECK_THROWS_AS(backwards.validate(), InvalidArgument);

  TaskGraph cyclic;
  const auto x = cyclic.add_task(0, OpKind::RgbToGray);
  const auto y = cyclic.add_task(0, OpKind::MorphOpen);
  cyclic.add_edge(x, y);
  cyclic.add_edge(y, x);
  CHECK_THROWS_AS(cyclic.validate(), InvalidArgument);
  CHECK_THROWS_AS(simulate(cyclic, preset_profile("homogeneous"), Policy::Fcfs), InvalidArgument);
}

TEST_CASE("device profiles") {
  for (const auto& name : preset_names()) {
    const auto p = preset_profile(name);
    CHECK_NOTHROW(p.validate());
    const auto back = parse_profile(profile_to_json(p));
    CHECK(back.classes.size() == p.classes.size());
    CHECK(back.base_cost_ms == p.base_cost_ms);
    CHECK(back.speedup == p.speedup);
  }
  CHECK_THROWS_AS(preset_profile("no-such-profile"), InvalidArgument);
  CHECK_THROWS(parse_profile("{not json"));
  CHECK_THROWS_AS(parse_profile(R"({"classes": []})"), InvalidArgument);

  auto bad = flat_profile({{std::string(kCpuCore), 1}});
  bad.speedup[0][0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  const auto fig3 = preset_profile("fig3-like");
  CHECK(fig3.accelerator_speedup(OpKind::RgbToGray) > 1.5);
  CHECK(fig3.accelerator_speedup(OpKind::MorphReconstruction) > 1.5);
  // Atomic-heavy operations gain the least from the accelerator.
  for (OpKind op : kAllOps) {
    if (op != OpKind::ConnectedComponents && op != OpKind::AreaThreshold) {
      CHECK(fig3.accelerator_speedup(OpKind::ConnectedComponents) < fig3.accelerator_speedup(op));
      CHECK(fig3.accelerator_speedup(OpKind::AreaThreshold) < fig3.accelerator_speedup(op));
    }
  }

  const IoModel io{.base_read_ms = 10.0, .alpha = 0.5};
  CHECK(io.read_latency(1) == 10.0);
  CHECK(io.read_latency(3) == 20.0);
  CHECK_THROWS_AS((IoModel{.base_read_ms = -1.0}.validate()), InvalidArgument);
}

TEST_CASE("simulation on simple device sets") {
  SUBCASE("one device runs everything back to back") {
    std::mt19937_64 rng(1);
    auto p = flat_profile({{std::string(kCpuCore), 1}});
    for (auto& c : p.base_cost_ms) {
      c = 1.0 + 9.0 * draw_unit(rng);
    }
    const auto g = build_task_graph(3);
    double total = 0.0;
    for (const auto& t : g.tasks()) {
      total += p.duration_ms(t.op, 0);
    }
    for (Policy pol : {Policy::Fcfs, Policy::Pats}) {
      CHECK(simulate(g, p, pol).metrics.makespan == doctest::Approx(total).epsilon(1e-12));
    }
  }
  SUBCASE("two identical devices and two equal tasks") {
    const auto p = flat_profile({{std::string(kCpuCore), 2}}, 7.0);
    TaskGraph g;
    g.add_task(0, OpKind::RgbToGray);
    g.add_task(0, OpKind::RgbToGray);
    CHECK(simulate(g, p, Policy::Fcfs).metrics.makespan == 7.0);
    CHECK(simulate(g, p, Policy::Pats).metrics.makespan == 7.0);
  }
  SUBCASE("bad options") {
    const auto p = preset_profile("homogeneous");
    const auto g = build_task_graph(1);
    SimOptions no_nodes;
    no_nodes.nodes = 0;
    CHECK_THROWS_AS(simulate(g, p, Policy::Fcfs, no_nodes), InvalidArgument);
    SimOptions no_window;
    no_window.prefetch_depth = 0;
    CHECK_THROWS_AS(simulate(g, p, Policy::Fcfs, no_window), InvalidArgument);
    SimOptions bad_io;
    bad_io.io = {.base_read_ms = 1.0, .alpha = -1.0};
    CHECK_THROWS_AS(simulate(g, p, Policy::Fcfs, bad_io), InvalidArgument);
  }
}

TEST_CASE("PATS request rule") {
  TaskGraph g;
  const auto fast = g.add_task(0, OpKind::RgbToGray);  // 10.0x on the accelerator
  const auto slow = g.add_task(0, OpKind::MorphOpen);  // 1.1x
  const auto with_speedups = [](std::vector<DeviceClass> classes) {
    auto p = flat_profile(std::move(classes));
    const auto acc = class_index(p, "accelerator");
    p.speedup[acc][static_cast<std::size_t>(OpKind::RgbToGray)] = 10.0;
    p.speedup[acc][static_cast<std::size_t>(OpKind::MorphOpen)] = 1.1;
    return p;
  };

  SUBCASE("the accelerator asks first and takes the 10x task") {
    const auto p = with_speedups({{"accelerator", 1}, {std::string(kCpuCore), 1}});
    const auto trace = simulate(g, p, Policy::Pats).trace;
    CHECK(assignment_of(trace, fast).device == 0);
    CHECK(assignment_of(trace, slow).device == 1);
  }
  SUBCASE("a cpu-core asks first and takes the 1.1x task") {
    const auto p = with_speedups({{std::string(kCpuCore), 1}, {"accelerator", 1}});
    const auto trace = simulate(g, p, Policy::Pats).trace;
    CHECK(assignment_of(trace, slow).device == 0);
    CHECK(assignment_of(trace, fast).device == 1);
  }
  SUBCASE("FCFS hands out in readiness order") {
    const auto p = with_speedups({{std::string(kCpuCore), 1}, {"accelerator", 1}});
    const auto trace = simulate(g, p, Policy::Fcfs).trace;
    CHECK(assignment_of(trace, fast).device == 0);
    CHECK(assignment_of(trace, slow).device == 1);
  }
}

TEST_CASE("bimodal profile against exhaustive schedules") {
  const auto p = preset_profile("bimodal");
  const auto classes = p.device_classes();
  std::vector<OpKind> ops(4, OpKind::MorphOpen);
  ops.insert(ops.end(), 4, OpKind::RgbToGray);
  std::vector<std::vector<double>> duration;
  TaskGraph g;
  for (OpKind op : ops) {
    g.add_task(0, op);
    std::vector<double> row;
    for (std::size_t cls : classes) {
      row.push_back(p.duration_ms(op, cls));
    }
    duration.push_back(row);
  }
  const double worst = schedule_oracle::worst_arrival(duration);
  const double best = schedule_oracle::optimum(duration);
  const double pats = simulate(g, p, Policy::Pats).metrics.makespan;
  const double fcfs = simulate(g, p, Policy::Fcfs).metrics.makespan;
  CHECK(pats < worst);
  CHECK(pats <= 1.1 * best);
  CHECK(pats < fcfs);
  std::vector<int> arrival(8);
  std::iota(arrival.begin(), arrival.end(), 0);
  CHECK(fcfs == doctest::Approx(schedule_oracle::list_schedule(duration, arrival)));
}

TEST_CASE("policy properties") {
  SUBCASE("one device class makes the policies identical") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      auto p = schedule_oracle::random_profile(rng);
      p.classes = {{std::string(kCpuCore), p.device_count()}};
      std::array<double, kOpKindCount> ones{};
      ones.fill(1.0);
      p.speedup = {ones};
      const auto g = schedule_oracle::random_graph(rng);
      CHECK(simulate(g, p, Policy::Fcfs).metrics.makespan == simulate(g, p, Policy::Pats).metrics.makespan);
    }
    const auto h = preset_profile("homogeneous");
    const auto g = build_task_graph(40);
    CHECK(simulate(g, h, Policy::Fcfs).metrics.makespan == simulate(g, h, Policy::Pats).metrics.makespan);
  }
  SUBCASE("scaling every cost scales the makespan and keeps the decisions") {
    const auto p = preset_profile("fig3-like");
    const auto g = build_task_graph(30);
    for (double k : {0.5, 3.0, 4.0}) {
      auto scaled = p;
      for (auto& c : scaled.base_cost_ms) {
        c *= k;
      }
      for (Policy pol : {Policy::Fcfs, Policy::Pats}) {
        const auto a = simulate(g, p, pol).trace;
        const auto b = simulate(g, scaled, pol).trace;
        CHECK(b.makespan == doctest::Approx(k * a.makespan).epsilon(1e-12));
        REQUIRE(a.assignments.size() == b.assignments.size());
        for (std::size_t i = 0; i < a.assignments.size(); ++i) {
          CHECK(a.assignments[i].task == b.assignments[i].task);
          CHECK(a.assignments[i].device == b.assignments[i].device);
        }
      }
    }
  }
  SUBCASE("simulation is deterministic") {
    const auto p = preset_profile("fig3-like");
    const auto g = build_task_graph(25);
    SimOptions o{.nodes = 3, .io = {.base_read_ms = 5.0, .alpha = 0.1}};
    std::ostringstream first;
    std::ostringstream second;
    write_trace_jsonl(first, g, simulate(g, p, Policy::Pats, o).trace);
    write_trace_jsonl(second, g, simulate(g, p, Policy::Pats, o).trace);
    const std::string lines = first.str();
    CHECK(lines == second.str());
    CHECK(std::count(lines.begin(), lines.end(), '\n') == static_cast<long>(g.size()));
  }
}

TEST_CASE("trace validator") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto g = schedule_oracle::random_graph(rng);
    const auto p = schedule_oracle::random_profile(rng);
    SimOptions o;
    o.nodes = schedule_oracle::draw(rng, 1, 3);
    o.prefetch_depth = schedule_oracle::draw(rng, 1, 2);
    o.io = p.io;
    for (Policy pol : {Policy::Fcfs, Policy::Pats}) {
      const auto report = validate_trace(g, simulate(g, p, pol, o).trace, &p);
      CHECK_MESSAGE(report.ok(), (report.ok() ? "" : report.violations.front()));
    }
  }

  const auto p = flat_profile({{std::string(kCpuCore), 2}});
  TaskGraph g;
  const auto a = g.add_task(0, OpKind::RgbToGray);
  const auto b = g.add_task(0, OpKind::MorphOpen);
  g.add_edge(a, b);
  const auto good = simulate(g, p, Policy::Fcfs).trace;
  CHECK(validate_trace(g, good, &p).ok());

  auto early = good;
  early.assignments[1].start = 5.0;
  early.assignments[1].end = 15.0;
  early.assignments[1].device = 1;
  early.makespan = 15.0;
  CHECK_FALSE(validate_trace(g, early, &p).ok());

  auto twice = good;
  twice.assignments.push_back(twice.assignments.front());
  CHECK_FALSE(validate_trace(g, twice, &p).ok());

  auto missing = good;
  missing.assignments.pop_back();
  CHECK_FALSE(validate_trace(g, missing).ok());

  auto wrong_duration = good;
  wrong_duration.assignments[1].end += 1.0;
  wrong_duration.makespan += 1.0;
  CHECK(validate_trace(g, wrong_duration).ok());
  CHECK_FALSE(validate_trace(g, wrong_duration, &p).ok());

  TaskGraph pair;
  pair.add_task(0, OpKind::RgbToGray);
  pair.add_task(0, OpKind::RgbToGray);
  ScheduleTrace overlap;
  overlap.devices_per_node = 2;
  overlap.device_class = {std::string(kCpuCore), std::string(kCpuCore)};
  overlap.assignments = {{0, 0, 0.0, 10.0}, {1, 0, 5.0, 15.0}};
  overlap.makespan = 15.0;
  CHECK_FALSE(validate_trace(pair, overlap).ok());
}

TEST_CASE("weak scaling") {
  const auto p = preset_profile("fig3-like");
  const std::vector<int> nodes = {1, 2, 3, 8, 16};

  SUBCASE("no contention: perfect efficiency") {
    for (Policy pol : {Policy::Fcfs, Policy::Pats}) {
      const auto rows = weak_scaling(p, pol, 40, nodes);
      CHECK(rows.front().efficiency == 1.0);
      for (const auto& r : rows) {
        CHECK(std::abs(r.efficiency - 1.0) <= 1e-9);
        CHECK(r.tiles == 40 * static_cast<std::size_t>(r.nodes));
      }
    }
  }
  SUBCASE("linear contention: efficiency falls with every added node") {
    SimOptions o;
    o.io = {.base_read_ms = 100.0, .alpha = 0.05};
    for (Policy pol : {Policy::Fcfs, Policy::Pats}) {
      const auto rows = weak_scaling(p, pol, 40, nodes, o);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].efficiency < rows[i - 1].efficiency);
      }
    }
  }
  SUBCASE("contention fit") {
    SimOptions o;
    o.io = {.base_read_ms = 100.0, .alpha = 0.0};
    const double alpha = fit_contention_alpha(p, Policy::Pats, 40, 16, 0.9, o, 1e-3);
    o.io.alpha = alpha;
    const std::array<int, 1> n16{16};
    CHECK(weak_scaling(p, Policy::Pats, 40, n16, o).front().efficiency == doctest::Approx(0.9).epsilon(2e-3));
    CHECK_THROWS_AS(fit_contention_alpha(p, Policy::Pats, 40, 16, 1.5, o), InvalidArgument);
    o.io.base_read_ms = 0.0;
    CHECK_THROWS_AS(fit_contention_alpha(p, Policy::Pats, 40, 16, 0.9, o), InvalidArgument);
  }
  CHECK_THROWS_AS(weak_scaling(p, Policy::Pats, 0, nodes), InvalidArgument);
}

TEST_CASE("metrics CSV") {
  std::ostringstream out;
  write_metrics_csv(out, {{.nodes = 2, .tiles = 10, .policy = Policy::Pats, .makespan_ms = 5.0}});
  CHECK(out.str().rfind("nodes,tiles,policy,makespan_ms,efficiency,mean_utilization\n2,10,pats,5,", 0) == 0);
  CHECK(policy_from_name("fcfs") == Policy::Fcfs);
  CHECK_FALSE(policy_from_name("random").has_value());
}
