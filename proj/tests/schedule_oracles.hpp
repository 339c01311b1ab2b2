#pragma once

// Exhaustive schedule enumeration for small sets of independent tasks, and
// random graph/profile generators for trace checking.

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "wsiflow/device_profile.hpp"
#include "wsiflow/synthetic.hpp"
#include "wsiflow/task_graph.hpp"

namespace schedule_oracle {

// duration[t][d]: time of task t on device d. Independent tasks, all ready at 0.

// Each task, in arrival order, goes to the device that becomes idle first
// (lowest id on ties): first-come first-served list scheduling.
inline double list_schedule(const std::vector<std::vector<double>>& duration, const std::vector<int>& order) {
  const std::size_t devices = duration.front().size();
  std::vector<double> free_at(devices, 0.0);
  double makespan = 0.0;
  for (int t : order) {
    const auto d = static_cast<std::size_t>(std::min_element(free_at.begin(), free_at.end()) - free_at.begin());
    free_at[d] += duration[static_cast<std::size_t>(t)][d];
    makespan = std::max(makespan, free_at[d]);
  }
  return makespan;
}

// Worst FCFS makespan over every arrival order of the tasks.
inline double worst_arrival(const std::vector<std::vector<double>>& duration) {
  std::vector<int> order(duration.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = static_cast<int>(i);
  }
  double worst = 0.0;
  do {
    worst = std::max(worst, list_schedule(duration, order));
  } while (std::next_permutation(order.begin(), order.end()));
  return worst;
}

// Optimal makespan over every assignment of tasks to devices.
inline double optimum(const std::vector<std::vector<double>>& duration) {
  const std::size_t tasks = duration.size();
  const std::size_t devices = duration.front().size();
  std::vector<double> load(devices, 0.0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> place = [&](std::size_t t) {
    if (t == tasks) {
      best = std::min(best, *std::max_element(load.begin(), load.end()));
      return;
    }
    for (std::size_t d = 0; d < devices; ++d) {
      load[d] += duration[t][d];
      if (load[d] < best) {
        place(t + 1);
      }
      load[d] -= duration[t][d];
    }
  };
  place(0);
  return best;
}

inline int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(wsiflow::draw_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// Random DAG over a few tiles: edges go from lower to higher task ids within
// a tile, and from a lower tile to a higher one across tiles.
inline wsiflow::TaskGraph random_graph(std::mt19937_64& rng) {
  wsiflow::TaskGraph g;
  const int tiles = draw(rng, 1, 6);
  std::vector<std::vector<std::size_t>> of_tile(static_cast<std::size_t>(tiles));
  for (int t = 0; t < tiles; ++t) {
    const int n = draw(rng, 1, 9);
    for (int k = 0; k < n; ++k) {
      const auto op = wsiflow::kAllOps[static_cast<std::size_t>(draw(rng, 0, wsiflow::kOpKindCount - 1))];
      of_tile[static_cast<std::size_t>(t)].push_back(g.add_task(static_cast<std::size_t>(t), op));
    }
  }
  const int density = draw(rng, 0, 40);
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      if (draw(rng, 0, 99) < (g.task(a).tile == g.task(b).tile ? density : density / 8)) {
        g.add_edge(a, b);
      }
    }
  }
  return g;
}

inline wsiflow::DeviceProfile random_profile(std::mt19937_64& rng) {
  wsiflow::DeviceProfile p;
  const int accelerators = draw(rng, 0, 2);
  if (accelerators > 0) {
    p.classes.push_back({"accelerator", accelerators});
  }
  p.classes.push_back({std::string(wsiflow::kCpuCore), draw(rng, 1, 4)});
  for (auto& c : p.base_cost_ms) {
    c = draw(rng, 0, 9) == 0 ? 0.0 : 0.5 + 10.0 * wsiflow::draw_unit(rng);
  }
  for (const auto& cls : p.classes) {
    std::array<double, wsiflow::kOpKindCount> row{};
    for (auto& s : row) {
      s = cls.is_cpu() ? 1.0 : 0.25 + 8.0 * wsiflow::draw_unit(rng);
    }
    p.speedup.push_back(row);
  }
  if (draw(rng, 0, 1) == 1) {
    p.io.base_read_ms = 3.0 * wsiflow::draw_unit(rng);
    p.io.alpha = 0.5 * wsiflow::draw_unit(rng);
  }
  return p;
}

}  // namespace schedule_oracle
