#pragma once

// Irregular wavefront propagation engine.
//
// A rule describes, for an active element i and a neighbour j, whether i's
// value should propagate into j and what j becomes. The engine first runs
// optional raster / anti-raster sweeps (regular access, sequential), then
// drains a wavefront of active elements held in per-worker queues with work
// stealing. Cell updates are compare-and-swap loops so several workers may
// race on the same target cell.

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "wsiflow/error.hpp"

namespace wsiflow {

enum class Connectivity : std::uint8_t { Four = 4, Eight = 8 };
enum class QueueOrder : std::uint8_t { Fifo, Lifo };

template <class V>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<V> cells;

  std::size_t size() const noexcept { return cells.size(); }
};

template <class R>
concept PropagationRule = requires(const R rule, std::size_t i, typename R::Value v) {
  // Should the value v (held by i) propagate into j, whose value is w?
  { rule.condition(i, v, i, v) } -> std::convertible_to<bool>;
  // New value of j after receiving v from i.
  { rule.update(i, v, i, v) } -> std::convertible_to<typename R::Value>;
  // Strict improvement of j's convergence measure from old to new.
  { rule.improves(i, v, v) } -> std::convertible_to<bool>;
};

struct IwppOptions {
  int workers = 1;
  Connectivity connectivity = Connectivity::Eight;
  // Raster + anti-raster pairs run before the queue phase.
  int scan_sweeps = 0;
  QueueOrder order = QueueOrder::Fifo;
};

struct IwppStats {
  std::size_t scan_updates = 0;
  std::size_t queued = 0;     // wavefront insertions, including the initial front
  std::size_t processed = 0;  // wavefront extractions
  std::size_t updates = 0;    // accepted propagations in the queue phase
};

namespace detail {

struct NeighbourOffset {
  int dy;
  int dx;
};

inline std::span<const NeighbourOffset> neighbourhood(Connectivity c) {
  static constexpr NeighbourOffset k4[] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  static constexpr NeighbourOffset k8[] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
  if (c == Connectivity::Four) {
    return k4;
  }
  return k8;
}

// Neighbours preceding a pixel in raster order; the rest follow it.
inline std::span<const NeighbourOffset> preceding(Connectivity c) {
  return neighbourhood(c).first(c == Connectivity::Four ? 2 : 4);
}
inline std::span<const NeighbourOffset> following(Connectivity c) {
  return neighbourhood(c).last(c == Connectivity::Four ? 2 : 4);
}

struct alignas(64) SubQueue {
  std::mutex mutex;
  std::deque<std::size_t> items;
};

template <PropagationRule Rule>
class Propagator {
 public:
  using Value = typename Rule::Value;

  Propagator(Grid<Value>& grid, const Rule& rule) : grid_(grid), rule_(rule) {}

  // Tries to move i's value into j; true when j was updated.
  bool propagate(std::size_t i, std::size_t j) const {
    const Value src = std::atomic_ref<Value>(grid_.cells[i]).load(std::memory_order_acquire);
    std::atomic_ref<Value> target(grid_.cells[j]);
    Value dst = target.load(std::memory_order_acquire);
    while (rule_.condition(i, src, j, dst)) {
      const Value next = rule_.update(i, src, j, dst);
      if (!rule_.improves(j, next, dst)) {
        throw NonMonotoneRule("propagation " + std::to_string(i) + " -> " + std::to_string(j) +
                              " does not improve the target cell");
      }
      if (target.compare_exchange_weak(dst, next, std::memory_order_acq_rel, std::memory_order_acquire)) {
        return true;
      }
    }
    return false;
  }

  bool inside(int y, int x) const noexcept { return y >= 0 && x >= 0 && y < grid_.height && x < grid_.width; }
  int width() const noexcept { return grid_.width; }
  int height() const noexcept { return grid_.height; }

 private:
  Grid<Value>& grid_;
  const Rule& rule_;
};

}  // namespace detail

/// Runs the wavefront propagation to its fixpoint, in place on `grid`.
///
/// Only seeds and cells updated along the way ever act as sources. With
/// scan_sweeps > 0 the sweeps respect the same rule, and the queue phase starts
/// from every active cell that can still propagate somewhere.
template <PropagationRule Rule>
IwppStats iwpp_run(Grid<typename Rule::Value>& grid, std::span<const std::size_t> seeds, const Rule& rule,
                   const IwppOptions& options = {}) {
  if (grid.width < 1 || grid.height < 1 ||
      grid.cells.size() != static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height)) {
    throw InvalidArgument("iwpp grid dimensions do not match its cell count");
  }
  for (std::size_t s : seeds) {
    if (s >= grid.cells.size()) {
      throw InvalidArgument("iwpp seed " + std::to_string(s) + " lies outside the grid");
    }
  }

  const detail::Propagator<Rule> prop(grid, rule);
  const auto nbrs = detail::neighbourhood(options.connectivity);
  const int w = grid.width;
  const int h = grid.height;
  IwppStats stats;

  std::vector<std::size_t> front;
  if (options.scan_sweeps > 0 && !seeds.empty()) {
    std::vector<std::uint8_t> active(grid.cells.size(), 0);
    for (std::size_t s : seeds) {
      active[s] = 1;
    }
    const auto pull = [&](int y, int x, std::span<const detail::NeighbourOffset> from) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      for (const auto& o : from) {
        const int qy = y + o.dy;
        const int qx = x + o.dx;
        if (!prop.inside(qy, qx)) {
          continue;
        }
        const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
        if (active[q] && prop.propagate(q, p)) {
          active[p] = 1;
          ++stats.scan_updates;
        }
      }
    };
    for (int sweep = 0; sweep < options.scan_sweeps; ++sweep) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          pull(y, x, detail::preceding(options.connectivity));
        }
      }
      for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
          pull(y, x, detail::following(options.connectivity));
        }
      }
    }
    // Active cells that can still push into a neighbour form the initial front.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (!active[p]) {
          continue;
        }
        const auto v = grid.cells[p];
        const bool live = std::any_of(nbrs.begin(), nbrs.end(), [&](const detail::NeighbourOffset& o) {
          const int qy = y + o.dy;
          const int qx = x + o.dx;
          if (!prop.inside(qy, qx)) {
            return false;
          }
          const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
          return static_cast<bool>(rule.condition(p, v, q, grid.cells[q]));
        });
        if (live) {
          front.push_back(p);
        }
      }
    }
  } else {
    front.assign(seeds.begin(), seeds.end());
  }

  stats.queued = front.size();
  if (front.empty()) {
    return stats;
  }

  // Expands element e; calls emit(j) for every neighbour it updated.
  const auto expand = [&](std::size_t e, auto&& emit) {
    const int y = static_cast<int>(e / static_cast<std::size_t>(w));
    const int x = static_cast<int>(e % static_cast<std::size_t>(w));
    for (const auto& o : nbrs) {
      const int qy = y + o.dy;
      const int qx = x + o.dx;
      if (!prop.inside(qy, qx)) {
        continue;
      }
      const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
      if (prop.propagate(e, q)) {
        emit(q);
      }
    }
  };

  const bool lifo = options.order == QueueOrder::Lifo;
  const int workers = std::max(1, options.workers);

  if (workers == 1) {
    std::deque<std::size_t> queue(front.begin(), front.end());
    while (!queue.empty()) {
      std::size_t e = 0;
      if (lifo) {
        e = queue.back();
        queue.pop_back();
      } else {
        e = queue.front();
        queue.pop_front();
      }
      ++stats.processed;
      expand(e, [&](std::size_t q) {
        queue.push_back(q);
        ++stats.updates;
        ++stats.queued;
      });
    }
    return stats;
  }

  std::vector<detail::SubQueue> queues(static_cast<std::size_t>(workers));
  for (std::size_t t = 0; t < queues.size(); ++t) {
    const std::size_t b = front.size() * t / queues.size();
    const std::size_t e = front.size() * (t + 1) / queues.size();
    queues[t].items.assign(front.begin() + static_cast<std::ptrdiff_t>(b), front.begin() + static_cast<std::ptrdiff_t>(e));
  }
  std::atomic<std::size_t> pending{front.size()};
  std::atomic<bool> abort{false};
  std::vector<IwppStats> local(queues.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto take_own = [&](detail::SubQueue& q, std::size_t& out) {
    std::lock_guard lock(q.mutex);
    if (q.items.empty()) {
      return false;
    }
    if (lifo) {
      out = q.items.back();
      q.items.pop_back();
    } else {
      out = q.items.front();
      q.items.pop_front();
    }
    return true;
  };
  // Thieves take from the end the owner does not use.
  const auto steal = [&](std::size_t self, std::size_t& out) {
    for (std::size_t k = 1; k < queues.size(); ++k) {
      auto& victim = queues[(self + k) % queues.size()];
      std::lock_guard lock(victim.mutex);
      if (victim.items.empty()) {
        continue;
      }
      if (lifo) {
        out = victim.items.front();
        victim.items.pop_front();
      } else {
        out = victim.items.back();
        victim.items.pop_back();
      }
      return true;
    }
    return false;
  };

  {
    std::vector<std::jthread> team;
    team.reserve(queues.size());
    for (std::size_t t = 0; t < queues.size(); ++t) {
      team.emplace_back([&, t] {
        auto& mine = queues[t];
        auto& st = local[t];
        try {
          while (!abort.load(std::memory_order_relaxed)) {
            std::size_t e = 0;
            if (take_own(mine, e) || steal(t, e)) {
              ++st.processed;
              expand(e, [&](std::size_t q) {
                pending.fetch_add(1, std::memory_order_acq_rel);
                std::lock_guard lock(mine.mutex);
                mine.items.push_back(q);
                ++st.updates;
                ++st.queued;
              });
              pending.fetch_sub(1, std::memory_order_acq_rel);
              continue;
            }
            if (pending.load(std::memory_order_acquire) == 0) {
              break;
            }
            std::this_thread::yield();
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
          abort.store(true);
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  for (const auto& st : local) {
    stats.processed += st.processed;
    stats.updates += st.updates;
    stats.queued += st.queued;
  }
  return stats;
}

}  // namespace wsiflow
