#include "wsiflow/union_find.hpp"

#include <atomic>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "wsiflow/error.hpp"

namespace wsiflow {

UnionFind::UnionFind(std::size_t size) : parent_(size) {
  if (size > std::numeric_limits<Index>::max()) {
    throw InvalidArgument("union-find forest too large");
  }
  std::iota(parent_.begin(), parent_.end(), Index{0});
}

void UnionFind::check(std::size_t i) const {
  if (i >= parent_.size()) {
    throw InvalidArgument("union-find index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(parent_.size()) + ")");
  }
}

void UnionFind::make_set(std::size_t i) {
  check(i);
  parent_[i] = static_cast<Index>(i);
}

UnionFind::Index UnionFind::find(std::size_t i) {
  check(i);
  auto x = static_cast<Index>(i);
  while (true) {
    std::atomic_ref<Index> slot(parent_[x]);
    Index p = slot.load(std::memory_order_acquire);
    if (p == x) {
      return x;
    }
    const Index gp = std::atomic_ref<Index>(parent_[p]).load(std::memory_order_acquire);
    if (gp != p) {
      // Path halving; losing this race is harmless.
      slot.compare_exchange_weak(p, gp, std::memory_order_acq_rel, std::memory_order_relaxed);
    }
    x = gp;
  }
}

UnionFind::Index UnionFind::unite(std::size_t a, std::size_t b) {
  check(a);
  check(b);
  while (true) {
    Index ra = find(a);
    Index rb = find(b);
    if (ra == rb) {
      return ra;
    }
    if (rb < ra) {
      std::swap(ra, rb);
    }
    Index expected = rb;
    if (std::atomic_ref<Index>(parent_[rb]).compare_exchange_strong(expected, ra, std::memory_order_acq_rel)) {
      return ra;
    }
  }
}

UnionFind::Index UnionFind::find_exclusive(std::size_t i) {
  check(i);
  auto x = static_cast<Index>(i);
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

UnionFind::Index UnionFind::unite_exclusive(std::size_t a, std::size_t b) {
  Index ra = find_exclusive(a);
  Index rb = find_exclusive(b);
  if (ra == rb) {
    return ra;
  }
  if (rb < ra) {
    std::swap(ra, rb);
  }
  parent_[rb] = ra;
  return ra;
}

void UnionFind::flatten() {
  // parent[i] <= i, so one ascending pass sees every parent already flattened.
  for (std::size_t i = 0; i < parent_.size(); ++i) {
    parent_[i] = parent_[parent_[i]];
  }
}

UnionFind::Index UnionFind::parent(std::size_t i) const {
  check(i);
  return parent_[i];
}

}  // namespace wsiflow
