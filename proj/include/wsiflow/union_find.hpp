#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wsiflow {

/// Disjoint-set forest over element indices. When two trees merge, the root
/// with the smaller index becomes the root of the result, so every root is
/// the smallest index in its set and parent[i] <= i always holds.
///
/// `find` and `unite` are safe to call concurrently: roots are relinked with
/// compare-and-swap and path halving only ever moves a parent pointer closer
/// to the root. The `_exclusive` variants use plain writes and require that
/// no other thread touches the trees involved.
class UnionFind {
 public:
  using Index = std::uint32_t;

  explicit UnionFind(std::size_t size);

  std::size_t size() const noexcept { return parent_.size(); }

  void make_set(std::size_t i);
  Index find(std::size_t i);
  Index unite(std::size_t a, std::size_t b);

  Index find_exclusive(std::size_t i);
  Index unite_exclusive(std::size_t a, std::size_t b);

  // Points every element directly at its root.
  void flatten();
  Index parent(std::size_t i) const;

 private:
  void check(std::size_t i) const;

  std::vector<Index> parent_;
};

}  // namespace wsiflow
