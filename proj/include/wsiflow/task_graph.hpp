#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace wsiflow {

enum class OpKind : std::uint8_t {
  RgbToGray,
  MorphOpen,
  MorphReconstruction,
  FillHoles,
  AreaThreshold,
  ConnectedComponents,
  DistanceTransform,
  ColorDeconvolution,
  PixelStats,
  GradientStats,
  SobelEdgeStats,
};

inline constexpr std::size_t kOpKindCount = 11;

inline constexpr std::array<OpKind, kOpKindCount> kAllOps = {
    OpKind::RgbToGray,          OpKind::MorphOpen,         OpKind::MorphReconstruction, OpKind::FillHoles,
    OpKind::AreaThreshold,      OpKind::ConnectedComponents, OpKind::DistanceTransform, OpKind::ColorDeconvolution,
    OpKind::PixelStats,         OpKind::GradientStats,     OpKind::SobelEdgeStats,
};

std::string_view op_name(OpKind op) noexcept;
std::optional<OpKind> op_from_name(std::string_view name) noexcept;

enum class Stage : std::uint8_t { Segmentation, FeatureComputation };

Stage stage_of(OpKind op) noexcept;
std::string_view stage_name(Stage stage) noexcept;

struct OperationTask {
  std::size_t id = 0;
  std::size_t tile = 0;
  OpKind op = OpKind::RgbToGray;
};

// (tile, stage) unit handed to a worker; feature computation of a tile
// depends on its segmentation.
struct StageTask {
  std::size_t tile = 0;
  Stage stage = Stage::Segmentation;
};

/// Operation tasks with dependency edges. Edges may cross tiles only from a
/// lower tile id to a higher one, matching the order in which tiles are handed out.
class TaskGraph {
 public:
  std::size_t add_task(std::size_t tile, OpKind op);
  void add_edge(std::size_t from, std::size_t to);

  const std::vector<OperationTask>& tasks() const noexcept { return tasks_; }
  const OperationTask& task(std::size_t id) const { return tasks_.at(id); }
  const std::vector<std::size_t>& successors(std::size_t id) const { return succ_.at(id); }
  const std::vector<std::size_t>& predecessors(std::size_t id) const { return pred_.at(id); }
  std::size_t size() const noexcept { return tasks_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }
  std::size_t tile_count() const noexcept;

  std::vector<StageTask> stage_tasks() const;

  // Throws InvalidArgument on a cycle or an edge against tile order.
  void validate() const;
  // Kahn order, ties by task id. Throws on a cycle.
  std::vector<std::size_t> topological_order() const;

 private:
  std::vector<OperationTask> tasks_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
  std::size_t edges_ = 0;
};

/// Per tile: the segmentation chain
///   rgb_to_gray -> morph_open -> morph_reconstruction -> fill_holes
///   -> area_threshold -> connected_components -> distance_transform
/// followed by color_deconvolution, which fans out to pixel_stats,
/// gradient_stats and sobel_edge_stats (11 tasks, 10 edges, no cross-tile edges).
TaskGraph build_task_graph(std::size_t tiles);

}  // namespace wsiflow
