#include "wsiflow/task_graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

#include "wsiflow/error.hpp"

namespace wsiflow {

namespace {

constexpr std::array<std::string_view, kOpKindCount> kNames = {
    "rgb_to_gray",          "morph_open",         "morph_reconstruction", "fill_holes",
    "area_threshold",       "connected_components", "distance_transform", "color_deconvolution",
    "pixel_stats",          "gradient_stats",     "sobel_edge_stats",
};

}  // namespace

std::string_view op_name(OpKind op) noexcept {
  return kNames[static_cast<std::size_t>(op)];
}

std::optional<OpKind> op_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) {
      return static_cast<OpKind>(i);
    }
  }
  return std::nullopt;
}

Stage stage_of(OpKind op) noexcept {
  return static_cast<std::size_t>(op) <= static_cast<std::size_t>(OpKind::DistanceTransform)
             ? Stage::Segmentation
             : Stage::FeatureComputation;
}

std::string_view stage_name(Stage stage) noexcept {
  return stage == Stage::Segmentation ? "segmentation" : "feature_computation";
}

std::size_t TaskGraph::add_task(std::size_t tile, OpKind op) {
  const std::size_t id = tasks_.size();
  tasks_.push_back({id, tile, op});
  succ_.emplace_back();
  pred_.emplace_back();
  return id;
}

void TaskGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= tasks_.size() || to >= tasks_.size()) {
    throw InvalidArgument("edge " + std::to_string(from) + " -> " + std::to_string(to) + " references a missing task");
  }
  if (from == to) {
    throw InvalidArgument("self edge on task " + std::to_string(from));
  }
  succ_[from].push_back(to);
  pred_[to].push_back(from);
  ++edges_;
}

std::size_t TaskGraph::tile_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tasks_) {
    n = std::max(n, t.tile + 1);
  }
  return n;
}

std::vector<StageTask> TaskGraph::stage_tasks() const {
  std::set<std::pair<std::size_t, Stage>> seen;
  for (const auto& t : tasks_) {
    seen.emplace(t.tile, stage_of(t.op));
  }
  std::vector<StageTask> out;
  out.reserve(seen.size());
  for (const auto& [tile, stage] : seen) {
    out.push_back({tile, stage});
  }
  return out;
}

std::vector<std::size_t> TaskGraph::topological_order() const {
  std::vector<std::size_t> indegree(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    indegree[i] = pred_[i].size();
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (indegree[i] == 0) {
      ready.push(i);
    }
  }
  std::vector<std::size_t> order;
  order.reserve(tasks_.size());
  while (!ready.empty()) {
    const std::size_t t = ready.top();
    ready.pop();
    order.push_back(t);
    for (std::size_t s : succ_[t]) {
      if (--indegree[s] == 0) {
        ready.push(s);
      }
    }
  }
  if (order.size() != tasks_.size()) {
    throw InvalidArgument("task graph contains a cycle (" + std::to_string(tasks_.size() - order.size()) +
                          " tasks unreachable)");
  }
  return order;
}

void TaskGraph::validate() const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    for (std::size_t s : succ_[i]) {
      if (tasks_[s].tile < tasks_[i].tile) {
        throw InvalidArgument("edge " + std::to_string(i) + " -> " + std::to_string(s) +
                              " runs from a later tile to an earlier one");
      }
    }
  }
  (void)topological_order();
}

TaskGraph build_task_graph(std::size_t tiles) {
  if (tiles == 0) {
    throw InvalidArgument("build_task_graph: need at least one tile");
  }
  TaskGraph g;
  for (std::size_t tile = 0; tile < tiles; ++tile) {
    std::array<std::size_t, kOpKindCount> id{};
    for (OpKind op : kAllOps) {
      id[static_cast<std::size_t>(op)] = g.add_task(tile, op);
    }
    const auto at = [&](OpKind op) { return id[static_cast<std::size_t>(op)]; };
    g.add_edge(at(OpKind::RgbToGray), at(OpKind::MorphOpen));
    g.add_edge(at(OpKind::MorphOpen), at(OpKind::MorphReconstruction));
    g.add_edge(at(OpKind::MorphReconstruction), at(OpKind::FillHoles));
    g.add_edge(at(OpKind::FillHoles), at(OpKind::AreaThreshold));
    g.add_edge(at(OpKind::AreaThreshold), at(OpKind::ConnectedComponents));
    g.add_edge(at(OpKind::ConnectedComponents), at(OpKind::DistanceTransform));
    g.add_edge(at(OpKind::DistanceTransform), at(OpKind::ColorDeconvolution));
    g.add_edge(at(OpKind::ColorDeconvolution), at(OpKind::PixelStats));
    g.add_edge(at(OpKind::ColorDeconvolution), at(OpKind::GradientStats));
    g.add_edge(at(OpKind::ColorDeconvolution), at(OpKind::SobelEdgeStats));
  }
  return g;
}

}  // namespace wsiflow
