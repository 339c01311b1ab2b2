#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wsiflow/device_profile.hpp"
#include "wsiflow/error.hpp"
#include "wsiflow/features.hpp"
#include "wsiflow/image.hpp"
#include "wsiflow/iwpp.hpp"
#include "wsiflow/regular_ops.hpp"
#include "wsiflow/task_graph.hpp"

namespace wsiflow {

struct PipelineConfig {
  int open_radius = 6;
  // Reconstructed inverted-gray level at or above which a pixel is a nucleus candidate.
  std::uint8_t foreground_threshold = 97;
  std::uint64_t min_area = 30;
  std::uint64_t max_area = 100000;
  double edge_threshold = 50.0;
  Connectivity connectivity = Connectivity::Eight;
  StainMatrix stains = StainMatrix::hematoxylin_eosin();
  // Threads used inside each kernel.
  int kernel_workers = 1;
};

/// Intermediate results of one tile, filled in as its operations run.
struct TileContext {
  ImageTile rgb;
  std::optional<ImageTile> gray;
  std::optional<ImageTile> opened;  // opening of the inverted gray tile
  std::optional<BinaryMask> foreground;
  std::optional<BinaryMask> filled;
  std::optional<BinaryMask> survivors;
  std::optional<LabelMap> labels;
  std::vector<ObjectRecord> objects;
  std::optional<ImageTile> distance;
  std::optional<std::array<ImageTile, 3>> stains;
  std::vector<Statistics> intensity;
  std::vector<Statistics> gradient;
  std::vector<EdgeStatistics> edge;

  explicit TileContext(ImageTile tile) : rgb(std::move(tile)) {}

  std::vector<FeatureVector> features() const;
};

using Kernel = std::function<void(TileContext&, const PipelineConfig&)>;

/// Function variants of each operation, keyed by device class.
class KernelRegistry {
 public:
  void add(OpKind op, std::string device_class, Kernel kernel);
  // Throws InvalidArgument when no variant is registered.
  const Kernel& get(OpKind op, const std::string& device_class = std::string(kCpuCore)) const;
  bool has(OpKind op, const std::string& device_class) const;

 private:
  std::array<std::map<std::string, Kernel>, kOpKindCount> variants_;
};

// cpu-core variants of all eleven operations.
KernelRegistry default_registry();

// All operations of one tile in dependency order on the calling thread.
std::vector<FeatureVector> process_tile(const ImageTile& rgb, const PipelineConfig& config = {});

struct OpTiming {
  OpKind op = OpKind::RgbToGray;
  std::size_t calls = 0;
  double total_ms = 0.0;
};

struct RealRunResult {
  std::vector<std::vector<FeatureVector>> features;  // per tile
  std::array<OpTiming, kOpKindCount> timing{};
  double wall_ms = 0.0;
};

/// A kernel threw while running a task of the graph.
class TaskFailure : public Error {
 public:
  TaskFailure(std::size_t task, std::size_t tile, OpKind op, const std::string& what);

  std::size_t task() const noexcept { return task_; }
  std::size_t tile() const noexcept { return tile_; }
  OpKind op() const noexcept { return op_; }

 private:
  std::size_t task_;
  std::size_t tile_;
  OpKind op_;
};

/// Runs the graph's tasks on `workers` threads. Ready tasks are taken in the
/// order they became ready; finishing a task releases its successors. The
/// graph is validated first, so a cycle is rejected before any kernel runs.
/// `tiles[t]` is the input of tile t.
RealRunResult run_real(const TaskGraph& graph, const std::vector<ImageTile>& tiles, int workers,
                       const PipelineConfig& config = {}, const KernelRegistry& registry = default_registry());

// Columns: op,calls,total_ms,mean_ms; one row per operation.
void write_timing_csv(std::ostream& out, const std::array<OpTiming, kOpKindCount>& timing);

/// Measures every operation on `tile` with one kernel thread and with `workers`
/// kernel threads (median of `repetitions`), and returns a profile whose base
/// costs are the single-thread times and whose "accelerator" class (one
/// device: the thread team) has the measured speedups.
DeviceProfile calibrate_profile(const ImageTile& tile, int workers, int cpu_cores, int repetitions = 3,
                                const PipelineConfig& config = {});

}  // namespace wsiflow
