#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "wsiflow/task_graph.hpp"

namespace wsiflow {

inline constexpr std::string_view kCpuCore = "cpu-core";

struct DeviceClass {
  std::string name;
  int count = 0;

  bool is_cpu() const noexcept { return name == kCpuCore; }
};

/// Tile read latency under contention:
///   base_read_ms * (1 + alpha * (concurrent_readers - 1)).
struct IoModel {
  double base_read_ms = 0.0;
  double alpha = 0.0;

  double read_latency(int concurrent_readers) const;
  void validate() const;
};

/// Devices of one node, per-operation reference cost on one cpu-core, and the
/// estimated speedup of every operation on every device class (cpu-core = 1).
struct DeviceProfile {
  std::vector<DeviceClass> classes;
  std::array<double, kOpKindCount> base_cost_ms{};
  // speedup[class index][op]
  std::vector<std::array<double, kOpKindCount>> speedup;
  IoModel io;

  int device_count() const noexcept;
  // Class index of each local device, in device-id order.
  std::vector<std::size_t> device_classes() const;
  double duration_ms(OpKind op, std::size_t cls) const;
  // Best speedup over the non-cpu classes; 1 when the node has none.
  double accelerator_speedup(OpKind op) const;
  bool heterogeneous() const;

  // Throws InvalidArgument describing the first violation.
  void validate() const;
};

DeviceProfile parse_profile(const std::string& json_text, const std::string& origin = "<profile>");
DeviceProfile load_profile(const std::filesystem::path& path);
std::string profile_to_json(const DeviceProfile& profile);

// Built-in profiles:
//   "homogeneous"  16 cpu-cores only
//   "bimodal"      1 accelerator + 4 cpu-cores; rgb_to_gray at 5.0x, morph_open at 1.2x, equal costs
//   "fig3-like"    1 accelerator + 15 cpu-cores; regular ops ~1.9x a 16-core host, irregular ~2x,
//                  atomic-heavy ops faster on cpu-cores
DeviceProfile preset_profile(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace wsiflow
