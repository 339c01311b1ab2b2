#include "wsiflow/device_profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wsiflow/error.hpp"

namespace wsiflow {

using nlohmann::json;

double IoModel::read_latency(int concurrent_readers) const {
  const int readers = std::max(concurrent_readers, 1);
  return base_read_ms * (1.0 + alpha * static_cast<double>(readers - 1));
}

void IoModel::validate() const {
  if (!std::isfinite(base_read_ms) || base_read_ms < 0.0) {
    throw InvalidArgument("io model: base_read_ms must be finite and >= 0");
  }
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw InvalidArgument("io model: alpha must be finite and >= 0");
  }
}

int DeviceProfile::device_count() const noexcept {
  int n = 0;
  for (const auto& c : classes) {
    n += c.count;
  }
  return n;
}

std::vector<std::size_t> DeviceProfile::device_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    out.insert(out.end(), static_cast<std::size_t>(classes[c].count), c);
  }
  return out;
}

double DeviceProfile::duration_ms(OpKind op, std::size_t cls) const {
  return base_cost_ms[static_cast<std::size_t>(op)] / speedup.at(cls)[static_cast<std::size_t>(op)];
}

double DeviceProfile::accelerator_speedup(OpKind op) const {
  double best = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].is_cpu() && classes[c].count > 0) {
      best = std::max(best, speedup[c][static_cast<std::size_t>(op)]);
      any = true;
    }
  }
  return any ? best : 1.0;
}

bool DeviceProfile::heterogeneous() const {
  return std::any_of(classes.begin(), classes.end(), [](const DeviceClass& c) { return !c.is_cpu() && c.count > 0; });
}

void DeviceProfile::validate() const {
  if (classes.empty() || device_count() < 1) {
    throw InvalidArgument("profile: needs at least one device");
  }
  if (speedup.size() != classes.size()) {
    throw InvalidArgument("profile: speedup table does not cover every device class");
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].name.empty() || classes[c].count < 0) {
      throw InvalidArgument("profile: device class " + std::to_string(c) + " has no name or a negative count");
    }
    for (std::size_t other = 0; other < c; ++other) {
      if (classes[other].name == classes[c].name) {
        throw InvalidArgument("profile: device class '" + classes[c].name + "' listed twice");
      }
    }
    for (OpKind op : kAllOps) {
      const double s = speedup[c][static_cast<std::size_t>(op)];
      if (!std::isfinite(s) || s <= 0.0) {
        throw InvalidArgument("profile: speedup of " + std::string(op_name(op)) + " on '" + classes[c].name +
                              "' must be > 0");
      }
      if (classes[c].is_cpu() && s != 1.0) {
        throw InvalidArgument("profile: cpu-core speedups are 1 by definition");
      }
    }
  }
  for (OpKind op : kAllOps) {
    const double cost = base_cost_ms[static_cast<std::size_t>(op)];
    if (!std::isfinite(cost) || cost < 0.0) {
      throw InvalidArgument("profile: base cost of " + std::string(op_name(op)) + " must be finite and >= 0");
    }
  }
  io.validate();
}

DeviceProfile parse_profile(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
  DeviceProfile p;
  try {
    for (const auto& d : doc.at("devices")) {
      p.classes.push_back({d.at("class").get<std::string>(), d.at("count").get<int>()});
    }
    const auto& costs = doc.at("base_cost_ms");
    for (OpKind op : kAllOps) {
      const std::string name(op_name(op));
      if (!costs.contains(name)) {
        throw InvalidArgument(origin + ": base_cost_ms is missing '" + name + "'");
      }
      p.base_cost_ms[static_cast<std::size_t>(op)] = costs.at(name).get<double>();
    }
    for (const auto& [key, _] : costs.items()) {
      if (!op_from_name(key)) {
        throw InvalidArgument(origin + ": unknown operation '" + key + "' in base_cost_ms");
      }
    }
    const json no_speedups = json::object();
    const json& table = doc.contains("speedup") ? doc.at("speedup") : no_speedups;
    for (const auto& cls : p.classes) {
      std::array<double, kOpKindCount> row{};
      row.fill(1.0);
      if (table.contains(cls.name)) {
        const auto& entries = table.at(cls.name);
        for (const auto& [key, value] : entries.items()) {
          const auto op = op_from_name(key);
          if (!op) {
            throw InvalidArgument(origin + ": unknown operation '" + key + "' in speedup table");
          }
          row[static_cast<std::size_t>(*op)] = value.get<double>();
        }
        if (!cls.is_cpu() && entries.size() != kOpKindCount) {
          throw InvalidArgument(origin + ": speedup table for '" + cls.name + "' must list all 11 operations");
        }
      } else if (!cls.is_cpu()) {
        throw InvalidArgument(origin + ": no speedup table for device class '" + cls.name + "'");
      }
      p.speedup.push_back(row);
    }
    if (doc.contains("io")) {
      const auto& io = doc.at("io");
      p.io.base_read_ms = io.value("base_read_ms", 0.0);
      p.io.alpha = io.value("alpha", 0.0);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
  return p;
}

DeviceProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidArgument("cannot open profile " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_profile(buf.str(), path.string());
}

std::string profile_to_json(const DeviceProfile& profile) {
  json doc;
  doc["devices"] = json::array();
  for (const auto& c : profile.classes) {
    doc["devices"].push_back({{"class", c.name}, {"count", c.count}});
  }
  for (OpKind op : kAllOps) {
    doc["base_cost_ms"][std::string(op_name(op))] = profile.base_cost_ms[static_cast<std::size_t>(op)];
  }
  doc["speedup"] = json::object();
  for (std::size_t c = 0; c < profile.classes.size(); ++c) {
    if (profile.classes[c].is_cpu()) {
      continue;
    }
    for (OpKind op : kAllOps) {
      doc["speedup"][profile.classes[c].name][std::string(op_name(op))] =
          profile.speedup[c][static_cast<std::size_t>(op)];
    }
  }
  doc["io"] = {{"base_read_ms", profile.io.base_read_ms}, {"alpha", profile.io.alpha}};
  return doc.dump(2) + "\n";
}

namespace {

std::array<double, kOpKindCount> uniform(double v) {
  std::array<double, kOpKindCount> a{};
  a.fill(v);
  return a;
}

// Reference single-core costs (ms) of one 4K tile, in op order.
constexpr std::array<double, kOpKindCount> kReferenceCost = {
    60.0,   // rgb_to_gray
    900.0,  // morph_open
    400.0,  // morph_reconstruction
    150.0,  // fill_holes
    120.0,  // area_threshold
    180.0,  // connected_components
    500.0,  // distance_transform
    350.0,  // color_deconvolution
    300.0,  // pixel_stats
    450.0,  // gradient_stats
    450.0,  // sobel_edge_stats
};

}  // namespace

DeviceProfile preset_profile(const std::string& name) {
  DeviceProfile p;
  if (name == "homogeneous") {
    p.classes = {{"cpu-core", 16}};
    p.base_cost_ms = kReferenceCost;
    p.speedup = {uniform(1.0)};
  } else if (name == "bimodal") {
    p.classes = {{"accelerator", 1}, {"cpu-core", 4}};
    p.base_cost_ms = uniform(1.0);
    auto acc = uniform(1.2);
    acc[static_cast<std::size_t>(OpKind::RgbToGray)] = 5.0;
    p.speedup = {acc, uniform(1.0)};
  } else if (name == "fig3-like") {
    // Accelerator speedup over one core = (accelerator / 16-core host) x (16-core host / one core).
    constexpr double kMemoryBoundHost = 8.0;
    constexpr double kComputeBoundHost = 14.0;
    constexpr double kIrregularHost = 6.0;
    constexpr double kAtomicHost = 5.0;
    std::array<double, kOpKindCount> acc{};
    const auto set = [&](OpKind op, double v) { acc[static_cast<std::size_t>(op)] = v; };
    set(OpKind::RgbToGray, 1.9 * kMemoryBoundHost);
    set(OpKind::MorphOpen, 1.9 * kMemoryBoundHost);
    set(OpKind::ColorDeconvolution, 1.9 * kMemoryBoundHost);
    set(OpKind::PixelStats, 1.9 * kComputeBoundHost);
    set(OpKind::GradientStats, 1.9 * kComputeBoundHost);
    set(OpKind::SobelEdgeStats, 1.9 * kComputeBoundHost);
    set(OpKind::MorphReconstruction, 2.0 * kIrregularHost);
    set(OpKind::FillHoles, 2.0 * kIrregularHost);
    set(OpKind::DistanceTransform, 2.0 * kIrregularHost);
    set(OpKind::AreaThreshold, 0.5 * kAtomicHost);
    set(OpKind::ConnectedComponents, 0.5 * kAtomicHost);
    p.classes = {{"accelerator", 1}, {"cpu-core", 15}};
    p.base_cost_ms = kReferenceCost;
    p.speedup = {acc, uniform(1.0)};
  } else {
    throw InvalidArgument("unknown profile preset '" + name + "'");
  }
  p.validate();
  return p;
}

std::vector<std::string> preset_names() {
  return {"homogeneous", "bimodal", "fig3-like"};
}

}  // namespace wsiflow
