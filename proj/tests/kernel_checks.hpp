#pragma once

// One randomized kernel-vs-oracle comparison per operation. Each call draws
// a fresh input of 32x32 to 64x64 pixels and random kernel options.

#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "inputs.hpp"
#include "oracles.hpp"
#include "wsiflow/features.hpp"
#include "wsiflow/iwpp_ops.hpp"
#include "wsiflow/labeling.hpp"
#include "wsiflow/regular_ops.hpp"
#include "wsiflow/task_graph.hpp"

namespace kernel_checks {

using namespace wsiflow;
using namespace testing_inputs;

// Empty on success, otherwise a description of the first mismatch.
using Outcome = std::optional<std::string>;

template <class... Parts>
std::string describe(const Parts&... parts) {
  std::ostringstream s;
  (s << ... << parts);
  return s.str();
}

inline WavefrontOptions random_wavefront(std::mt19937_64& rng) {
  WavefrontOptions o;
  o.workers = pick(rng, 0, 1) == 0 ? 1 : pick(rng, 2, 4);
  o.scan_sweeps = pick(rng, 0, 2);
  o.order = pick(rng, 0, 1) == 0 ? QueueOrder::Fifo : QueueOrder::Lifo;
  return o;
}

inline int random_workers(std::mt19937_64& rng) {
  return pick(rng, 0, 1) == 0 ? 1 : pick(rng, 2, 4);
}

inline LabelMap labels_from(const oracle::Labels& l) {
  return LabelMap(l.w, l.h, l.v);
}

inline Outcome check_gray(std::mt19937_64& rng, int w, int h) {
  const ImageTile rgb = random_rgb(rng, w, h);
  const ImageTile gray = rgb_to_gray(rgb, random_workers(rng));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int want = oracle::luma(rgb.u8_at(x, y, 0), rgb.u8_at(x, y, 1), rgb.u8_at(x, y, 2));
      if (gray.u8_at(x, y) != want) {
        return describe("gray (", x, ",", y, ") = ", int(gray.u8_at(x, y)), ", expected ", want);
      }
    }
  }
  return std::nullopt;
}

inline Outcome check_open(std::mt19937_64& rng, int w, int h) {
  const ImageTile gray = random_gray(rng, w, h);
  const int radius = pick(rng, 0, 6);
  const ImageTile got = morph_open(gray, StructuringElement::disk(radius), random_workers(rng));
  const oracle::Gray want = oracle::open(to_oracle(gray), radius);
  if (to_oracle(got).v != want.v) {
    return describe("morph_open radius ", radius, " differs from brute-force opening");
  }
  return std::nullopt;
}

inline Outcome check_reconstruction(std::mt19937_64& rng, int w, int h) {
  const ImageTile mask = random_gray(rng, w, h);
  std::vector<std::uint8_t> marker(mask.pixel_count());
  const int style = pick(rng, 0, 2);
  for (std::size_t i = 0; i < marker.size(); ++i) {
    const int m = mask.u8()[i];
    if (style == 0) {
      marker[i] = static_cast<std::uint8_t>(pick(rng, 0, m));
    } else if (style == 1) {
      marker[i] = static_cast<std::uint8_t>(std::max(0, m - 30));
    } else {
      marker[i] = static_cast<std::uint8_t>(pick(rng, 0, 99) < 2 ? m : 0);
    }
  }
  const ImageTile mk = ImageTile::from_u8(w, h, 1, marker);
  const auto opts = random_wavefront(rng);
  const ImageTile got = morph_reconstruction(mk, mask, opts);
  const oracle::Gray want = oracle::reconstruct(to_oracle(mk), to_oracle(mask));
  if (to_oracle(got).v != want.v) {
    return describe("morph_reconstruction (workers ", opts.workers, ", sweeps ", opts.scan_sweeps,
                    ") differs from fixpoint iteration");
  }
  return std::nullopt;
}

inline Outcome check_fill(std::mt19937_64& rng, int w, int h) {
  const BinaryMask mask = random_mask(rng, w, h);
  const int conn = pick(rng, 0, 1) == 0 ? 4 : 8;
  const auto opts = random_wavefront(rng);
  const BinaryMask got = fill_holes(mask, static_cast<Connectivity>(conn), opts);
  const oracle::Mask want = oracle::fill_holes(to_oracle(mask), conn);
  if (to_oracle(got).v != want.v) {
    return describe("fill_holes (", conn, "-connected) differs from border flood");
  }
  return std::nullopt;
}

inline Outcome check_area_threshold(std::mt19937_64& rng, int w, int h) {
  const oracle::Labels labels = oracle::label(to_oracle(random_mask(rng, w, h)), 8);
  const std::uint64_t lo = static_cast<std::uint64_t>(pick(rng, 0, 40));
  const std::uint64_t hi = lo + static_cast<std::uint64_t>(pick(rng, 0, 400));
  const LabelMap lib_labels = labels_from(labels);
  const int workers = random_workers(rng);
  const LabelMap got = area_threshold(lib_labels, lo, hi, workers);
  const oracle::Labels want = oracle::area_filter(labels, lo, hi);
  if (to_oracle(got).v != want.v) {
    return describe("area_threshold [", lo, ", ", hi, "] differs from per-label counting");
  }
  const AreaHistogram hist = area_histogram(lib_labels, workers);
  for (const auto& [label, count] : oracle::areas(labels)) {
    if (label >= hist.counts.size() || hist.counts[label] != count) {
      return describe("area histogram of label ", label, " differs from counting");
    }
  }
  return std::nullopt;
}

inline Outcome check_components(std::mt19937_64& rng, int w, int h) {
  const BinaryMask mask = random_mask(rng, w, h);
  const int conn = pick(rng, 0, 1) == 0 ? 4 : 8;
  const int strips = pick(rng, 1, 6);
  const int workers = random_workers(rng);
  const LabelMap got = connected_components(mask, static_cast<Connectivity>(conn), strips, workers);
  const oracle::Labels want = oracle::label(to_oracle(mask), conn);
  if (to_oracle(got).v != want.v) {
    return describe("connected_components (", conn, "-connected, ", strips, " strips) differs from BFS labeling");
  }
  return std::nullopt;
}

inline Outcome check_distance(std::mt19937_64& rng, int w, int h) {
  BinaryMask mask = random_mask(rng, w, h);
  mask.set(pick(rng, 0, w - 1), pick(rng, 0, h - 1), false);
  WavefrontOptions opts = random_wavefront(rng);
  const ImageTile got = distance_transform(mask, opts);
  const std::vector<double> want = oracle::distance(to_oracle(mask));
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double g = got.f32()[i];
    if (g != static_cast<float>(want[i])) {
      return describe("distance at pixel ", i, " = ", g, ", exhaustive search gives ", want[i]);
    }
  }
  return std::nullopt;
}

inline Outcome check_deconvolution(std::mt19937_64& rng, int w, int h) {
  const ImageTile rgb = random_rgb(rng, w, h);
  StainMatrix stains = StainMatrix::hematoxylin_eosin();
  if (pick(rng, 0, 1) == 1) {
    StainMatrix::Rows rows{};
    for (;;) {
      for (auto& r : rows) {
        for (auto& c : r) {
          c = 0.05 + 0.95 * wsiflow::draw_unit(rng);
        }
      }
      try {
        stains = StainMatrix::from_unnormalized(rows);
        const auto& s = stains.rows();
        const double det = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                           s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                           s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
        if (std::abs(det) > 0.05) {
          break;
        }
      } catch (const InvalidArgument&) {
      }
    }
  }
  const auto planes = color_deconvolution(rgb, stains, random_workers(rng));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto want = oracle::deconvolve(stains.rows(), rgb.u8_at(x, y, 0), rgb.u8_at(x, y, 1), rgb.u8_at(x, y, 2));
      for (int s = 0; s < 3; ++s) {
        if (!close(planes[static_cast<std::size_t>(s)].f32_at(x, y), want[static_cast<std::size_t>(s)])) {
          return describe("stain ", s, " at (", x, ",", y, ") = ", planes[static_cast<std::size_t>(s)].f32_at(x, y),
                          ", Cramer's rule gives ", want[static_cast<std::size_t>(s)]);
        }
      }
    }
  }
  return std::nullopt;
}

// Objects of the label map must match full-scan boxes and areas.
inline Outcome check_objects(const oracle::Labels& labels, const std::vector<ObjectRecord>& objects) {
  const auto boxes = oracle::boxes(labels);
  const auto areas = oracle::areas(labels);
  if (objects.size() != boxes.size()) {
    return describe("extract_objects found ", objects.size(), " objects, expected ", boxes.size());
  }
  for (const auto& o : objects) {
    const auto it = boxes.find(o.label);
    if (it == boxes.end() || it->second.min_y != o.bbox.min_y || it->second.min_x != o.bbox.min_x ||
        it->second.max_y != o.bbox.max_y || it->second.max_x != o.bbox.max_x || areas.at(o.label) != o.area) {
      return describe("object ", o.label, " has a wrong box or area");
    }
  }
  return std::nullopt;
}

inline Outcome check_pixel_stats(std::mt19937_64& rng, int w, int h) {
  const oracle::Labels labels = oracle::label(to_oracle(random_mask(rng, w, h)), 8);
  const LabelMap lib_labels = labels_from(labels);
  const auto objects = extract_objects(lib_labels);
  if (auto bad = check_objects(labels, objects)) {
    return bad;
  }
  const ImageTile source =
      pick(rng, 0, 1) == 0 ? random_gray(rng, w, h)
                           : color_deconvolution(random_rgb(rng, w, h), StainMatrix::hematoxylin_eosin())[0];
  const auto got = pixel_stats(source, objects, lib_labels, random_workers(rng));
  const auto values = oracle::masked_values(plane(source), labels);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!close(oracle::stats(values.at(objects[i].label)), got[i])) {
      return describe("pixel_stats of object ", objects[i].label, " differ from masked statistics");
    }
  }
  return std::nullopt;
}

inline Outcome check_gradient_stats(std::mt19937_64& rng, int w, int h) {
  const oracle::Labels labels = oracle::label(to_oracle(random_mask(rng, w, h)), 8);
  const LabelMap lib_labels = labels_from(labels);
  const auto objects = extract_objects(lib_labels);
  const ImageTile gray = random_gray(rng, w, h);
  const auto got = gradient_stats(gray, objects, lib_labels, random_workers(rng));
  const auto values = oracle::masked_values(oracle::sobel_magnitude(plane(gray), w, h), labels);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!close(oracle::stats(values.at(objects[i].label)), got[i])) {
      return describe("gradient_stats of object ", objects[i].label, " differ from direct convolution");
    }
  }
  return std::nullopt;
}

inline Outcome check_edge_stats(std::mt19937_64& rng, int w, int h) {
  const oracle::Labels labels = oracle::label(to_oracle(random_mask(rng, w, h)), 8);
  const LabelMap lib_labels = labels_from(labels);
  const auto objects = extract_objects(lib_labels);
  const ImageTile gray = random_gray(rng, w, h);
  const double threshold = std::array{0.0, 50.0, 200.0}[static_cast<std::size_t>(pick(rng, 0, 2))];
  const auto got = sobel_edge_stats(gray, objects, lib_labels, threshold, random_workers(rng));
  auto values = oracle::masked_values(oracle::sobel_magnitude(plane(gray), w, h), labels);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    auto v = values.at(objects[i].label);
    double edges = 0.0;
    for (double& m : v) {
      if (m > threshold) {
        edges += 1.0;
      } else {
        m = 0.0;
      }
    }
    const double fraction = edges / static_cast<double>(v.size());
    if (!close(oracle::stats(v), got[i].response) || !close(got[i].edge_fraction, fraction)) {
      return describe("sobel_edge_stats of object ", objects[i].label, " (threshold ", threshold,
                      ") differ from direct convolution");
    }
  }
  return std::nullopt;
}

// Runs one random case of `op`.
inline Outcome check(OpKind op, std::mt19937_64& rng) {
  const int w = pick(rng, 32, 64);
  const int h = pick(rng, 32, 64);
  switch (op) {
    case OpKind::RgbToGray: return check_gray(rng, w, h);
    case OpKind::MorphOpen: return check_open(rng, w, h);
    case OpKind::MorphReconstruction: return check_reconstruction(rng, w, h);
    case OpKind::FillHoles: return check_fill(rng, w, h);
    case OpKind::AreaThreshold: return check_area_threshold(rng, w, h);
    case OpKind::ConnectedComponents: return check_components(rng, w, h);
    case OpKind::DistanceTransform: return check_distance(rng, w, h);
    case OpKind::ColorDeconvolution: return check_deconvolution(rng, w, h);
    case OpKind::PixelStats: return check_pixel_stats(rng, w, h);
    case OpKind::GradientStats: return check_gradient_stats(rng, w, h);
    case OpKind::SobelEdgeStats: return check_edge_stats(rng, w, h);
  }
  return "unknown operation";
}

}  // namespace kernel_checks
