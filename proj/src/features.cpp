#include "wsiflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <string>

#include "wsiflow/error.hpp"
#include "wsiflow/parallel.hpp"
#include "wsiflow/regular_ops.hpp"

namespace wsiflow {

namespace {

void check_inputs(const ImageTile& gray, const LabelMap& labels) {
  if (gray.channels() != 1) {
    throw InvalidArgument("feature computation expects a single-channel tile");
  }
  if (gray.width() != labels.width() || gray.height() != labels.height()) {
    throw InvalidArgument("feature computation: tile and label map dimensions differ");
  }
}

// Values of `plane` at pixels of `obj`, scanning only its bounding box.
template <class Sample>
std::vector<double> gather(const Sample& plane, const ObjectRecord& obj, const LabelMap& labels) {
  const auto& b = obj.bbox;
  if (b.min_y < 0 || b.min_x < 0 || b.max_y >= labels.height() || b.max_x >= labels.width() || b.min_y > b.max_y ||
      b.min_x > b.max_x) {
    throw IntegrityError("object " + std::to_string(obj.label) + " has a bounding box outside the tile");
  }
  std::vector<double> values;
  values.reserve(obj.area);
  for (int y = b.min_y; y <= b.max_y; ++y) {
    for (int x = b.min_x; x <= b.max_x; ++x) {
      if (labels.at(x, y) == obj.label) {
        values.push_back(plane(x, y));
      }
    }
  }
  if (values.empty()) {
    throw IntegrityError("object " + std::to_string(obj.label) + " has no pixels inside its bounding box");
  }
  return values;
}

// Magnitude in double precision from the stored derivatives, which are exact
// for 8-bit input; the f32 magnitude plane would round it.
double magnitude_at(const SobelResult& g, int x, int y) {
  const double gx = g.gx.f32_at(x, y);
  const double gy = g.gy.f32_at(x, y);
  return std::sqrt(gx * gx + gy * gy);
}

template <class Result, class Fn>
std::vector<Result> per_object(const std::vector<ObjectRecord>& objects, int workers, Fn&& fn) {
  std::vector<Result> out(objects.size());
  parallel_items(objects.size(), workers, [&](std::size_t i) { out[i] = fn(objects[i]); });
  return out;
}

}  // namespace

Statistics summarize(std::vector<double> values) {
  if (values.empty()) {
    throw InvalidArgument("summarize: empty sample");
  }
  Statistics s;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : values) {
    ss += (v - s.mean) * (v - s.mean);
  }
  s.stddev = std::sqrt(ss / n);
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  s.median = *mid;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<ObjectRecord> extract_objects(const LabelMap& labels) {
  std::map<LabelMap::Label, ObjectRecord> found;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const auto l = labels.at(x, y);
      if (l == 0) {
        continue;
      }
      auto [it, fresh] = found.try_emplace(l);
      auto& rec = it->second;
      if (fresh) {
        rec.label = l;
        rec.bbox = {y, x, y, x};
      } else {
        rec.bbox.min_y = std::min(rec.bbox.min_y, y);
        rec.bbox.min_x = std::min(rec.bbox.min_x, x);
        rec.bbox.max_y = std::max(rec.bbox.max_y, y);
        rec.bbox.max_x = std::max(rec.bbox.max_x, x);
      }
      ++rec.area;
    }
  }
  std::vector<ObjectRecord> out;
  out.reserve(found.size());
  for (auto& [_, rec] : found) {
    out.push_back(rec);
  }
  return out;
}

std::vector<Statistics> pixel_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                    const LabelMap& labels, int workers) {
  check_inputs(gray, labels);
  return per_object<Statistics>(objects, workers, [&](const ObjectRecord& obj) {
    return summarize(gather([&](int x, int y) { return gray.value(x, y); }, obj, labels));
  });
}

std::vector<Statistics> gradient_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                       const LabelMap& labels, int workers) {
  check_inputs(gray, labels);
  // The whole-tile gradient, so pixels outside an object still feed its border.
  const SobelResult g = sobel_gradient(gray, workers);
  return per_object<Statistics>(objects, workers, [&](const ObjectRecord& obj) {
    return summarize(gather([&](int x, int y) { return magnitude_at(g, x, y); }, obj, labels));
  });
}

std::vector<EdgeStatistics> sobel_edge_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                             const LabelMap& labels, double edge_threshold, int workers) {
  check_inputs(gray, labels);
  if (!(edge_threshold >= 0.0)) {
    throw InvalidArgument("sobel_edge_stats: threshold must be >= 0");
  }
  const SobelResult g = sobel_gradient(gray, workers);
  return per_object<EdgeStatistics>(objects, workers, [&](const ObjectRecord& obj) {
    auto values = gather([&](int x, int y) { return magnitude_at(g, x, y); }, obj, labels);
    std::size_t edges = 0;
    for (double& v : values) {
      if (v > edge_threshold) {
        ++edges;
      } else {
        v = 0.0;
      }
    }
    EdgeStatistics es;
    es.edge_fraction = static_cast<double>(edges) / static_cast<double>(values.size());
    es.response = summarize(std::move(values));
    return es;
  });
}

std::vector<FeatureVector> assemble_features(const std::vector<ObjectRecord>& objects,
                                             const std::vector<Statistics>& intensity,
                                             const std::vector<Statistics>& gradient,
                                             const std::vector<EdgeStatistics>& edge) {
  if (intensity.size() != objects.size() || gradient.size() != objects.size() || edge.size() != objects.size()) {
    throw IntegrityError("feature columns do not cover the same objects");
  }
  std::vector<FeatureVector> out(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    out[i] = {objects[i], intensity[i], gradient[i], edge[i]};
  }
  return out;
}

void write_features_csv(std::ostream& out, const std::vector<FeatureVector>& features) {
  static constexpr const char* kStats[] = {"mean", "median", "min", "max", "std"};
  out << "label,area,min_y,min_x,max_y,max_x";
  for (const char* group : {"intensity", "gradient", "edge"}) {
    for (const char* s : kStats) {
      out << ',' << group << '_' << s;
    }
  }
  out << ",edge_fraction\n";

  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  const auto put = [&](const Statistics& s) {
    out << ',' << s.mean << ',' << s.median << ',' << s.min << ',' << s.max << ',' << s.stddev;
  };
  for (const auto& f : features) {
    const auto& o = f.object;
    out << o.label << ',' << o.area << ',' << o.bbox.min_y << ',' << o.bbox.min_x << ',' << o.bbox.max_y << ','
        << o.bbox.max_x;
    put(f.intensity);
    put(f.gradient);
    put(f.edge.response);
    out << ',' << f.edge.edge_fraction << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace wsiflow
