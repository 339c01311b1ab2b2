#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "wsiflow/image.hpp"

namespace wsiflow {

struct BoundingBox {
  int min_y = 0;
  int min_x = 0;
  int max_y = 0;  // inclusive
  int max_x = 0;  // inclusive

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ObjectRecord {
  LabelMap::Label label = 0;
  BoundingBox bbox;
  std::uint64_t area = 0;

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

// Population variance; median of an even-sized set is the lower median.
struct Statistics {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;

  friend bool operator==(const Statistics&, const Statistics&) = default;
};

Statistics summarize(std::vector<double> values);

struct EdgeStatistics {
  Statistics response;  // magnitude where it exceeds the threshold, 0 elsewhere
  double edge_fraction = 0.0;

  friend bool operator==(const EdgeStatistics&, const EdgeStatistics&) = default;
};

struct FeatureVector {
  ObjectRecord object;
  Statistics intensity;
  Statistics gradient;
  EdgeStatistics edge;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// One record per nonzero label, ordered by label, with minimal bounding boxes.
std::vector<ObjectRecord> extract_objects(const LabelMap& labels);

// Each op computes one object per work item. Throws IntegrityError when an
// object has no pixel carrying its label inside its bounding box.
std::vector<Statistics> pixel_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                    const LabelMap& labels, int workers = 1);
std::vector<Statistics> gradient_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                       const LabelMap& labels, int workers = 1);
std::vector<EdgeStatistics> sobel_edge_stats(const ImageTile& gray, const std::vector<ObjectRecord>& objects,
                                             const LabelMap& labels, double edge_threshold = 50.0,
                                             int workers = 1);

std::vector<FeatureVector> assemble_features(const std::vector<ObjectRecord>& objects,
                                             const std::vector<Statistics>& intensity,
                                             const std::vector<Statistics>& gradient,
                                             const std::vector<EdgeStatistics>& edge);

// Column order:
//   label,area,min_y,min_x,max_y,max_x,
//   intensity_{mean,median,min,max,std}, gradient_{...}, edge_{...}, edge_fraction
// Floating-point columns are printed with 17 significant digits.
void write_features_csv(std::ostream& out, const std::vector<FeatureVector>& features);

}  // namespace wsiflow
