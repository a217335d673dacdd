#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/scorer.hpp"

namespace lidas {

/// Predictions and ground truth of one image.
struct ImageDetections {
  std::vector<Detection> preds;
  std::vector<Annotation> gts;
};

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct ClassAP {
  int cls = 0;
  long n_gt = 0;
  long n_pred = 0;
  double ap50 = 0.0;
  /// Mean over the configured thresholds.
  double ap_range = 0.0;
};

struct DetectionMetrics {
  double precision = 0.0;  // micro-averaged at IoU 0.5
  double recall = 0.0;
  double map50 = 0.0;
  double map50_90 = 0.0;
  MatchCounts counts;  // at IoU 0.5
  /// Classes with at least one ground truth or prediction.
  std::vector<ClassAP> per_class;
};

/// 0.50, 0.55, ..., 0.90.
std::vector<double> default_iou_thresholds();

/// Per image and class, predictions are taken in descending confidence and
/// matched to the unmatched ground truth of highest IoU (>= threshold); later
/// duplicates are false positives. Returns one flag per prediction, in input order.
std::vector<bool> match_predictions(std::span<const Detection> preds, std::span<const Annotation> gts,
                                    double iou_threshold, std::vector<int>* matched_gt = nullptr);

/// 101-point interpolated AP from a ranked list of TP flags.
double average_precision(const std::vector<bool>& ranked_tp, long n_gt);

DetectionMetrics detection_metrics(std::span<const ImageDetections> images,
                                   std::span<const double> iou_thresholds);
inline DetectionMetrics detection_metrics(std::span<const ImageDetections> images) {
  const auto t = default_iou_thresholds();
  return detection_metrics(images, t);
}

struct BandMetrics {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  /// Absent when the band holds neither ground truth nor predictions.
  std::optional<double> map50;
  MatchCounts counts;
};

inline constexpr const char* kBandFpRule =
    "unmatched predictions count as FP in the band of the highest-IoU ground truth in the same "
    "image, or in the last band when they overlap none";

/// Default distance edges 0, 20, 60, 70, inf (meters).
std::vector<double> default_band_edges();
std::vector<double> parse_band_edges(const std::string& text);

/// mAP50 per distance band. Matching happens once on the whole set at IoU 0.5;
/// every ground truth must carry a distance.
std::vector<BandMetrics> distance_banded(std::span<const ImageDetections> images, std::span<const double> edges);

/// Pixel labels of one image; 0 marks void and is ignored in the ground truth.
struct LabelPair {
  const LabelMap* predicted;
  const LabelMap* truth;
};

struct SegmentationMetrics {
  double miou = 0.0;
  double macc = 0.0;
  /// Per class 1..num_classes-1, absent when the class appears in neither map.
  std::vector<std::optional<double>> iou;
};

SegmentationMetrics segmentation_metrics(std::span<const LabelPair> pairs, int num_classes);

/// mean(m) / mean(m_lb).
double power_of(const LightField& m, const LightField& m_lb);

}  // namespace lidas
