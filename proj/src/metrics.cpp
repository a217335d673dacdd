#include "lidas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace lidas {

namespace {

struct Ranked {
  double conf;
  std::size_t image;
  std::size_t index;
  bool tp;
};

void sort_ranked(std::vector<Ranked>& r) {
  std::sort(r.begin(), r.end(), [](const Ranked& a, const Ranked& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });
}

double ranked_ap(std::vector<Ranked>& r, long n_gt) {
  sort_ranked(r);
  std::vector<bool> flags(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) flags[i] = r[i].tp;
  return average_precision(flags, n_gt);
}

void check_box(const Box& b, const char* what) {
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) || !std::isfinite(b.y2) ||
      b.x2 < b.x1 || b.y2 < b.y1) {
    throw ValueError(std::string(what) + ": invalid box");
  }
}

void check_images(std::span<const ImageDetections> images) {
  for (const auto& im : images) {
    for (const auto& p : im.preds) check_box(p.box, "prediction");
    for (const auto& g : im.gts) check_box(g.box, "ground truth");
  }
}

std::set<int> classes_of(std::span<const ImageDetections> images) {
  std::set<int> cls;
  for (const auto& im : images) {
    for (const auto& p : im.preds) cls.insert(p.cls);
    for (const auto& g : im.gts) cls.insert(g.class_id);
  }
  return cls;
}

double safe_ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

}  // namespace

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 8; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

std::vector<bool> match_predictions(std::span<const Detection> preds, std::span<const Annotation> gts,
                                    double iou_threshold, std::vector<int>* matched_gt) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].conf > preds[b].conf; });
  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> tp(preds.size(), false);
  if (matched_gt) matched_gt->assign(preds.size(), -1);
  for (std::size_t p : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != preds[p].cls) continue;
      const double v = iou(preds[p].box, gts[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      tp[p] = true;
      if (matched_gt) (*matched_gt)[p] = best;
    }
  }
  return tp;
}

double average_precision(const std::vector<bool>& ranked_tp, long n_gt) {
  if (n_gt <= 0 || ranked_tp.empty()) return 0.0;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  long tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

DetectionMetrics detection_metrics(std::span<const ImageDetections> images,
                                   std::span<const double> iou_thresholds) {
  if (iou_thresholds.empty()) throw ValueError("detection_metrics: no IoU thresholds");
  check_images(images);
  const std::set<int> classes = classes_of(images);

  std::map<int, long> n_gt;
  std::map<int, long> n_pred;
  for (const auto& im : images) {
    for (const auto& g : im.gts) ++n_gt[g.class_id];
    for (const auto& p : im.preds) ++n_pred[p.cls];
  }

  // AP per class at one threshold; also fills the counts at 0.5.
  auto class_aps = [&](double thr, MatchCounts* counts) {
    std::map<int, std::vector<Ranked>> ranked;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto& im = images[i];
      const std::vector<bool> tp = match_predictions(im.preds, im.gts, thr);
      long matched = 0;
      for (std::size_t p = 0; p < im.preds.size(); ++p) {
        ranked[im.preds[p].cls].push_back({im.preds[p].conf, i, p, tp[p]});
        if (tp[p]) ++matched;
      }
      if (counts) {
        counts->tp += matched;
        counts->fp += static_cast<long>(im.preds.size()) - matched;
        counts->fn += static_cast<long>(im.gts.size()) - matched;
      }
    }
    std::map<int, double> ap;
    for (int c : classes) ap[c] = ranked_ap(ranked[c], n_gt[c]);
    return ap;
  };

  DetectionMetrics out;
  const auto ap50 = class_aps(0.5, &out.counts);
  std::map<int, double> range_sum;
  for (double t : iou_thresholds) {
    const auto ap = class_aps(t, nullptr);
    for (const auto& [c, v] : ap) range_sum[c] += v;
  }
  for (int c : classes) {
    out.per_class.push_back({c, n_gt[c], n_pred[c], ap50.at(c), range_sum[c] / iou_thresholds.size()});
  }
  if (!out.per_class.empty()) {
    for (const auto& c : out.per_class) {
      out.map50 += c.ap50;
      out.map50_90 += c.ap_range;
    }
    out.map50 /= static_cast<double>(out.per_class.size());
    out.map50_90 /= static_cast<double>(out.per_class.size());
  }
  out.precision = safe_ratio(out.counts.tp, out.counts.tp + out.counts.fp);
  out.recall = safe_ratio(out.counts.tp, out.counts.tp + out.counts.fn);
  return out;
}

std::vector<double> default_band_edges() {
  return {0.0, 20.0, 60.0, 70.0, std::numeric_limits<double>::infinity()};
}

std::vector<double> parse_band_edges(const std::string& text) {
  std::vector<double> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "Inf" || item == "INF") {
      edges.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      edges.push_back(std::stod(item, &used));
      if (used != item.size()) throw ValueError("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("band edges: cannot parse '" + item + "'");
    }
  }
  if (edges.size() < 2) throw ConfigError("band edges: need at least two values");
  return edges;
}

std::vector<BandMetrics> distance_banded(std::span<const ImageDetections> images, std::span<const double> edges) {
  if (edges.size() < 2) throw ValueError("distance bands: need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ValueError("distance bands: edges must be strictly increasing");
  }
  check_images(images);
  const std::size_t n_bands = edges.size() - 1;
  auto band_of = [&](double d) -> std::size_t {
    for (std::size_t b = 0; b < n_bands; ++b) {
      if (d >= edges[b] && d < edges[b + 1]) return b;
    }
    throw ValueError("distance bands: distance " + std::to_string(d) + " lies outside every band");
  };

  std::vector<std::map<int, std::vector<Ranked>>> ranked(n_bands);
  std::vector<std::map<int, long>> n_gt(n_bands);
  std::vector<BandMetrics> out(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    out[b].lo = edges[b];
    out[b].hi = edges[b + 1];
  }

  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& im = images[i];
    std::vector<std::size_t> gt_band(im.gts.size());
    for (std::size_t g = 0; g < im.gts.size(); ++g) {
      if (!im.gts[g].distance_m) throw ValueError("distance bands: ground truth without a distance");
      gt_band[g] = band_of(*im.gts[g].distance_m);
      ++n_gt[gt_band[g]][im.gts[g].class_id];
    }
    std::vector<int> matched;
    const std::vector<bool> tp = match_predictions(im.preds, im.gts, 0.5, &matched);
    std::vector<bool> gt_hit(im.gts.size(), false);
    for (std::size_t p = 0; p < im.preds.size(); ++p) {
      std::size_t band = n_bands - 1;
      if (tp[p]) {
        band = gt_band[matched[p]];
        gt_hit[matched[p]] = true;
        ++out[band].counts.tp;
      } else {
        double best = 0.0;
        for (std::size_t g = 0; g < im.gts.size(); ++g) {
          const double v = iou(im.preds[p].box, im.gts[g].box);
          if (v > best) {
            best = v;
            band = gt_band[g];
          }
        }
        ++out[band].counts.fp;
      }
      ranked[band][im.preds[p].cls].push_back({im.preds[p].conf, i, p, tp[p]});
    }
    for (std::size_t g = 0; g < im.gts.size(); ++g) {
      if (!gt_hit[g]) ++out[gt_band[g]].counts.fn;
    }
  }

  for (std::size_t b = 0; b < n_bands; ++b) {
    std::set<int> classes;
    for (const auto& [c, n] : n_gt[b]) classes.insert(c);
    for (const auto& [c, r] : ranked[b]) classes.insert(c);
    if (classes.empty()) continue;
    double sum = 0.0;
    for (int c : classes) sum += ranked_ap(ranked[b][c], n_gt[b][c]);
    out[b].map50 = sum / static_cast<double>(classes.size());
  }
  return out;
}

SegmentationMetrics segmentation_metrics(std::span<const LabelPair> pairs, int num_classes) {
  if (num_classes < 2) throw ValueError("segmentation metrics: need at least one non-void class");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<long> confusion(k * k, 0);  // [truth][pred]
  for (const auto& pair : pairs) {
    if (!pair.predicted || !pair.truth) throw ValueError("segmentation metrics: missing label map");
    const auto& pred = *pair.predicted;
    const auto& truth = *pair.truth;
    if (pred.height != truth.height || pred.width != truth.width || pred.channels != 1 || truth.channels != 1) {
      throw ShapeError("segmentation metrics: label maps differ in shape");
    }
    for (std::size_t i = 0; i < truth.data.size(); ++i) {
      const std::size_t t = truth.data[i];
      const std::size_t p = pred.data[i];
      if (t >= k || p >= k) throw ValueError("segmentation metrics: label out of range");
      if (t == 0) continue;
      ++confusion[t * k + p];
    }
  }
  SegmentationMetrics out;
  out.iou.assign(k - 1, std::nullopt);
  double iou_sum = 0.0;
  int iou_n = 0;
  double acc_sum = 0.0;
  int acc_n = 0;
  for (std::size_t c = 1; c < k; ++c) {
    const long tp = confusion[c * k + c];
    long truth_total = 0;
    long pred_total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      truth_total += confusion[c * k + j];
      pred_total += confusion[j * k + c];
    }
    const long uni = truth_total + pred_total - tp;
    if (uni > 0) {
      const double v = static_cast<double>(tp) / static_cast<double>(uni);
      out.iou[c - 1] = v;
      iou_sum += v;
      ++iou_n;
    }
    if (truth_total > 0) {
      acc_sum += static_cast<double>(tp) / static_cast<double>(truth_total);
      ++acc_n;
    }
  }
  out.miou = iou_n > 0 ? iou_sum / iou_n : 0.0;
  out.macc = acc_n > 0 ? acc_sum / acc_n : 0.0;
  return out;
}

double power_of(const LightField& m, const LightField& m_lb) {
  if (!m.same_shape(m_lb)) throw ShapeError("power_of: fields differ in size");
  const double ref = m_lb.mean();
  if (!(ref > 0.0)) throw ValueError("power_of: low-beam reference has zero mean");
  return m.mean() / ref;
}

}  // namespace lidas
