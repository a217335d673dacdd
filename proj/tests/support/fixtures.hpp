#pragma once

#include <random>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/metrics.hpp"

namespace fixture {

inline lidas::Image random_image(int h, int w, int c, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(static_cast<std::size_t>(h) * w * c);
  for (float& x : v) x = static_cast<float>(u(rng));
  return lidas::Image(h, w, c, std::move(v));
}

inline lidas::LightField random_field(int h, int w, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(static_cast<std::size_t>(h) * w);
  for (float& x : v) x = static_cast<float>(u(rng));
  return lidas::LightField(h, w, std::move(v));
}

/// Random box with corners inside [0, w] x [0, h] and at least `min_side` on each side.
inline lidas::Box random_box(int h, int w, std::mt19937_64& rng, double min_side = 2.0) {
  std::uniform_real_distribution<double> ux(0.0, w - min_side);
  std::uniform_real_distribution<double> uy(0.0, h - min_side);
  const double x1 = ux(rng);
  const double y1 = uy(rng);
  std::uniform_real_distribution<double> sx(min_side, w - x1);
  std::uniform_real_distribution<double> sy(min_side, h - y1);
  return {x1, y1, x1 + sx(rng), y1 + sy(rng)};
}

/// i_full >= i_off per pixel, both in [0, 1], with a few annotations.
inline lidas::ScenePair random_pair(int h, int w, std::mt19937_64& rng, int n_annotations = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<float> full(static_cast<std::size_t>(h) * w * 3);
  std::vector<float> off(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double a = u(rng);
    const double b = u(rng);
    full[i] = static_cast<float>(std::max(a, b));
    off[i] = static_cast<float>(std::min(a, b) * 0.3);
  }
  lidas::ScenePair p;
  p.i_full = lidas::Image(h, w, 3, std::move(full));
  p.i_off = lidas::Image(h, w, 3, std::move(off));
  for (int k = 0; k < n_annotations; ++k) {
    lidas::Box b = random_box(h, w, rng, 3.0);
    b.x2 = std::min(b.x2, b.x1 + w / 2.0);
    b.y2 = std::min(b.y2, b.y1 + h / 2.0);
    p.annotations.push_back({k % 2, b, std::nullopt, 10.0 + 10.0 * k});
  }
  return p;
}

/// A few images with up to `max_boxes` ground truths and predictions each, two
/// classes. Predictions are jittered copies of ground truth or free boxes, so
/// IoUs land on both sides of every threshold.
inline std::vector<lidas::ImageDetections> random_detection_case(std::mt19937_64& rng, int max_boxes = 4) {
  std::uniform_int_distribution<int> n_images(1, 3);
  std::uniform_int_distribution<int> n_boxes(0, max_boxes);
  std::uniform_int_distribution<int> cls(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  std::uniform_real_distribution<double> dist(1.0, 90.0);
  std::vector<lidas::ImageDetections> out(n_images(rng));
  for (auto& im : out) {
    const int g = n_boxes(rng);
    for (int k = 0; k < g; ++k) im.gts.push_back({cls(rng), random_box(40, 60, rng, 4.0), std::nullopt, dist(rng)});
    const int p = n_boxes(rng);
    for (int k = 0; k < p; ++k) {
      lidas::Detection d;
      d.conf = unit(rng);
      if (!im.gts.empty() && unit(rng) < 0.7) {
        const auto& src = im.gts[std::uniform_int_distribution<std::size_t>(0, im.gts.size() - 1)(rng)];
        d.cls = unit(rng) < 0.85 ? src.class_id : 1 - src.class_id;
        d.box = {src.box.x1 + jitter(rng), src.box.y1 + jitter(rng), src.box.x2 + jitter(rng), src.box.y2 + jitter(rng)};
        if (d.box.x2 <= d.box.x1) std::swap(d.box.x1, d.box.x2);
        if (d.box.y2 <= d.box.y1) std::swap(d.box.y1, d.box.y2);
      } else {
        d.cls = cls(rng);
        d.box = random_box(40, 60, rng, 4.0);
      }
      im.preds.push_back(d);
    }
  }
  return out;
}

}  // namespace fixture
