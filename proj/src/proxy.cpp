#include "lidas/proxy.hpp"

#include <algorithm>

namespace lidas {

std::vector<Detection> proxy_detect(const Image& image, std::span<const Annotation> objects,
                                    std::span<const Annotation> distractors, const ProxyDetectorParams& params) {
  const std::vector<double> lum = image.luminance();
  std::vector<Detection> out;
  auto consider = [&](const Annotation& a) {
    const BoxRegions r = box_regions(a.box, image.height(), image.width(), params.ring_fraction);
    if (r.interior.empty() || r.ring.empty()) return;
    double in = 0.0;
    for (std::size_t p : r.interior) in += lum[p];
    double ring = 0.0;
    for (std::size_t p : r.ring) ring += lum[p];
    const double c = in / r.interior.size() - ring / r.ring.size();
    if (c < params.threshold) return;
    const double conf = c / (c + params.half_conf);
    const double shift = params.max_offset * (1.0 - conf) * a.box.width();
    Box b = a.box;
    b.x1 += shift;
    b.x2 += shift;
    out.push_back({a.class_id, b, conf});
  };
  for (const auto& a : objects) consider(a);
  for (const auto& a : distractors) consider(a);
  return out;
}

LabelMap proxy_segment(const Image& image, const LabelMap& truth, const ProxySegmenterParams& params) {
  if (truth.height != image.height() || truth.width != image.width() || truth.channels != 1) {
    throw ShapeError("proxy_segment: label map does not match the image");
  }
  const std::vector<double> lum = image.luminance();
  LabelMap out(truth.height, truth.width, 1, 0);
  for (std::size_t p = 0; p < lum.size(); ++p) {
    if (truth.data[p] == 0) continue;
    const bool readable = lum[p] >= params.dark_level && lum[p] <= params.bright_level;
    out.data[p] = readable ? truth.data[p] : params.fallback_label;
  }
  return out;
}

}  // namespace lidas
