#pragma once

// Stand-in perception heads for desk-scale experiments. Both read only the
// relit image plus the scene's candidate regions, so their output moves with
// the illumination the way a frozen detector's would.

#include <cstdint>
#include <span>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/scorer.hpp"

namespace lidas {

struct ProxyDetectorParams {
  /// Minimum interior-minus-ring luminance contrast for a detection.
  double threshold = 0.01;
  /// conf = c / (c + half_conf).
  double half_conf = 0.05;
  /// Horizontal box offset, as a fraction of box width, at zero confidence.
  double max_offset = 0.3;
  double ring_fraction = 0.25;
};

/// One detection per candidate (ground truth and distractors) whose contrast
/// clears the threshold. Weak detections are localized worse.
std::vector<Detection> proxy_detect(const Image& image, std::span<const Annotation> objects,
                                    std::span<const Annotation> distractors,
                                    const ProxyDetectorParams& params = {});

struct ProxySegmenterParams {
  double dark_level = 0.02;
  double bright_level = 0.95;
  /// Label guessed where the pixel is unreadable.
  std::uint8_t fallback_label = 1;
};

/// Keeps the true label where luminance is in [dark_level, bright_level] and
/// guesses fallback_label elsewhere; void ground truth stays void.
LabelMap proxy_segment(const Image& image, const LabelMap& truth, const ProxySegmenterParams& params = {});

}  // namespace lidas
