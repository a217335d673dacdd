#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidas/errors.hpp"

namespace lidas {

/// Row-major, channel-interleaved buffer with no value constraints.
/// Used for gradients, raw residuals, depth and label maps.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  bool same_shape(int h, int w) const { return height == h && width == w; }
};

/// Per-pixel distance in meters; values <= 0 mark invalid depth.
using DepthMap = Raster<float>;
/// Semantic label per pixel.
using LabelMap = Raster<std::uint8_t>;
/// Gradient of a scalar loss w.r.t. an image (H x W x C).
using ImageGradient = Raster<double>;
/// Gradient of a scalar loss w.r.t. a light field (H x W).
using FieldGradient = Raster<double>;
/// Raw policy output before projection, values in [-1, 1].
using ResidualField = Raster<float>;

/// Linear-intensity image with values in [0, 1]. Immutable after construction.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0F);
  /// Validates dimensions and the [0, 1] range.
  Image(int height, int width, int channels, std::vector<float> data);

  /// Adopts data already known to be in range (kernel outputs).
  static Image adopt(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::span<const float> data() const { return data_; }
  float at(int y, int x, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Rec. 709 luminance per pixel (single-channel images pass through).
  std::vector<double> luminance() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Single-channel light field with values in [0, 1].
class LightField {
 public:
  LightField() = default;
  LightField(int height, int width, float fill = 0.0F);
  LightField(int height, int width, std::vector<float> data);

  static LightField adopt(int height, int width, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::span<const float> data() const { return data_; }
  float at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  bool empty() const { return data_.empty(); }
  bool same_shape(int h, int w) const { return height_ == h && width_ == w; }
  bool same_shape(const LightField& o) const { return same_shape(o.height_, o.width_); }
  bool same_shape(const Image& img) const { return same_shape(img.height(), img.width()); }

  /// Mean intensity, reduced in a fixed row order.
  double mean() const;

  friend bool operator==(const LightField&, const LightField&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Axis-aligned box in continuous pixel coordinates; pixel (x, y) covers [x, x+1) x [y, y+1).
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  friend bool operator==(const Box&, const Box&) = default;
};

double iou(const Box& a, const Box& b);

struct Annotation {
  int class_id = 0;
  Box box;
  std::optional<Raster<std::uint8_t>> mask;
  std::optional<double> distance_m;
};

/// Co-registered fully-lit and unlit renders of one scene.
struct ScenePair {
  Image i_full;
  Image i_off;
  std::optional<DepthMap> depth;
  std::vector<Annotation> annotations;
  /// Object-like regions that are not ground truth (emitters, reflective clutter).
  std::vector<Annotation> distractors;
  std::optional<LabelMap> semantic;

  int height() const { return i_full.height(); }
  int width() const { return i_full.width(); }
  int channels() const { return i_full.channels(); }

  /// Checks render dimensions, depth/label shapes and annotation bounds.
  void validate() const;
};

void require_same_shape(const ScenePair& pair, const LightField& m, const char* what);

}  // namespace lidas
