#include "lidas/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lidas/kernels.hpp"

namespace lidas {

namespace {

void check_dims(int h, int w, int c, const char* what) {
  if (h <= 0 || w <= 0) {
    throw ShapeError(std::string(what) + ": dimensions must be positive, got " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  if (c != 1 && c != 3) {
    throw ShapeError(std::string(what) + ": channels must be 1 or 3, got " + std::to_string(c));
  }
}

void check_range(std::span<const float> data, const char* what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float v = data[i];
    if (!(v >= 0.0F && v <= 1.0F)) {
      throw ValueError(std::string(what) + ": value " + std::to_string(v) + " at index " +
                       std::to_string(i) + " outside [0,1]");
    }
  }
}

}  // namespace

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels, "Image");
  if (!(fill >= 0.0F && fill <= 1.0F)) throw ValueError("Image: fill value outside [0,1]");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_dims(height, width, channels, "Image");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("Image: data length " + std::to_string(data_.size()) +
                     " does not match H*W*C");
  }
  check_range(data_, "Image");
}

Image Image::adopt(int height, int width, int channels, std::vector<float> data) {
  Image img;
  img.height_ = height;
  img.width_ = width;
  img.channels_ = channels;
  img.data_ = std::move(data);
  return img;
}

std::vector<double> Image::luminance() const {
  std::vector<double> out(pixel_count());
  kernels::parallel::luminance(data_, {height_, width_, channels_}, out);
  return out;
}

LightField::LightField(int height, int width, float fill) : height_(height), width_(width) {
  check_dims(height, width, 1, "LightField");
  if (!(fill >= 0.0F && fill <= 1.0F)) throw ValueError("LightField: fill value outside [0,1]");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

LightField::LightField(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width, 1, "LightField");
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("LightField: data length does not match H*W");
  }
  check_range(data_, "LightField");
}

LightField LightField::adopt(int height, int width, std::vector<float> data) {
  LightField f;
  f.height_ = height;
  f.width_ = width;
  f.data_ = std::move(data);
  return f;
}

double LightField::mean() const { return kernels::parallel::mean(data_, width_); }

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

void ScenePair::validate() const {
  if (i_full.empty() || i_off.empty()) throw ShapeError("ScenePair: missing render");
  if (!i_full.same_shape(i_off)) {
    throw ShapeError("ScenePair: i_full and i_off dimensions differ");
  }
  if (depth && !depth->same_shape(height(), width())) {
    throw ShapeError("ScenePair: depth map dimensions differ from renders");
  }
  if (semantic && !semantic->same_shape(height(), width())) {
    throw ShapeError("ScenePair: label map dimensions differ from renders");
  }
  auto inside = [&](const Box& b) {
    return b.x1 >= 0 && b.y1 >= 0 && b.x2 <= width() && b.y2 <= height() && b.x1 <= b.x2 &&
           b.y1 <= b.y2;
  };
  for (const auto& a : annotations) {
    if (!inside(a.box)) throw ShapeError("ScenePair: annotation box outside image");
  }
  for (const auto& a : distractors) {
    if (!inside(a.box)) throw ShapeError("ScenePair: distractor box outside image");
  }
}

void require_same_shape(const ScenePair& pair, const LightField& m, const char* what) {
  if (!pair.i_full.same_shape(pair.i_off)) {
    throw ShapeError(std::string(what) + ": i_full and i_off dimensions differ");
  }
  if (!m.same_shape(pair.i_full)) {
    throw ShapeError(std::string(what) + ": light field " + std::to_string(m.height()) + "x" +
                     std::to_string(m.width()) + " does not match scene " +
                     std::to_string(pair.height()) + "x" + std::to_string(pair.width()));
  }
}

}  // namespace lidas
