#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "lidas/kernels.hpp"

namespace lidas::kernels::detail {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

inline float beam_pixel(const BeamArgs& a, int y, int x, float depth) {
  if (!(depth > 0.0F) || !std::isfinite(depth)) return 0.0F;
  const double z = depth;
  const double px = (x - a.cam_cx) / a.cam_fx * z;
  const double py = (y - a.cam_cy) / a.cam_fy * z;
  const double* r = a.rotation;
  const double hx = r[0] * px + r[1] * py + r[2] * z + a.translation[0];
  const double hy = r[3] * px + r[4] * py + r[5] * z + a.translation[1];
  const double hz = r[6] * px + r[7] * py + r[8] * z + a.translation[2];
  if (!(hz > 0.0)) return 0.0F;
  const double u = a.hl_fx * hx / hz + a.hl_cx;
  const double v = a.hl_fy * hy / hz + a.hl_cy;
  // Pixel centers sit at integer coordinates; the frame spans half a pixel beyond.
  if (u < -0.5 || u > a.hl_width - 0.5 || v < -0.5 || v > a.hl_height - 0.5) return 0.0F;
  const double h_deg = std::atan2(hx, hz) * kRadToDeg;
  const double v_deg = std::atan2(hy, hz) * kRadToDeg;
  const double value = a.scale * sample_table(a, h_deg, v_deg);
  return static_cast<float>(std::clamp(value, 0.0, 1.0));
}

inline float bilinear_at(std::span<const float> src, Dims d, int c, float fx, float fy) {
  if (!std::isfinite(fx) || !std::isfinite(fy)) return 0.0F;
  if (fx < 0.0F || fy < 0.0F || fx > static_cast<float>(d.width - 1) ||
      fy > static_cast<float>(d.height - 1)) {
    return 0.0F;
  }
  const int x0 = std::min(static_cast<int>(fx), d.width - 1);
  const int y0 = std::min(static_cast<int>(fy), d.height - 1);
  const int x1 = std::min(x0 + 1, d.width - 1);
  const int y1 = std::min(y0 + 1, d.height - 1);
  const float tx = fx - static_cast<float>(x0);
  const float ty = fy - static_cast<float>(y0);
  auto px = [&](int yy, int xx) {
    return src[(static_cast<std::size_t>(yy) * d.width + xx) * d.channels + c];
  };
  const float top = px(y0, x0) * (1.0F - tx) + px(y0, x1) * tx;
  const float bottom = px(y1, x0) * (1.0F - tx) + px(y1, x1) * tx;
  return top * (1.0F - ty) + bottom * ty;
}

}  // namespace lidas::kernels::detail
