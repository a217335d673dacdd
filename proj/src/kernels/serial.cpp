// Reference implementations. Plain loops, no threading; kept for tests and
// the benchmark baseline.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lidas/kernels.hpp"
#include "pixel_ops.hpp"

namespace lidas::kernels {

double sample_table(const BeamArgs& args, double h_deg, double v_deg) {
  const double* ha = args.h_angles;
  const double* va = args.v_angles;
  if (args.n_h < 1 || args.n_v < 1) return 0.0;
  if (h_deg < ha[0] || h_deg > ha[args.n_h - 1] || v_deg < va[0] || v_deg > va[args.n_v - 1]) {
    return 0.0;
  }
  auto locate = [](const double* axis, int n, double v, int& i0, double& t) {
    if (n == 1) {
      i0 = 0;
      t = 0.0;
      return;
    }
    const double* it = std::upper_bound(axis, axis + n, v);
    int hi = static_cast<int>(it - axis);
    hi = std::clamp(hi, 1, n - 1);
    i0 = hi - 1;
    t = (v - axis[i0]) / (axis[hi] - axis[i0]);
  };
  int ih = 0;
  int iv = 0;
  double th = 0.0;
  double tv = 0.0;
  locate(ha, args.n_h, h_deg, ih, th);
  locate(va, args.n_v, v_deg, iv, tv);
  const int ih1 = std::min(ih + 1, args.n_h - 1);
  const int iv1 = std::min(iv + 1, args.n_v - 1);
  const double* row0 = args.values + static_cast<std::size_t>(iv) * args.n_h;
  const double* row1 = args.values + static_cast<std::size_t>(iv1) * args.n_h;
  const double top = row0[ih] * (1.0 - th) + row0[ih1] * th;
  const double bottom = row1[ih] * (1.0 - th) + row1[ih1] * th;
  return top * (1.0 - tv) + bottom * tv;
}

namespace serial {

void relight(std::span<const float> full, std::span<const float> off,
             std::span<const float> field, Dims d, std::span<float> out) {
  const std::size_t n = d.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    const float m = field[p];
    for (int c = 0; c < d.channels; ++c) {
      const std::size_t i = p * d.channels + c;
      const float v = full[i] * m + off[i] * (1.0F - m);
      out[i] = std::clamp(v, std::min(full[i], off[i]), std::max(full[i], off[i]));
    }
  }
}

void relight_gradient(std::span<const float> full, std::span<const float> off,
                      std::span<const double> upstream, Dims d, std::span<double> out) {
  const std::size_t n = d.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    double g = 0.0;
    for (int c = 0; c < d.channels; ++c) {
      const std::size_t i = p * d.channels + c;
      g += upstream[i] * (static_cast<double>(full[i]) - static_cast<double>(off[i]));
    }
    out[p] = g;
  }
}

void darken_only(std::span<const float> image_lb, std::span<const float> m_lb,
                 std::span<const float> m, Dims d, std::span<float> field_out,
                 std::span<float> image_out) {
  const std::size_t n = d.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    const float keep = 1.0F - std::max(m_lb[p] - m[p], 0.0F);
    field_out[p] = keep;
    for (int c = 0; c < d.channels; ++c) {
      const std::size_t i = p * d.channels + c;
      image_out[i] = image_lb[i] * keep;
    }
  }
}

void residual_update(std::span<const float> prev, std::span<const float> delta,
                     std::span<float> out) {
  for (std::size_t i = 0; i < prev.size(); ++i) {
    out[i] = std::min(std::max(prev[i] + delta[i], 0.0F), 1.0F);
  }
}

double mean(std::span<const float> values, int width) {
  if (values.empty() || width <= 0) return 0.0;
  const std::size_t rows = values.size() / width;
  std::vector<double> partial(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int x = 0; x < width; ++x) s += values[r * width + x];
    partial[r] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(values.size());
}

bool scale_clip(std::span<const float> in, double scale, std::span<float> out) {
  bool clipped = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = static_cast<double>(in[i]) * scale;
    if (v > 1.0) {
      clipped = true;
      out[i] = 1.0F;
    } else {
      out[i] = static_cast<float>(std::max(v, 0.0));
    }
  }
  return clipped;
}

void luminance(std::span<const float> pixels, Dims d, std::span<double> out) {
  const std::size_t n = d.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    if (d.channels >= 3) {
      const float* px = pixels.data() + p * d.channels;
      out[p] = 0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2];
    } else {
      out[p] = pixels[p * d.channels];
    }
  }
}

void project_beam(const BeamArgs& args, std::span<const float> depth, Dims d,
                  std::span<float> out) {
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * d.width + x;
      out[p] = detail::beam_pixel(args, y, x, depth[p]);
    }
  }
}

void bilinear_resample(std::span<const float> src, Dims src_dims,
                       std::span<const float> coords_xy, std::span<float> out) {
  const std::size_t n = coords_xy.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < src_dims.channels; ++c) {
      out[i * src_dims.channels + c] =
          detail::bilinear_at(src, src_dims, c, coords_xy[2 * i], coords_xy[2 * i + 1]);
    }
  }
}

}  // namespace serial
}  // namespace lidas::kernels
