// OpenMP kernels. Per-element arithmetic matches serial.cpp exactly; the only
// reduction (mean) goes through per-row partials summed in row order.

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lidas/kernels.hpp"
#include "pixel_ops.hpp"

namespace lidas::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace parallel {

namespace {
using Index = std::int64_t;
}

void relight(std::span<const float> full, std::span<const float> off,
             std::span<const float> field, Dims d, std::span<float> out) {
  const Index n = static_cast<Index>(d.pixels());
  const int ch = d.channels;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    const float m = field[p];
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = static_cast<std::size_t>(p) * ch + c;
      const float v = full[i] * m + off[i] * (1.0F - m);
      out[i] = std::clamp(v, std::min(full[i], off[i]), std::max(full[i], off[i]));
    }
  }
}

void relight_gradient(std::span<const float> full, std::span<const float> off,
                      std::span<const double> upstream, Dims d, std::span<double> out) {
  const Index n = static_cast<Index>(d.pixels());
  const int ch = d.channels;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    double g = 0.0;
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = static_cast<std::size_t>(p) * ch + c;
      g += upstream[i] * (static_cast<double>(full[i]) - static_cast<double>(off[i]));
    }
    out[p] = g;
  }
}

void darken_only(std::span<const float> image_lb, std::span<const float> m_lb,
                 std::span<const float> m, Dims d, std::span<float> field_out,
                 std::span<float> image_out) {
  const Index n = static_cast<Index>(d.pixels());
  const int ch = d.channels;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    const float keep = 1.0F - std::max(m_lb[p] - m[p], 0.0F);
    field_out[p] = keep;
    for (int c = 0; c < ch; ++c) {
      const std::size_t i = static_cast<std::size_t>(p) * ch + c;
      image_out[i] = image_lb[i] * keep;
    }
  }
}

void residual_update(std::span<const float> prev, std::span<const float> delta,
                     std::span<float> out) {
  const Index n = static_cast<Index>(prev.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    out[i] = std::min(std::max(prev[i] + delta[i], 0.0F), 1.0F);
  }
}

double mean(std::span<const float> values, int width) {
  if (values.empty() || width <= 0) return 0.0;
  const Index rows = static_cast<Index>(values.size() / width);
  std::vector<double> partial(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int x = 0; x < width; ++x) s += values[static_cast<std::size_t>(r) * width + x];
    partial[r] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(values.size());
}

bool scale_clip(std::span<const float> in, double scale, std::span<float> out) {
  const Index n = static_cast<Index>(in.size());
  int clipped = 0;
#pragma omp parallel for schedule(static) reduction(| : clipped)
  for (Index i = 0; i < n; ++i) {
    const double v = static_cast<double>(in[i]) * scale;
    if (v > 1.0) {
      clipped = 1;
      out[i] = 1.0F;
    } else {
      out[i] = static_cast<float>(std::max(v, 0.0));
    }
  }
  return clipped != 0;
}

void luminance(std::span<const float> pixels, Dims d, std::span<double> out) {
  const Index n = static_cast<Index>(d.pixels());
  const int ch = d.channels;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < n; ++p) {
    if (ch >= 3) {
      const float* px = pixels.data() + static_cast<std::size_t>(p) * ch;
      out[p] = 0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2];
    } else {
      out[p] = pixels[static_cast<std::size_t>(p) * ch];
    }
  }
}

void project_beam(const BeamArgs& args, std::span<const float> depth, Dims d,
                  std::span<float> out) {
  const int h = d.height;
  const int w = d.width;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      out[p] = detail::beam_pixel(args, y, x, depth[p]);
    }
  }
}

void bilinear_resample(std::span<const float> src, Dims src_dims,
                       std::span<const float> coords_xy, std::span<float> out) {
  const Index n = static_cast<Index>(coords_xy.size() / 2);
  const int ch = src_dims.channels;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < ch; ++c) {
      out[static_cast<std::size_t>(i) * ch + c] =
          detail::bilinear_at(src, src_dims, c, coords_xy[2 * i], coords_xy[2 * i + 1]);
    }
  }
}

}  // namespace parallel
}  // namespace lidas::kernels
