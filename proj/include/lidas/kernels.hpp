#pragma once

// Per-pixel kernels behind the public operations. Every kernel exists twice:
// `serial` is the reference used by tests, `parallel` is the OpenMP version
// used at runtime. Both produce bit-identical output for any thread count.

#include <cstddef>
#include <span>

namespace lidas::kernels {

struct Dims {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

/// Pinhole + angular-table arguments for beam projection. Rotation is row-major
/// camera->headlight, translation in meters.
struct BeamArgs {
  double cam_fx, cam_fy, cam_cx, cam_cy;
  double hl_fx, hl_fy, hl_cx, hl_cy;
  int hl_width, hl_height;
  double rotation[9];
  double translation[3];
  // Angular table: rows = vertical angles, cols = horizontal angles (degrees).
  const double* h_angles;
  int n_h;
  const double* v_angles;
  int n_v;
  const double* values;  // n_v x n_h
  double scale;
};

/// Bilinear sample of an angular table; 0 outside the covered range.
double sample_table(const BeamArgs& args, double h_deg, double v_deg);

#define LIDAS_KERNEL_DECLS                                                                     \
  void relight(std::span<const float> full, std::span<const float> off,                      \
               std::span<const float> field, Dims d, std::span<float> out);                  \
  void relight_gradient(std::span<const float> full, std::span<const float> off,             \
                        std::span<const double> upstream, Dims d, std::span<double> out);    \
  void darken_only(std::span<const float> image_lb, std::span<const float> m_lb,             \
                   std::span<const float> m, Dims d, std::span<float> field_out,             \
                   std::span<float> image_out);                                              \
  void residual_update(std::span<const float> prev, std::span<const float> delta,            \
                       std::span<float> out);                                                \
  double mean(std::span<const float> values, int width);                                     \
  bool scale_clip(std::span<const float> in, double scale, std::span<float> out);            \
  void luminance(std::span<const float> pixels, Dims d, std::span<double> out);              \
  void project_beam(const BeamArgs& args, std::span<const float> depth, Dims d,              \
                    std::span<float> out);                                                   \
  void bilinear_resample(std::span<const float> src, Dims src_dims,                          \
                         std::span<const float> coords_xy, std::span<float> out);

namespace serial {
LIDAS_KERNEL_DECLS
}  // namespace serial

namespace parallel {
LIDAS_KERNEL_DECLS
}  // namespace parallel

#undef LIDAS_KERNEL_DECLS

/// Number of OpenMP worker threads (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace lidas::kernels
