#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/kernels.hpp"

namespace lidas {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct CameraModel {
  double fx = 1;
  double fy = 1;
  double cx = 0;
  double cy = 0;
  int width = 1;
  int height = 1;

  void validate(const char* what = "CameraModel") const;
  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Camera -> headlight rigid transform: p_h = R * p_c + t (meters).
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation{0, 0, 0};

  static RigidTransform identity() { return {}; }
  /// Transform for a headlight sitting at `position` (camera frame) with the same orientation.
  static RigidTransform translated(double x, double y, double z);

  std::array<double, 3> apply(const std::array<double, 3>& p) const;
  std::array<double, 3> apply_inverse(const std::array<double, 3>& p) const;
  /// Max |R^T R - I| entry.
  double orthonormality_error() const;
  bool is_identity() const;
  friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

/// Relative luminous intensity over (horizontal, vertical) angle in degrees.
/// Angles follow the camera convention: +horizontal to the right, +vertical downward.
class AngularIntensityTable {
 public:
  AngularIntensityTable() = default;
  AngularIntensityTable(std::vector<double> h_angles, std::vector<double> v_angles,
                        std::vector<double> values);

  /// Uniform table of value 1 over the given extent.
  static AngularIntensityTable uniform(double h_extent_deg, double v_extent_deg);

  const std::vector<double>& h_angles() const { return h_angles_; }
  const std::vector<double>& v_angles() const { return v_angles_; }
  const std::vector<double>& values() const { return values_; }
  double value(int iv, int ih) const { return values_[static_cast<std::size_t>(iv) * h_angles_.size() + ih]; }

  /// Bilinear sample; 0 outside the table.
  double sample(double h_deg, double v_deg) const;
  /// Trapezoidal integral over the grid (degree^2 units).
  double integrated_power() const;
  double peak() const;
  AngularIntensityTable scaled(double s) const;
  bool covers(double h_min, double h_max, double v_min, double v_max) const;

  /// CSV: header row = horizontal angles (first cell ignored), first column = vertical angles.
  static AngularIntensityTable load_csv(const std::filesystem::path& path);
  static AngularIntensityTable parse_csv(const std::string& text);
  std::string to_csv() const;

 private:
  std::vector<double> h_angles_;
  std::vector<double> v_angles_;
  std::vector<double> values_;
};

/// Synthetic low-beam pattern: downward lobe biased to the right with a sharp
/// horizontal cutoff that rises on the right-hand side.
AngularIntensityTable synthetic_low_beam();
/// Synthetic high-beam pattern: centered wide lobe, peak 1, integrated power
/// `power_ratio` times the low-beam table.
AngularIntensityTable synthetic_high_beam(double power_ratio = 1.8);

struct HeadlightModel {
  CameraModel intrinsics;
  RigidTransform extrinsics;
  AngularIntensityTable phi;

  void validate() const;
  /// Angular extent of the projector frame, degrees {h_min, h_max, v_min, v_max}.
  std::array<double, 4> field_of_view() const;
};

/// 320x80 HD headlight, 40 x 10 degree frustum, mounted 0.6 m below and 1.8 m
/// ahead of the camera.
HeadlightModel default_headlight(const AngularIntensityTable& phi);

/// Per headlight pixel, the source coordinate in the camera image (x, y); NaN marks invalid.
struct WarpMap {
  int height = 0;  // headlight grid
  int width = 0;
  int source_height = 0;  // camera frame
  int source_width = 0;
  std::vector<float> coords;

  bool valid(int y, int x) const;
  std::array<float, 2> at(int y, int x) const {
    const std::size_t i = 2 * (static_cast<std::size_t>(y) * width + x);
    return {coords[i], coords[i + 1]};
  }
  std::size_t valid_count() const;
};

/// Headlight illumination seen in the camera image. Pixels with invalid depth
/// or outside the projector frame receive 0.
LightField project_beam(const CameraModel& cam, const HeadlightModel& hl, const DepthMap& depth);

/// Fills the kernel argument block (the table must outlive the result).
kernels::BeamArgs beam_args(const CameraModel& cam, const HeadlightModel& hl);

/// Warp for a fronto-parallel reference plane at `plane_distance` meters (camera frame).
WarpMap build_warp(const CameraModel& cam, const HeadlightModel& hl, double plane_distance);
/// Warp against measured geometry: each headlight ray is marched until it meets the depth map.
WarpMap build_warp(const CameraModel& cam, const HeadlightModel& hl, const DepthMap& depth);

/// Forward map camera pixel -> headlight coordinate on the reference plane (camera grid, NaN invalid).
WarpMap camera_to_headlight(const CameraModel& cam, const HeadlightModel& hl, double plane_distance);

struct RoundTripError {
  double max_px = 0.0;
  double mean_px = 0.0;
  std::size_t samples = 0;
};

/// Camera pixel -> headlight (forward map) -> camera (bilinear lookup in the
/// headlight warp), over camera pixels whose four headlight neighbors are valid.
RoundTripError warp_round_trip(const WarpMap& forward, const WarpMap& backward);

/// Bilinear sampling of a camera-frame field at every warped coordinate.
LightField field_to_headlight(const LightField& m, const WarpMap& warp);
/// Bilinear sampling of a headlight-frame field back into the camera frame.
LightField headlight_to_field(const LightField& headlight_field, const WarpMap& inverse);

/// One-time calibration record.
struct Calibration {
  CameraModel camera;
  HeadlightModel headlight;  // phi is not stored in the file
  double reference_plane_m = 20.0;
};

Calibration load_calibration(const std::filesystem::path& path);
Calibration parse_calibration(const std::string& json_text);
std::string calibration_to_json(const Calibration& calib);

}  // namespace lidas
