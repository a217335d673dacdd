#include "lidas/photometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "lidas/image_io.hpp"

namespace lidas {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

using Vec3 = std::array<double, 3>;

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return !v.empty();
}

double trapezoid_weight(const std::vector<double>& axis, std::size_t i) {
  if (axis.size() < 2) return 1.0;
  double w = 0.0;
  if (i > 0) w += 0.5 * (axis[i] - axis[i - 1]);
  if (i + 1 < axis.size()) w += 0.5 * (axis[i + 1] - axis[i]);
  return w;
}

std::vector<double> linspace(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
  return out;
}

double gauss(double x, double mu, double sigma) {
  const double t = (x - mu) / sigma;
  return std::exp(-0.5 * t * t);
}

AngularIntensityTable normalized_peak(std::vector<double> h, std::vector<double> v,
                                      std::vector<double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  for (double& x : values) x /= peak;
  return {std::move(h), std::move(v), std::move(values)};
}

AngularIntensityTable high_beam_with_width(double k) {
  auto h = linspace(-30.0, 30.0, 0.5);
  auto v = linspace(-10.0, 10.0, 0.25);
  std::vector<double> values;
  values.reserve(h.size() * v.size());
  for (double va : v) {
    for (double ha : h) values.push_back(gauss(ha, 0.0, 9.0 * k) * gauss(va, 0.3, 3.0 * k));
  }
  return normalized_peak(std::move(h), std::move(v), std::move(values));
}

std::array<double, 3> ray_direction(const CameraModel& m, double u, double v) {
  return {(u - m.cx) / m.fx, (v - m.cy) / m.fy, 1.0};
}

Vec3 rotate_inverse(const RigidTransform& t, const Vec3& d) {
  const auto& r = t.rotation;
  return {r[0] * d[0] + r[3] * d[1] + r[6] * d[2], r[1] * d[0] + r[4] * d[1] + r[7] * d[2],
          r[2] * d[0] + r[5] * d[1] + r[8] * d[2]};
}

bool inside_centers(const CameraModel& m, double u, double v) {
  return u >= 0.0 && v >= 0.0 && u <= m.width - 1 && v <= m.height - 1;
}

void check_extrinsics(const RigidTransform& t) {
  for (double x : t.rotation) {
    if (!std::isfinite(x)) throw ModelError("extrinsics: non-finite rotation entry");
  }
  for (double x : t.translation) {
    if (!std::isfinite(x)) throw ModelError("extrinsics: non-finite translation entry");
  }
  if (t.orthonormality_error() > 1e-6) {
    throw ModelError("extrinsics: rotation is not orthonormal (error " +
                     std::to_string(t.orthonormality_error()) + ")");
  }
}

nlohmann::json intrinsics_json(const CameraModel& m) {
  return {{"fx", m.fx}, {"fy", m.fy}, {"cx", m.cx}, {"cy", m.cy}, {"width", m.width}, {"height", m.height}};
}

CameraModel intrinsics_from_json(const nlohmann::json& j) {
  CameraModel m;
  m.fx = j.at("fx").get<double>();
  m.fy = j.at("fy").get<double>();
  m.cx = j.at("cx").get<double>();
  m.cy = j.at("cy").get<double>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  return m;
}

}  // namespace

void CameraModel::validate(const char* what) const {
  if (!(fx > 0) || !(fy > 0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw ModelError(std::string(what) + ": focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) throw ModelError(std::string(what) + ": empty frame");
  if (!(cx >= 0 && cx <= width && cy >= 0 && cy <= height)) {
    throw ModelError(std::string(what) + ": principal point outside the frame");
  }
}

RigidTransform RigidTransform::translated(double x, double y, double z) {
  RigidTransform t;
  t.translation = {-x, -y, -z};
  return t;
}

std::array<double, 3> RigidTransform::apply(const std::array<double, 3>& p) const {
  const auto& r = rotation;
  return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + translation[0],
          r[3] * p[0] + r[4] * p[1] + r[5] * p[2] + translation[1],
          r[6] * p[0] + r[7] * p[1] + r[8] * p[2] + translation[2]};
}

std::array<double, 3> RigidTransform::apply_inverse(const std::array<double, 3>& p) const {
  return rotate_inverse(*this, {p[0] - translation[0], p[1] - translation[1], p[2] - translation[2]});
}

double RigidTransform::orthonormality_error() const {
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += rotation[3 * k + i] * rotation[3 * k + j];
      err = std::max(err, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  return err;
}

bool RigidTransform::is_identity() const { return *this == RigidTransform{}; }

// -- AngularIntensityTable ---------------------------------------------------

AngularIntensityTable::AngularIntensityTable(std::vector<double> h_angles,
                                             std::vector<double> v_angles,
                                             std::vector<double> values)
    : h_angles_(std::move(h_angles)), v_angles_(std::move(v_angles)), values_(std::move(values)) {
  if (!strictly_increasing(h_angles_) || !strictly_increasing(v_angles_)) {
    throw ModelError("angular table: angle grids must be non-empty and strictly increasing");
  }
  if (values_.size() != h_angles_.size() * v_angles_.size()) {
    throw ModelError("angular table: value count does not match grid");
  }
  for (double x : values_) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ModelError("angular table: negative or non-finite value");
  }
}

AngularIntensityTable AngularIntensityTable::uniform(double h_extent_deg, double v_extent_deg) {
  return {{-h_extent_deg, h_extent_deg}, {-v_extent_deg, v_extent_deg}, {1.0, 1.0, 1.0, 1.0}};
}

double AngularIntensityTable::sample(double h_deg, double v_deg) const {
  kernels::BeamArgs a{};
  a.h_angles = h_angles_.data();
  a.n_h = static_cast<int>(h_angles_.size());
  a.v_angles = v_angles_.data();
  a.n_v = static_cast<int>(v_angles_.size());
  a.values = values_.data();
  return kernels::sample_table(a, h_deg, v_deg);
}

double AngularIntensityTable::integrated_power() const {
  double total = 0.0;
  for (std::size_t iv = 0; iv < v_angles_.size(); ++iv) {
    const double wv = trapezoid_weight(v_angles_, iv);
    for (std::size_t ih = 0; ih < h_angles_.size(); ++ih) {
      total += wv * trapezoid_weight(h_angles_, ih) * values_[iv * h_angles_.size() + ih];
    }
  }
  return total;
}

double AngularIntensityTable::peak() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

AngularIntensityTable AngularIntensityTable::scaled(double s) const {
  if (!(s >= 0.0)) throw ModelError("angular table: scale must be non-negative");
  auto v = values_;
  for (double& x : v) x *= s;
  return {h_angles_, v_angles_, std::move(v)};
}

bool AngularIntensityTable::covers(double h_min, double h_max, double v_min, double v_max) const {
  return !h_angles_.empty() && h_angles_.front() <= h_min && h_angles_.back() >= h_max &&
         v_angles_.front() <= v_min && v_angles_.back() >= v_max;
}

AngularIntensityTable AngularIntensityTable::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      return v;
    } catch (const std::exception&) {
      throw ModelError("angular table CSV: cannot parse '" + s + "'");
    }
  };
  if (!std::getline(in, line)) throw ModelError("angular table CSV: empty input");
  const auto header = split(line);
  if (header.size() < 2) throw ModelError("angular table CSV: header needs angle columns");
  std::vector<double> h;
  for (std::size_t i = 1; i < header.size(); ++i) h.push_back(number(header[i]));
  std::vector<double> v;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ModelError("angular table CSV: ragged row");
    v.push_back(number(cells[0]));
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(number(cells[i]));
  }
  return {std::move(h), std::move(v), std::move(values)};
}

AngularIntensityTable AngularIntensityTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string AngularIntensityTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << "v\\h";
  for (double h : h_angles_) out << ',' << h;
  out << '\n';
  for (std::size_t iv = 0; iv < v_angles_.size(); ++iv) {
    out << v_angles_[iv];
    for (std::size_t ih = 0; ih < h_angles_.size(); ++ih) out << ',' << values_[iv * h_angles_.size() + ih];
    out << '\n';
  }
  return out.str();
}

AngularIntensityTable synthetic_low_beam() {
  auto h = linspace(-30.0, 30.0, 0.5);
  auto v = linspace(-10.0, 10.0, 0.25);
  std::vector<double> values;
  values.reserve(h.size() * v.size());
  const double rise = std::tan(15.0 * kDeg);
  for (double va : v) {
    for (double ha : h) {
      // Cutoff 0.57 deg below the horizon on the left, rising at 15 deg to
      // 1 deg above the horizon on the right.
      const double cutoff = ha < 0.0 ? 0.57 : std::max(-1.0, 0.57 - rise * ha);
      const double edge = std::clamp((va - (cutoff - 0.25)) / 0.25, 0.0, 1.0);
      const double gate = 0.01 + 0.99 * edge;
      const double lobe = gauss(ha, 2.0, 11.0) * gauss(va, 1.8, 2.2);
      values.push_back(lobe * gate);
    }
  }
  return normalized_peak(std::move(h), std::move(v), std::move(values));
}

AngularIntensityTable synthetic_high_beam(double power_ratio) {
  const double target = power_ratio * synthetic_low_beam().integrated_power();
  double lo = 0.05;
  double hi = 4.0;
  if (high_beam_with_width(hi).integrated_power() < target) {
    throw ModelError("synthetic_high_beam: power ratio not reachable on the table grid");
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (high_beam_with_width(mid).integrated_power() < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return high_beam_with_width(0.5 * (lo + hi));
}

// -- HeadlightModel ----------------------------------------------------------

std::array<double, 4> HeadlightModel::field_of_view() const {
  const auto& k = intrinsics;
  auto ang = [](double pix, double c, double f) { return std::atan((pix - c) / f) / kDeg; };
  return {ang(-0.5, k.cx, k.fx), ang(k.width - 0.5, k.cx, k.fx), ang(-0.5, k.cy, k.fy),
          ang(k.height - 0.5, k.cy, k.fy)};
}

void HeadlightModel::validate() const {
  intrinsics.validate("headlight intrinsics");
  check_extrinsics(extrinsics);
  const auto fov = field_of_view();
  if (!phi.covers(fov[0], fov[1], fov[2], fov[3])) {
    throw ModelError("headlight: angular table does not cover the projector field of view");
  }
}

HeadlightModel default_headlight(const AngularIntensityTable& phi) {
  HeadlightModel hl;
  hl.intrinsics.width = 320;
  hl.intrinsics.height = 80;
  hl.intrinsics.cx = 159.5;
  hl.intrinsics.cy = 39.5;
  hl.intrinsics.fx = 160.0 / std::tan(20.0 * kDeg);
  hl.intrinsics.fy = 40.0 / std::tan(5.0 * kDeg);
  hl.extrinsics = RigidTransform::translated(0.0, 0.6, 1.8);
  hl.phi = phi;
  return hl;
}

// -- WarpMap -----------------------------------------------------------------

bool WarpMap::valid(int y, int x) const {
  const auto c = at(y, x);
  return std::isfinite(c[0]) && std::isfinite(c[1]);
}

std::size_t WarpMap::valid_count() const {
  std::size_t n = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) n += valid(y, x) ? 1 : 0;
  }
  return n;
}

kernels::BeamArgs beam_args(const CameraModel& cam, const HeadlightModel& hl) {
  kernels::BeamArgs a{};
  a.cam_fx = cam.fx;
  a.cam_fy = cam.fy;
  a.cam_cx = cam.cx;
  a.cam_cy = cam.cy;
  a.hl_fx = hl.intrinsics.fx;
  a.hl_fy = hl.intrinsics.fy;
  a.hl_cx = hl.intrinsics.cx;
  a.hl_cy = hl.intrinsics.cy;
  a.hl_width = hl.intrinsics.width;
  a.hl_height = hl.intrinsics.height;
  std::copy(hl.extrinsics.rotation.begin(), hl.extrinsics.rotation.end(), a.rotation);
  std::copy(hl.extrinsics.translation.begin(), hl.extrinsics.translation.end(), a.translation);
  a.h_angles = hl.phi.h_angles().data();
  a.n_h = static_cast<int>(hl.phi.h_angles().size());
  a.v_angles = hl.phi.v_angles().data();
  a.n_v = static_cast<int>(hl.phi.v_angles().size());
  a.values = hl.phi.values().data();
  a.scale = 1.0;
  return a;
}

LightField project_beam(const CameraModel& cam, const HeadlightModel& hl, const DepthMap& depth) {
  cam.validate("camera");
  hl.intrinsics.validate("headlight intrinsics");
  check_extrinsics(hl.extrinsics);
  if (!depth.same_shape(cam.height, cam.width) || depth.channels != 1) {
    throw ShapeError("project_beam: depth map does not match camera dimensions");
  }
  const auto args = beam_args(cam, hl);
  std::vector<float> out(depth.pixel_count());
  kernels::parallel::project_beam(args, depth.data, {cam.height, cam.width, 1}, out);
  return LightField::adopt(cam.height, cam.width, std::move(out));
}

WarpMap build_warp(const CameraModel& cam, const HeadlightModel& hl, double plane_distance) {
  cam.validate("camera");
  hl.intrinsics.validate("headlight intrinsics");
  try {
    check_extrinsics(hl.extrinsics);
  } catch (const ModelError& e) {
    throw CalibrationError(e.what());
  }
  if (!(plane_distance > 0.0) || !std::isfinite(plane_distance)) {
    throw CalibrationError("build_warp: reference plane distance must be positive");
  }
  const auto& k = hl.intrinsics;
  WarpMap w{k.height, k.width, cam.height, cam.width,
            std::vector<float>(2 * static_cast<std::size_t>(k.height) * k.width, kInvalid)};
  const Vec3 origin = hl.extrinsics.apply_inverse({0.0, 0.0, 0.0});
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 d = rotate_inverse(hl.extrinsics, ray_direction(k, x, y));
      if (std::abs(d[2]) < 1e-12) continue;  // ray parallel to the plane
      const double s = (plane_distance - origin[2]) / d[2];
      if (!(s > 0.0)) continue;
      const Vec3 p{origin[0] + s * d[0], origin[1] + s * d[1], origin[2] + s * d[2]};
      if (!(p[2] > 0.0)) continue;
      const double u = cam.fx * p[0] / p[2] + cam.cx;
      const double v = cam.fy * p[1] / p[2] + cam.cy;
      if (!inside_centers(cam, u, v)) continue;
      const std::size_t i = 2 * (static_cast<std::size_t>(y) * k.width + x);
      w.coords[i] = static_cast<float>(u);
      w.coords[i + 1] = static_cast<float>(v);
    }
  }
  if (w.valid_count() == 0) {
    throw CalibrationError("build_warp: no headlight ray reaches the camera frame on the reference geometry");
  }
  return w;
}

WarpMap build_warp(const CameraModel& cam, const HeadlightModel& hl, const DepthMap& depth) {
  cam.validate("camera");
  hl.intrinsics.validate("headlight intrinsics");
  try {
    check_extrinsics(hl.extrinsics);
  } catch (const ModelError& e) {
    throw CalibrationError(e.what());
  }
  if (!depth.same_shape(cam.height, cam.width) || depth.channels != 1) {
    throw CalibrationError("build_warp: depth map does not match camera dimensions");
  }
  const auto& k = hl.intrinsics;
  WarpMap w{k.height, k.width, cam.height, cam.width,
            std::vector<float>(2 * static_cast<std::size_t>(k.height) * k.width, kInvalid)};
  const Vec3 origin = hl.extrinsics.apply_inverse({0.0, 0.0, 0.0});

  // Signed gap between the ray point and the surface seen by the camera at that
  // point's projection; positive once the ray has passed behind the surface.
  auto gap = [&](const Vec3& d, double s, double& u, double& v) -> std::optional<double> {
    const Vec3 p{origin[0] + s * d[0], origin[1] + s * d[1], origin[2] + s * d[2]};
    if (!(p[2] > 0.0)) return std::nullopt;
    u = cam.fx * p[0] / p[2] + cam.cx;
    v = cam.fy * p[1] / p[2] + cam.cy;
    if (!inside_centers(cam, u, v)) return std::nullopt;
    const float z = depth.at(static_cast<int>(std::lround(v)), static_cast<int>(std::lround(u)));
    if (!(z > 0.0F)) return std::nullopt;
    return p[2] - static_cast<double>(z);
  };

  constexpr int kMarchSteps = 600;
  constexpr double kNear = 0.25;
  constexpr double kFar = 400.0;
  const double growth = std::pow(kFar / kNear, 1.0 / kMarchSteps);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 d = rotate_inverse(hl.extrinsics, ray_direction(k, x, y));
      double prev_s = -1.0;
      double s = kNear;
      double u = 0;
      double v = 0;
      for (int step = 0; step <= kMarchSteps; ++step, s *= growth) {
        const auto g = gap(d, s, u, v);
        if (!g) {
          prev_s = -1.0;
          continue;
        }
        if (*g >= 0.0) {
          if (prev_s > 0.0) {
            double lo = prev_s;
            double hi = s;
            for (int it = 0; it < 40; ++it) {
              const double mid = 0.5 * (lo + hi);
              double mu = 0;
              double mv = 0;
              const auto gm = gap(d, mid, mu, mv);
              if (gm && *gm < 0.0) {
                lo = mid;
              } else {
                hi = mid;
              }
            }
            gap(d, hi, u, v);
          }
          const std::size_t i = 2 * (static_cast<std::size_t>(y) * k.width + x);
          w.coords[i] = static_cast<float>(u);
          w.coords[i + 1] = static_cast<float>(v);
          break;
        }
        prev_s = s;
      }
    }
  }
  if (w.valid_count() == 0) {
    throw CalibrationError("build_warp: no headlight ray meets the reference depth map");
  }
  return w;
}

WarpMap camera_to_headlight(const CameraModel& cam, const HeadlightModel& hl, double plane_distance) {
  cam.validate("camera");
  hl.intrinsics.validate("headlight intrinsics");
  check_extrinsics(hl.extrinsics);
  if (!(plane_distance > 0.0)) throw CalibrationError("camera_to_headlight: plane distance must be positive");
  const auto& k = hl.intrinsics;
  WarpMap w{cam.height, cam.width, k.height, k.width,
            std::vector<float>(2 * static_cast<std::size_t>(cam.height) * cam.width, kInvalid)};
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto r = ray_direction(cam, x, y);
      const Vec3 p = hl.extrinsics.apply({r[0] * plane_distance, r[1] * plane_distance, plane_distance});
      if (!(p[2] > 0.0)) continue;
      const double u = k.fx * p[0] / p[2] + k.cx;
      const double v = k.fy * p[1] / p[2] + k.cy;
      if (!inside_centers(k, u, v)) continue;
      const std::size_t i = 2 * (static_cast<std::size_t>(y) * cam.width + x);
      w.coords[i] = static_cast<float>(u);
      w.coords[i + 1] = static_cast<float>(v);
    }
  }
  return w;
}

RoundTripError warp_round_trip(const WarpMap& forward, const WarpMap& backward) {
  if (forward.height != backward.source_height || forward.width != backward.source_width ||
      forward.source_height != backward.height || forward.source_width != backward.width) {
    throw ShapeError("warp_round_trip: maps do not describe opposite directions");
  }
  RoundTripError out;
  double sum = 0.0;
  for (int y = 0; y < forward.height; ++y) {
    for (int x = 0; x < forward.width; ++x) {
      if (!forward.valid(y, x)) continue;
      const auto [u, v] = forward.at(y, x);
      const int u0 = static_cast<int>(std::floor(u));
      const int v0 = static_cast<int>(std::floor(v));
      if (u0 < 0 || v0 < 0 || u0 + 1 >= backward.width || v0 + 1 >= backward.height) continue;
      if (!backward.valid(v0, u0) || !backward.valid(v0, u0 + 1) || !backward.valid(v0 + 1, u0) ||
          !backward.valid(v0 + 1, u0 + 1)) {
        continue;
      }
      const double tu = u - u0;
      const double tv = v - v0;
      double back[2];
      for (int c = 0; c < 2; ++c) {
        const double top = backward.at(v0, u0)[c] * (1 - tu) + backward.at(v0, u0 + 1)[c] * tu;
        const double bottom = backward.at(v0 + 1, u0)[c] * (1 - tu) + backward.at(v0 + 1, u0 + 1)[c] * tu;
        back[c] = top * (1 - tv) + bottom * tv;
      }
      const double e = std::hypot(back[0] - x, back[1] - y);
      out.max_px = std::max(out.max_px, e);
      sum += e;
      ++out.samples;
    }
  }
  out.mean_px = out.samples > 0 ? sum / static_cast<double>(out.samples) : 0.0;
  return out;
}

LightField field_to_headlight(const LightField& m, const WarpMap& warp) {
  if (!m.same_shape(warp.source_height, warp.source_width)) {
    throw ShapeError("field_to_headlight: field does not match the warp's source frame");
  }
  if (warp.coords.size() != 2 * static_cast<std::size_t>(warp.height) * warp.width) {
    throw ShapeError("field_to_headlight: malformed warp");
  }
  std::vector<float> out(static_cast<std::size_t>(warp.height) * warp.width);
  kernels::parallel::bilinear_resample(m.data(), {m.height(), m.width(), 1}, warp.coords, out);
  for (float& v : out) v = std::clamp(v, 0.0F, 1.0F);
  return LightField::adopt(warp.height, warp.width, std::move(out));
}

LightField headlight_to_field(const LightField& headlight_field, const WarpMap& inverse) {
  return field_to_headlight(headlight_field, inverse);
}

// -- Calibration file ----------------------------------------------------------

Calibration parse_calibration(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError(std::string("calibration: invalid JSON: ") + e.what());
  }
  try {
    Calibration c;
    c.camera = intrinsics_from_json(j.at("camera"));
    c.headlight.intrinsics = intrinsics_from_json(j.at("headlight"));
    const auto& ex = j.at("extrinsics");
    const auto rot = ex.at("rotation").get<std::vector<double>>();
    const auto tr = ex.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) {
      throw CalibrationError("calibration: rotation needs 9 entries, translation 3");
    }
    std::copy(rot.begin(), rot.end(), c.headlight.extrinsics.rotation.begin());
    std::copy(tr.begin(), tr.end(), c.headlight.extrinsics.translation.begin());
    c.reference_plane_m = j.at("reference_plane_m").get<double>();
    c.headlight.phi = synthetic_low_beam();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError(std::string("calibration: ") + e.what());
  }
}

Calibration load_calibration(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_calibration(std::string(bytes.begin(), bytes.end()));
}

std::string calibration_to_json(const Calibration& calib) {
  nlohmann::json j;
  j["camera"] = intrinsics_json(calib.camera);
  j["headlight"] = intrinsics_json(calib.headlight.intrinsics);
  j["extrinsics"] = {{"rotation", calib.headlight.extrinsics.rotation},
                     {"translation", calib.headlight.extrinsics.translation}};
  j["reference_plane_m"] = calib.reference_plane_m;
  return j.dump(2);
}

}  // namespace lidas
