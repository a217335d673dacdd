#include <doctest.h>

#include <cmath>
#include <random>

#include "lidas/photometry.hpp"

using namespace lidas;

namespace {

CameraModel toy_cam() { return {240, 240, 79.5, 28, 160, 80}; }

DepthMap flat_wall(const CameraModel& cam, float z) { return DepthMap(cam.height, cam.width, 1, z); }

}  // namespace

TEST_CASE("angular table validation") {
  CHECK_THROWS_AS(AngularIntensityTable({0, 0}, {0, 1}, {1, 1, 1, 1}), ModelError);
  CHECK_THROWS_AS(AngularIntensityTable({0, 1}, {0, 1}, {1, 1, 1}), ModelError);
  CHECK_THROWS_AS(AngularIntensityTable({0, 1}, {0, 1}, {1, -1, 1, 1}), ModelError);
  CHECK_THROWS_AS(AngularIntensityTable::parse_csv("v\\h,0,1\n0,1\n"), ModelError);
}

TEST_CASE("table sampling, power and CSV round trip") {
  const AngularIntensityTable t({-1, 0, 1}, {-1, 1}, {0, 1, 0, 0, 1, 0});
  CHECK(t.sample(0, 0) == doctest::Approx(1.0));
  CHECK(t.sample(0.5, 0.3) == doctest::Approx(0.5));
  CHECK(t.sample(1.5, 0) == 0.0);
  CHECK(t.sample(0, -2) == 0.0);
  CHECK(AngularIntensityTable::uniform(10, 5).integrated_power() == doctest::Approx(200.0));
  CHECK(t.scaled(2.0).peak() == doctest::Approx(2.0));
  const AngularIntensityTable lb = synthetic_low_beam();
  const AngularIntensityTable back = AngularIntensityTable::parse_csv(lb.to_csv());
  CHECK(back.values() == lb.values());
  CHECK(back.h_angles() == lb.h_angles());
  CHECK(back.v_angles() == lb.v_angles());
}

TEST_CASE("synthetic low beam has an asymmetric cutoff") {
  const AngularIntensityTable lb = synthetic_low_beam();
  CHECK(lb.peak() == doctest::Approx(1.0));
  // Half a degree above the horizon: dark on the left, lit on the right.
  const double left = lb.sample(-8.0, -0.5);
  const double right = lb.sample(8.0, -0.5);
  CHECK(left < 0.02);
  CHECK(right > 10.0 * left);
  // Below the cutoff both sides are lit.
  CHECK(lb.sample(-8.0, 2.0) > 0.3);
  CHECK(lb.covers(-20, 20, -5, 5));
}

TEST_CASE("synthetic high beam carries the requested power ratio") {
  const double lb = synthetic_low_beam().integrated_power();
  const AngularIntensityTable hb = synthetic_high_beam(1.8);
  CHECK(hb.peak() == doctest::Approx(1.0));
  CHECK(hb.integrated_power() / lb == doctest::Approx(1.8).epsilon(1e-3));
  CHECK_THROWS_AS(synthetic_high_beam(500.0), ModelError);
}

TEST_CASE("default headlight frustum") {
  const HeadlightModel hl = default_headlight(synthetic_low_beam());
  const auto fov = hl.field_of_view();
  CHECK(fov[0] == doctest::Approx(-20.0).epsilon(0.01));
  CHECK(fov[1] == doctest::Approx(20.0).epsilon(0.01));
  CHECK(fov[2] == doctest::Approx(-5.0).epsilon(0.01));
  CHECK(fov[3] == doctest::Approx(5.0).epsilon(0.01));
  CHECK(hl.extrinsics.apply({0, 0.6, 1.8}) == std::array<double, 3>{0, 0, 0});
}

TEST_CASE("rigid transform inverse and orthonormality") {
  RigidTransform t;
  const double a = 0.3;
  t.rotation = {std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a)};
  t.translation = {0.1, -0.2, 0.5};
  const std::array<double, 3> p{1.0, 2.0, 3.0};
  const auto back = t.apply_inverse(t.apply(p));
  for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(p[i]).epsilon(1e-12));
  CHECK(t.orthonormality_error() < 1e-12);
  CHECK_FALSE(t.is_identity());
  CHECK(RigidTransform::identity().is_identity());
}

TEST_CASE("beam projection respects depth validity and range") {
  const CameraModel cam = toy_cam();
  const HeadlightModel hl = default_headlight(synthetic_low_beam());
  DepthMap depth = flat_wall(cam, 25.0F);
  depth.at(40, 80) = 0.0F;
  depth.at(41, 80) = std::nanf("");
  const LightField m = project_beam(cam, hl, depth);
  CHECK(m.at(40, 80) == 0.0F);
  CHECK(m.at(41, 80) == 0.0F);
  for (float v : m.data()) CHECK((v >= 0.0F && v <= 1.0F));
  CHECK(m.mean() > 0.0);
  CHECK_THROWS_AS(project_beam(cam, hl, DepthMap(10, 10, 1, 1.0F)), ShapeError);
}

TEST_CASE("plane warp round trip stays within half a pixel") {
  const CameraModel cam = toy_cam();
  const HeadlightModel hl = default_headlight(synthetic_low_beam());
  for (double plane : {8.0, 20.0, 60.0}) {
    CAPTURE(plane);
    const WarpMap back = build_warp(cam, hl, plane);
    const WarpMap fwd = camera_to_headlight(cam, hl, plane);
    const RoundTripError e = warp_round_trip(fwd, back);
    CHECK(e.samples > 1000);
    CHECK(e.max_px <= 0.5);
  }
}

TEST_CASE("depth-marched warp agrees with the plane warp on a wall") {
  const CameraModel cam = toy_cam();
  const HeadlightModel hl = default_headlight(synthetic_low_beam());
  const WarpMap plane = build_warp(cam, hl, 20.0);
  const WarpMap marched = build_warp(cam, hl, flat_wall(cam, 20.0F));
  double worst = 0.0;
  std::size_t both = 0;
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < plane.width; ++x) {
      if (!plane.valid(y, x) || !marched.valid(y, x)) continue;
      ++both;
      worst = std::max(worst, static_cast<double>(std::hypot(plane.at(y, x)[0] - marched.at(y, x)[0], plane.at(y, x)[1] - marched.at(y, x)[1])));
    }
  }
  CHECK(both > 0.9 * plane.valid_count());
  CHECK(worst < 0.05);
}

TEST_CASE("field warping between frames") {
  const CameraModel cam = toy_cam();
  const HeadlightModel hl = default_headlight(synthetic_low_beam());
  const WarpMap back = build_warp(cam, hl, 20.0);
  const WarpMap fwd = camera_to_headlight(cam, hl, 20.0);
  const LightField ones(cam.height, cam.width, 1.0F);
  const LightField hl_field = field_to_headlight(ones, back);
  CHECK(hl_field.height() == 80);
  CHECK(hl_field.width() == 320);
  // Interior warped pixels carry the constant exactly; invalid ones read 0.
  std::size_t lit = 0;
  for (float v : hl_field.data()) {
    CHECK((v == 0.0F || v == doctest::Approx(1.0F)));
    lit += v > 0.5F ? 1 : 0;
  }
  CHECK(lit > 0);
  const LightField cam_field = headlight_to_field(LightField(80, 320, 0.5F), fwd);
  CHECK(cam_field.height() == cam.height);
  CHECK_THROWS_AS(field_to_headlight(LightField(3, 3, 0.0F), back), ShapeError);
}

TEST_CASE("calibration file round trip and rejection") {
  Calibration c;
  c.camera = toy_cam();
  c.headlight = default_headlight(synthetic_low_beam());
  c.reference_plane_m = 15.0;
  const Calibration back = parse_calibration(calibration_to_json(c));
  CHECK(back.camera == c.camera);
  CHECK(back.headlight.intrinsics == c.headlight.intrinsics);
  CHECK(back.headlight.extrinsics == c.headlight.extrinsics);
  CHECK(back.reference_plane_m == 15.0);
  CHECK_THROWS_AS(parse_calibration("{not json"), CalibrationError);
  CHECK_THROWS_AS(parse_calibration("{}"), CalibrationError);

  HeadlightModel skew = c.headlight;
  skew.extrinsics.rotation[1] = 0.5;
  CHECK_THROWS_AS(build_warp(c.camera, skew, 20.0), CalibrationError);
  CHECK_THROWS_AS(build_warp(c.camera, c.headlight, 0.0), CalibrationError);
  HeadlightModel away = c.headlight;
  away.extrinsics.rotation = {-1, 0, 0, 0, 1, 0, 0, 0, -1};  // facing backwards
  CHECK_THROWS_AS(build_warp(c.camera, away, 20.0), CalibrationError);
}
