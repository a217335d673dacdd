#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "lidas/relight.hpp"
#include "oracles.hpp"

using namespace lidas;

TEST_CASE("full and zero fields reproduce the renders") {
  std::mt19937_64 rng(21);
  const ScenePair p = fixture::random_pair(12, 17, rng);
  CHECK(relight(p, LightField(12, 17, 1.0F)) == p.i_full);
  CHECK(relight(p, LightField(12, 17, 0.0F)) == p.i_off);
}

TEST_CASE("relight matches the double-precision oracle") {
  std::mt19937_64 rng(22);
  const ScenePair p = fixture::random_pair(9, 11, rng);
  const LightField m = fixture::random_field(9, 11, rng);
  const Image out = relight(p, m);
  const std::vector<double> md(m.data().begin(), m.data().end());
  const auto ref = oracle::relight(oracle::from_image(p.i_full), oracle::from_image(p.i_off), md);
  for (std::size_t i = 0; i < ref.v.size(); ++i) CHECK(std::abs(out.data()[i] - ref.v[i]) <= 1e-6);
}

TEST_CASE("relight is affine in the field") {
  std::mt19937_64 rng(23);
  const ScenePair p = fixture::random_pair(10, 10, rng);
  const LightField a = fixture::random_field(10, 10, rng);
  const LightField b = fixture::random_field(10, 10, rng);
  for (double t : {0.0, 0.25, 0.5, 0.9}) {
    std::vector<float> mix(100);
    for (int i = 0; i < 100; ++i) mix[i] = static_cast<float>(t * a.data()[i] + (1 - t) * b.data()[i]);
    const Image lhs = relight(p, LightField(10, 10, mix));
    const Image ra = relight(p, a);
    const Image rb = relight(p, b);
    for (std::size_t i = 0; i < lhs.data().size(); ++i) {
      CHECK(std::abs(lhs.data()[i] - (t * ra.data()[i] + (1 - t) * rb.data()[i])) <= 1e-6);
    }
  }
}

TEST_CASE("relight rejects mismatched fields") {
  std::mt19937_64 rng(24);
  const ScenePair p = fixture::random_pair(6, 6, rng);
  CHECK_THROWS_AS(relight(p, LightField(6, 5, 0.5F)), ShapeError);
  CHECK_THROWS_AS(relight_gradient(p, ImageGradient(6, 6, 1)), ShapeError);
}

TEST_CASE("relight gradient matches finite differences") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    const ScenePair p = fixture::random_pair(16, 16, rng);
    ImageGradient up(16, 16, 3);
    for (double& u : up.data) u = std::uniform_real_distribution<double>(-1, 1)(rng);
    const LightField m = fixture::random_field(16, 16, rng, 0.1, 0.9);
    const auto full = oracle::from_image(p.i_full);
    const auto off = oracle::from_image(p.i_off);
    auto loss = [&](const std::vector<double>& md) {
      const auto im = oracle::relight(full, off, md);
      double s = 0.0;
      for (std::size_t i = 0; i < im.v.size(); ++i) s += up.data[i] * im.v[i];
      return s;
    };
    const std::vector<double> md(m.data().begin(), m.data().end());
    const auto fd = oracle::finite_difference(loss, md, 1e-5);
    const FieldGradient g = relight_gradient(p, up);
    CHECK(oracle::relative_error(g.data, fd) <= 1e-3);
  }
}

TEST_CASE("darken-only never brightens") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    const Image lb = fixture::random_image(5, 7, 3, rng);
    const LightField m_lb = fixture::random_field(5, 7, rng);
    const LightField m = fixture::random_field(5, 7, rng);
    const DarkenResult r = darken_only(lb, m_lb, m);
    for (std::size_t i = 0; i < lb.data().size(); ++i) CHECK(r.image.data()[i] <= lb.data()[i]);
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 7; ++x) {
        const double want = 1.0 - std::max(m_lb.at(y, x) - m.at(y, x), 0.0F);
        CHECK(r.field.at(y, x) == doctest::Approx(want).epsilon(1e-6));
      }
    }
  }
  // A request at or above the low beam leaves the capture untouched.
  const Image lb(2, 2, 1, 0.6F);
  CHECK(darken_only(lb, LightField(2, 2, 0.3F), LightField(2, 2, 0.8F)).image == lb);
}
