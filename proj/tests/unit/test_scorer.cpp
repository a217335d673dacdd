#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "lidas/relight.hpp"
#include "lidas/scorer.hpp"
#include "oracles.hpp"

using namespace lidas;

namespace {

// End-to-end gradient of score(relight(pair, M)) with respect to M.
std::vector<double> field_gradient(const ScenePair& p, const ScoreGradient& sg) {
  return relight_gradient(p, sg.gradient).data;
}

}  // namespace

TEST_CASE("contrast score matches the oracle value") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const ScenePair p = fixture::random_pair(16, 16, rng, 3);
    const Image im = fixture::random_image(16, 16, 3, rng);
    const double got = contrast_score(im, p.annotations).report.total;
    CHECK(got == doctest::Approx(oracle::contrast(oracle::from_image(im), p.annotations)).epsilon(1e-9));
    const double e = exposure_score(im).report.total;
    CHECK(e == doctest::Approx(oracle::exposure(oracle::from_image(im))).epsilon(1e-9));
  }
}

TEST_CASE("contrast gradient through relight matches finite differences") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const ScenePair p = fixture::random_pair(16, 16, rng, 2);
    const LightField m = fixture::random_field(16, 16, rng, 0.1, 0.9);
    const auto full = oracle::from_image(p.i_full);
    const auto off = oracle::from_image(p.i_off);
    auto f = [&](const std::vector<double>& md) { return oracle::contrast(oracle::relight(full, off, md), p.annotations); };
    const auto fd = oracle::finite_difference(f, {m.data().begin(), m.data().end()}, 1e-5);
    const auto g = field_gradient(p, contrast_score(relight(p, m), p.annotations));
    CHECK(oracle::relative_error(g, fd) <= 1e-3);
  }
}

TEST_CASE("exposure gradient through relight matches finite differences") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const ScenePair p = fixture::random_pair(16, 16, rng, 1);
    const LightField m = fixture::random_field(16, 16, rng, 0.1, 0.9);
    const auto full = oracle::from_image(p.i_full);
    const auto off = oracle::from_image(p.i_off);
    auto f = [&](const std::vector<double>& md) { return oracle::exposure(oracle::relight(full, off, md)); };
    const auto fd = oracle::finite_difference(f, {m.data().begin(), m.data().end()}, 1e-5);
    const auto g = field_gradient(p, exposure_score(relight(p, m)));
    CHECK(oracle::relative_error(g, fd) <= 1e-3);
  }
}

TEST_CASE("saturation penalty lowers the score of blown-out pixels") {
  const Image dim(8, 8, 3, 0.5F);
  const Image bright(8, 8, 3, 1.0F);
  const std::vector<Annotation> none;
  CHECK(contrast_score(dim, none).report.total == 0.0);
  CHECK(contrast_score(bright, none).report.total == doctest::Approx(-0.05));
  ContrastParams off;
  off.lambda_sat = 0.0;
  CHECK(contrast_score(bright, none, off).report.total == 0.0);
}

TEST_CASE("degenerate boxes are skipped with a warning") {
  const Image im(10, 10, 3, 0.4F);
  std::vector<Annotation> anns(2);
  anns[0].box = {3.2, 3.2, 3.4, 3.4};  // no pixel center inside
  anns[1].box = {0, 0, 10, 10};          // no room for a ring
  const ScoreGradient s = contrast_score(im, anns);
  CHECK(s.report.warnings.size() == 2);
  CHECK(s.report.total == 0.0);
  for (double g : s.gradient.data) CHECK(g == 0.0);
}

TEST_CASE("box regions follow pixel centers") {
  const BoxRegions r = box_regions({1.0, 1.0, 3.0, 2.0}, 6, 6, 0.0);
  CHECK(r.interior == std::vector<std::size_t>{7, 8});
  CHECK(r.ring.empty());
  const BoxRegions w = box_regions({2.0, 2.0, 4.0, 4.0}, 6, 6, 0.5);
  CHECK(w.interior.size() == 4);
  CHECK(w.ring.size() == 16 - 4);
}

TEST_CASE("scorer spec parsing") {
  const auto specs = parse_scorer_specs("contrast:2,exposure:0.5");
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].kind == ScorerKind::contrast_proxy);
  CHECK(specs[0].weight == 2.0);
  CHECK(specs[1].kind == ScorerKind::exposure_proxy);
  CHECK(specs[1].weight == 0.5);
  CHECK(parse_scorer_specs("external")[0].tasks == std::vector<std::string>{"detection"});
  CHECK_THROWS_AS(parse_scorer_specs(""), ConfigError);
  CHECK_THROWS_AS(parse_scorer_specs("magic"), ConfigError);
  CHECK_THROWS_AS(parse_scorer_specs("contrast:x"), ConfigError);
}

TEST_CASE("aggregate is the weighted sum of its parts") {
  std::mt19937_64 rng(34);
  const ScenePair p = fixture::random_pair(12, 12, rng, 2);
  const Image im = fixture::random_image(12, 12, 3, rng);
  const Aggregate agg(parse_scorer_specs("contrast:2,exposure:0.5"));
  CHECK(agg.differentiable());
  const ScoreGradient c = contrast_score(im, p.annotations);
  const ScoreGradient e = exposure_score(im);
  const ScoreGradient both = agg.evaluate_with_gradient(im, p.annotations);
  CHECK(both.report.total == doctest::Approx(2 * c.report.total + 0.5 * e.report.total));
  CHECK(agg.evaluate(im, p.annotations).total == doctest::Approx(both.report.total));
  for (std::size_t i = 0; i < both.gradient.data.size(); ++i) {
    CHECK(both.gradient.data[i] == doctest::Approx(2 * c.gradient.data[i] + 0.5 * e.gradient.data[i]));
  }
  REQUIRE(both.report.find("exposure") != nullptr);
  CHECK(both.report.find("detection") == nullptr);
}

TEST_CASE("aggregate rejects bad configurations") {
  CHECK_THROWS_AS(Aggregate({}), ConfigError);
  auto specs = parse_scorer_specs("contrast");
  specs[0].weight = -1.0;
  CHECK_THROWS_AS(Aggregate{specs}, ConfigError);
  CHECK_THROWS_AS(Aggregate(parse_scorer_specs("external")), ConfigError);
  ExposureParams bad;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(exposure_score(Image(2, 2, 3), bad), ConfigError);
}
