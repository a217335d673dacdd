#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lidas/experiment.hpp"
#include "lidas/kernels.hpp"
#include "lidas/relight.hpp"

using namespace lidas;
namespace fs = std::filesystem;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.methods = {Method::no_ego, Method::low_beam, Method::uniform, Method::optimized, Method::static_average,
                 Method::blackbox, Method::refine};
  cfg.powers = {0.6};
  cfg.gradient.steps = 8;
  cfg.blackbox.iterations = 4;
  cfg.refine.n_steps = 3;
  cfg.refine.k_scored = 2;
  cfg.seed = 5;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : {Method::uniform, Method::no_ego, Method::low_beam, Method::high_beam, Method::static_average,
                   Method::optimized, Method::blackbox, Method::refine}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("best"), ConfigError);
  CHECK(fixed_power(Method::low_beam));
  CHECK_FALSE(fixed_power(Method::uniform));
}

TEST_CASE("no-ego row equals evaluating the unlit renders") {
  const ToyCorpus corpus = generate_toy_corpus(6, 3);
  const ExperimentInput input = experiment_input(corpus);
  const Aggregate scorer(parse_scorer_specs("contrast"));
  ExperimentConfig cfg;
  cfg.methods = {Method::no_ego};
  const ExperimentReport r = run_experiment(input, scorer, cfg);
  const MetricsReport* row = find_row(r, Method::no_ego, std::nullopt);
  REQUIRE(row != nullptr);
  std::vector<ImageDetections> images;
  double score = 0.0;
  for (const auto& s : corpus.scenes) {
    images.push_back({proxy_detect(s.i_off, s.annotations, s.distractors), s.annotations});
    score += contrast_score(s.i_off, s.annotations).report.total;
  }
  const DetectionMetrics dm = detection_metrics(images);
  CHECK(row->map50 == dm.map50);
  CHECK(row->map50_90 == dm.map50_90);
  CHECK(row->measured_power == 0.0);
  CHECK(row->mean_score == doctest::Approx(score / 6));
  CHECK(row->scenes == 6);
}

TEST_CASE("reports are identical across worker counts") {
  const ToyCorpus corpus = generate_toy_corpus(5, 9);
  const ExperimentInput input = experiment_input(corpus);
  const Aggregate scorer(parse_scorer_specs("contrast"));
  ExperimentConfig one = quick_config();
  one.workers = 1;
  ExperimentConfig three = quick_config();
  three.workers = 3;
  const ExperimentReport a = run_experiment(input, scorer, one);
  const ExperimentReport b = run_experiment(input, scorer, three);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(b));
  CHECK(scenes_csv(a) == scenes_csv(b));
  const auto* opt = find_row(a, Method::optimized, 0.6);
  const auto* uni = find_row(a, Method::uniform, 0.6);
  REQUIRE(opt);
  REQUIRE(uni);
  CHECK(opt->measured_power == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(uni->measured_power == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(opt->mean_score >= uni->mean_score);
  CHECK(find_row(a, Method::static_average, 0.6) != nullptr);
  CHECK(find_row(a, Method::uniform, 1.0) == nullptr);
}

TEST_CASE("failing cells are recorded and skipped") {
  ToyCorpus corpus = generate_toy_corpus(3, 4);
  corpus.scenes[1].depth.reset();
  const ExperimentInput input = experiment_input(corpus);
  const Aggregate scorer(parse_scorer_specs("contrast"));
  ExperimentConfig cfg;
  cfg.methods = {Method::uniform};
  cfg.powers = {0.6, 500.0};
  const ExperimentReport r = run_experiment(input, scorer, cfg);
  const auto* ok = find_row(r, Method::uniform, 0.6);
  REQUIRE(ok);
  CHECK(ok->scenes == 2);
  CHECK(ok->failed == 1);
  const auto* over = find_row(r, Method::uniform, 500.0);
  REQUIRE(over);
  CHECK(over->scenes == 0);
  CHECK(over->failed == 3);
  bool depth_reason = false;
  bool budget_reason = false;
  for (const auto& row : r.rows) {
    if (row.ok) continue;
    depth_reason |= row.reason.find("depth") != std::string::npos;
    budget_reason |= row.reason.find("exceeds") != std::string::npos;
  }
  CHECK(depth_reason);
  CHECK(budget_reason);
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["failures"].size() == 4);
}

TEST_CASE("experiment input validation") {
  const Aggregate scorer(parse_scorer_specs("contrast"));
  ExperimentInput empty;
  CHECK_THROWS_AS(run_experiment(empty, scorer, ExperimentConfig{}), ConfigError);
  const ExperimentInput input = experiment_input(generate_toy_corpus(1, 1));
  ExperimentConfig none;
  none.methods.clear();
  CHECK_THROWS_AS(run_experiment(input, scorer, none), ConfigError);
  ExperimentConfig negative;
  negative.powers = {-1.0};
  CHECK_THROWS_AS(run_experiment(input, scorer, negative), ConfigError);
  CHECK_THROWS_AS(experiment_input(Dataset{}), ConfigError);
}

TEST_CASE("report files") {
  const ExperimentInput input = experiment_input(generate_toy_corpus(3, 2));
  const Aggregate scorer(parse_scorer_specs("contrast"));
  ExperimentConfig cfg;
  cfg.methods = {Method::low_beam, Method::high_beam, Method::uniform};
  cfg.powers = {1.0};
  const ExperimentReport r = run_experiment(input, scorer, cfg);
  const fs::path dir = fs::temp_directory_path() / "lidas_unit" / "report";
  fs::remove_all(dir);
  write_report(dir, r);
  for (const char* f : {"metrics.csv", "metrics.json", "scenes.csv", "timing.json"}) CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "metrics.csv") == report_csv(r));
  CHECK(slurp(dir / "metrics.json").find("elapsed") == std::string::npos);
  CHECK(slurp(dir / "timing.json").find("elapsed") != std::string::npos);
  const std::string table = format_table(slurp(dir / "metrics.json"));
  CHECK(table.find("low_beam") != std::string::npos);
  CHECK(table.find("high_beam") != std::string::npos);

  const auto* lb = find_row(r, Method::low_beam, std::nullopt);
  const auto* hb = find_row(r, Method::high_beam, std::nullopt);
  REQUIRE(lb);
  REQUIRE(hb);
  CHECK(lb->measured_power == doctest::Approx(1.0));
  CHECK(hb->measured_power > 1.0);
  REQUIRE(lb->miou.has_value());
  CHECK(*lb->miou > 0.0);
  CHECK(lb->bands.size() == 4);
}
