#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lidas/dataset.hpp"
#include "lidas/metrics.hpp"
#include "lidas/photometry.hpp"
#include "lidas/policy.hpp"
#include "lidas/proxy.hpp"
#include "lidas/scorer.hpp"

namespace lidas {

enum class Method { uniform, no_ego, low_beam, high_beam, static_average, optimized, blackbox, refine };

Method parse_method(const std::string& name);
std::string to_string(Method m);
/// Methods whose field does not depend on the budget; they run once.
bool fixed_power(Method m);

struct ExperimentConfig {
  std::vector<Method> methods{Method::uniform, Method::low_beam, Method::optimized};
  /// Budgets relative to the low-beam field of each scene.
  std::vector<double> powers{0.6, 1.0};
  GradientOptions gradient;
  BlackBoxOptions blackbox;
  RefinementConfig refine;
  double policy_step = 0.1;
  std::vector<double> band_edges = default_band_edges();
  ProxyDetectorParams detector;
  ProxySegmenterParams segmenter;
  std::uint64_t seed = 0;
  /// Scene-level workers; 0 uses the OpenMP default.
  int workers = 0;
};

/// Scenes plus the shared rig they were captured with.
struct ExperimentInput {
  std::vector<std::string> ids;
  std::vector<ScenePair> scenes;
  CameraModel camera;
  HeadlightModel low_beam;
  HeadlightModel high_beam;
};

ExperimentInput experiment_input(const ToyCorpus& corpus);
ExperimentInput experiment_input(const Dataset& dataset);

struct SceneRow {
  std::string method;
  std::optional<double> power;  // nominal; absent for fixed-power methods
  std::string scene;
  bool ok = false;
  std::string reason;
  double measured_power = 0.0;
  double score = 0.0;
  MatchCounts counts;  // IoU 0.5
};

/// One table row per (method, power).
struct MetricsReport {
  std::string method;
  std::optional<double> power;
  double measured_power = 0.0;  // corpus mean
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map50_90 = 0.0;
  std::optional<double> miou;  // when label maps are present
  std::optional<double> macc;
  std::vector<BandMetrics> bands;
  double mean_score = 0.0;
  int scenes = 0;
  int failed = 0;
  double elapsed_ms = 0.0;  // wall clock; kept out of the deterministic outputs
};

struct ExperimentReport {
  std::vector<MetricsReport> table;
  std::vector<SceneRow> rows;
  std::vector<double> band_edges;
};

/// Evaluates every (method, power, scene) cell. A failing cell is recorded in
/// its row and skipped by the aggregates; the run continues.
ExperimentReport run_experiment(const ExperimentInput& input, const Aggregate& scorer, const ExperimentConfig& config);

const MetricsReport* find_row(const ExperimentReport& report, Method method, std::optional<double> power);

/// metrics.csv, metrics.json, scenes.csv (byte-stable) and timing.json.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);
std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
std::string scenes_csv(const ExperimentReport& report);
/// Human-readable table from a metrics.json document.
std::string format_table(const std::string& metrics_json);

}  // namespace lidas
