#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/photometry.hpp"
#include "lidas/scorer.hpp"

namespace lidas {

// -- Budget ------------------------------------------------------------------

struct BudgetResult {
  LightField field;
  /// At least one pixel hit 1 after scaling, so the mean falls short of eta.
  bool clipped = false;
  /// Input mean was below epsilon; the field passes through (near) zero.
  bool underfilled = false;
};

/// Scales m by eta / max(epsilon, mean(m)) and clips to [0, 1].
BudgetResult normalize_budget(const LightField& m, double eta, double epsilon = 1e-6);

/// Euclidean projection onto {0 <= M <= 1, mean(M) <= eta}: clamp, then
/// subtract the smallest uniform shift that meets the budget.
LightField project_to_budget(std::span<const double> values, int height, int width, double eta);

struct BudgetSchedule {
  double eta_final = 1.0;
  double alpha = 0.1;
  int e_max = 1;

  void validate() const;
};

/// eta(e) = eta_final * (alpha + (1 - alpha) * e / e_max).
double scheduled_eta(const BudgetSchedule& schedule, double epoch);

// -- Field updates -------------------------------------------------------------

struct InitOptions {
  double eta = 0.5;
  double black_prob = 0.5;
  int block_min = 20;
  int block_max = 80;
  std::uint64_t seed = 0;
};

/// Random starting field: all-black with probability black_prob, otherwise
/// blockwise-constant uniform noise with one block side drawn from
/// [block_min, block_max], normalized to eta.
LightField init_field(int height, int width, const InitOptions& options);

/// min(max(prev + delta, 0), 1).
LightField residual_update(const LightField& prev, const ResidualField& delta);

/// Normalized (x, y) coordinates in [0, 1], two channels.
Raster<float> coordinate_channels(int height, int width);

// -- Policies -----------------------------------------------------------------

struct PolicyInput {
  const Image& image;             // observation
  const LightField& prev_field;   // field that produced the current frame
  const Raster<float>& coords;    // coordinate channels
};

/// Maps an observation to a raw residual in [-1, 1].
class Policy {
 public:
  virtual ~Policy() = default;
  virtual ResidualField propose(const PolicyInput& input) = 0;
  virtual std::string name() const = 0;
  /// False when the policy keeps per-scene state and must not be shared across workers.
  virtual bool shareable() const { return false; }
};

/// Proposes a zero residual.
class IdentityPolicy : public Policy {
 public:
  ResidualField propose(const PolicyInput& input) override;
  std::string name() const override { return "identity"; }
  bool shareable() const override { return true; }
};

using ScoreFn = std::function<double(const Image&)>;
using GradientScoreFn = std::function<std::pair<double, ImageGradient>(const Image&)>;

ScoreFn make_score_fn(const Aggregate& scorer, std::span<const Annotation> annotations);
GradientScoreFn make_gradient_fn(const Aggregate& scorer, std::span<const Annotation> annotations);

/// One normalized gradient-ascent step per frame, computed on the observed
/// image and pushed through the relighting backward pass.
class GradientPolicy : public Policy {
 public:
  GradientPolicy(const ScenePair& pair, GradientScoreFn score, double step_size = 0.1);
  ResidualField propose(const PolicyInput& input) override;
  std::string name() const override { return "gradient"; }

 private:
  const ScenePair& pair_;
  GradientScoreFn score_;
  double step_size_;
};

// -- Sequential refinement -------------------------------------------------------

struct RefinementConfig {
  int n_steps = 40;
  int k_scored = 5;
  double epsilon = 1e-6;
  int latency_frames = 1;
  std::uint64_t seed = 0;
  /// Also score the field produced by the last step.
  bool score_final = true;

  void validate() const;
};

struct TrajectoryStep {
  int t = 0;
  LightField field;
  Image image;
  std::optional<ScoreReport> score;
  bool clipped = false;
  bool underfilled = false;
};

struct Trajectory {
  RefinementConfig config;
  double eta = 0.0;
  std::string policy;
  /// t = 0..N; entry N holds the final field and its relit frame.
  std::vector<TrajectoryStep> steps;
  std::vector<int> scored_steps;

  const LightField& final_field() const { return steps.back().field; }
};

/// Step 0 plus k-1 distinct steps drawn uniformly from 1..n-1, sorted.
std::vector<int> sample_scored_steps(int n_steps, int k_scored, std::uint64_t seed);

Trajectory refine(const ScenePair& pair, Policy& policy, const ScoreFn& score,
                  const RefinementConfig& config, double eta, const LightField& init);

void write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory);

// -- Built-in optimizers ---------------------------------------------------------

struct GradientOptions {
  int steps = 100;
  double step_size = 0.25;
  double min_step = 1e-4;
  std::optional<LightField> init;
};

struct OptimizeResult {
  LightField field;
  double score = 0.0;
  double initial_score = 0.0;
  /// Score after every accepted move, starting with the initial score.
  std::vector<double> accepted_scores;
  int evaluations = 0;
};

/// Projected gradient ascent on score(relight(pair, M)) under mean(M) <= eta.
/// Moves are taken along the max-normalized gradient; a non-improving move is
/// rejected and halves the step.
OptimizeResult optimize_gradient(const ScenePair& pair, const GradientScoreFn& score, double eta,
                                 const GradientOptions& options = {});

struct BlackBoxOptions {
  int iterations = 200;
  int block_size = 8;
  double perturbation = 0.1;
  std::uint64_t seed = 0;
  double epsilon = 1e-6;
  std::optional<LightField> init;
};

/// Blockwise simultaneous-perturbation search: every iteration draws a random
/// block grid offset and a Rademacher sign per block, evaluates M +/- c*delta
/// (each renormalized to eta) and keeps the better one if it improves.
OptimizeResult optimize_blackbox(const ScenePair& pair, const ScoreFn& score, double eta,
                                 const BlackBoxOptions& options = {});

// -- Baselines -------------------------------------------------------------------

enum class BaselineKind { uniform, no_ego, low_beam, high_beam, static_average };

BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(BaselineKind kind);

struct BaselineContext {
  int height = 0;
  int width = 0;
  /// Absolute mean-intensity budget for uniform/static.
  std::optional<double> budget;
  const CameraModel* camera = nullptr;
  const HeadlightModel* low_beam = nullptr;
  const HeadlightModel* high_beam = nullptr;
  const DepthMap* depth = nullptr;
  std::span<const LightField> collection;
  double epsilon = 1e-6;
};

LightField baseline_field(BaselineKind kind, const BaselineContext& ctx);

}  // namespace lidas
