#include "lidas/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lidas/image_io.hpp"
#include "lidas/kernels.hpp"
#include "lidas/relight.hpp"

namespace lidas {

namespace {

void check_eta(double eta, const char* what) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw BudgetError(std::string(what) + ": budget eta must lie in (0, 1], got " + std::to_string(eta));
  }
}

LightField uniform_field(int h, int w, double value) {
  return LightField(h, w, static_cast<float>(std::clamp(value, 0.0, 1.0)));
}

struct Evaluated {
  double score;
  FieldGradient grad;
};

}  // namespace

// -- Budget ------------------------------------------------------------------

BudgetResult normalize_budget(const LightField& m, double eta, double epsilon) {
  check_eta(eta, "normalize_budget");
  if (!(epsilon > 0.0)) throw BudgetError("normalize_budget: epsilon must be positive");
  const double mean = m.mean();
  const double scale = eta / std::max(epsilon, mean);
  std::vector<float> out(m.pixel_count());
  const bool clipped = kernels::parallel::scale_clip(m.data(), scale, out);
  return {LightField::adopt(m.height(), m.width(), std::move(out)), clipped, mean < epsilon};
}

LightField project_to_budget(std::span<const double> values, int height, int width, double eta) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("project_to_budget: value count does not match dimensions");
  }
  check_eta(eta, "project_to_budget");
  const double n = static_cast<double>(values.size());
  auto shifted_mean = [&](double tau) {
    double s = 0.0;
    for (double v : values) s += std::clamp(v - tau, 0.0, 1.0);
    return s / n;
  };
  double tau = 0.0;
  if (shifted_mean(0.0) > eta) {
    double lo = 0.0;
    double hi = std::max(1.0, *std::max_element(values.begin(), values.end()));
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (shifted_mean(mid) > eta) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    tau = hi;
  }
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(std::clamp(values[i] - tau, 0.0, 1.0));
  }
  return LightField::adopt(height, width, std::move(out));
}

void BudgetSchedule::validate() const {
  if (!(eta_final > 0.0 && eta_final <= 1.0)) throw BudgetError("schedule: eta_final must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw BudgetError("schedule: alpha must lie in (0, 1]");
  if (e_max < 1) throw BudgetError("schedule: e_max must be >= 1");
}

double scheduled_eta(const BudgetSchedule& schedule, double epoch) {
  schedule.validate();
  if (!(epoch >= 0.0 && epoch <= schedule.e_max)) {
    throw ValueError("scheduled_eta: epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(schedule.e_max) + "]");
  }
  return schedule.eta_final * (schedule.alpha + (1.0 - schedule.alpha) * epoch / schedule.e_max);
}

// -- Field updates -------------------------------------------------------------

LightField init_field(int height, int width, const InitOptions& options) {
  if (options.eta > 1.0 || !(options.eta >= 0.0)) {
    throw BudgetError("init_field: budget eta must lie in [0, 1], got " + std::to_string(options.eta));
  }
  if (!(options.black_prob >= 0.0 && options.black_prob <= 1.0)) {
    throw ConfigError("init_field: black probability must lie in [0, 1]");
  }
  if (options.block_min < 1 || options.block_min > options.block_max) {
    throw ConfigError("init_field: block range must satisfy 1 <= lo <= hi");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < options.black_prob || options.eta == 0.0) return LightField(height, width, 0.0F);

  const int side = std::uniform_int_distribution<int>(options.block_min, options.block_max)(rng);
  const int bx = (width + side - 1) / side;
  const int by = (height + side - 1) / side;
  std::vector<float> blocks(static_cast<std::size_t>(bx) * by);
  for (float& b : blocks) b = static_cast<float>(unit(rng));
  std::vector<float> data(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      data[static_cast<std::size_t>(y) * width + x] = blocks[static_cast<std::size_t>(y / side) * bx + x / side];
    }
  }
  return normalize_budget(LightField::adopt(height, width, std::move(data)), options.eta).field;
}

LightField residual_update(const LightField& prev, const ResidualField& delta) {
  if (!prev.same_shape(delta.height, delta.width) || delta.channels != 1) {
    throw ShapeError("residual_update: residual does not match the field");
  }
  for (float d : delta.data) {
    if (!(d >= -1.0F && d <= 1.0F)) throw ValueError("residual_update: residual outside [-1, 1]");
  }
  std::vector<float> out(prev.pixel_count());
  kernels::parallel::residual_update(prev.data(), delta.data, out);
  return LightField::adopt(prev.height(), prev.width(), std::move(out));
}

Raster<float> coordinate_channels(int height, int width) {
  Raster<float> c(height, width, 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      c.at(y, x, 0) = width > 1 ? static_cast<float>(x) / static_cast<float>(width - 1) : 0.0F;
      c.at(y, x, 1) = height > 1 ? static_cast<float>(y) / static_cast<float>(height - 1) : 0.0F;
    }
  }
  return c;
}

// -- Policies -----------------------------------------------------------------

ResidualField IdentityPolicy::propose(const PolicyInput& input) {
  return ResidualField(input.prev_field.height(), input.prev_field.width(), 1, 0.0F);
}

ScoreFn make_score_fn(const Aggregate& scorer, std::span<const Annotation> annotations) {
  return [&scorer, annotations](const Image& image) { return scorer.evaluate(image, annotations).total; };
}

GradientScoreFn make_gradient_fn(const Aggregate& scorer, std::span<const Annotation> annotations) {
  if (!scorer.differentiable()) throw ConfigError("gradient optimization needs a differentiable scorer");
  return [&scorer, annotations](const Image& image) {
    auto r = scorer.evaluate_with_gradient(image, annotations);
    return std::pair<double, ImageGradient>{r.report.total, std::move(r.gradient)};
  };
}

GradientPolicy::GradientPolicy(const ScenePair& pair, GradientScoreFn score, double step_size)
    : pair_(pair), score_(std::move(score)), step_size_(step_size) {
  if (!(step_size > 0.0 && step_size <= 1.0)) throw ConfigError("gradient policy: step size must lie in (0, 1]");
}

ResidualField GradientPolicy::propose(const PolicyInput& input) {
  auto [score, dimage] = score_(input.image);
  (void)score;
  const FieldGradient g = relight_gradient(pair_, dimage);
  double maxabs = 0.0;
  for (double v : g.data) {
    if (!std::isfinite(v)) throw NumericalError("gradient policy: non-finite gradient");
    maxabs = std::max(maxabs, std::abs(v));
  }
  ResidualField delta(g.height, g.width, 1, 0.0F);
  if (maxabs == 0.0) return delta;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    delta.data[i] = static_cast<float>(std::clamp(step_size_ * g.data[i] / maxabs, -1.0, 1.0));
  }
  return delta;
}

// -- Sequential refinement -------------------------------------------------------

void RefinementConfig::validate() const {
  if (n_steps < 1) throw ConfigError("refine: n_steps must be >= 1");
  if (k_scored < 1 || k_scored > n_steps) throw ConfigError("refine: k_scored must satisfy 1 <= K <= N");
  if (!(epsilon > 0.0)) throw ConfigError("refine: epsilon must be positive");
  if (latency_frames < 0) throw ConfigError("refine: latency_frames must be >= 0");
}

std::vector<int> sample_scored_steps(int n_steps, int k_scored, std::uint64_t seed) {
  std::vector<int> pool(std::max(0, n_steps - 1));
  std::iota(pool.begin(), pool.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<int> out{0};
  const int extra = std::min<int>(k_scored - 1, static_cast<int>(pool.size()));
  out.insert(out.end(), pool.begin(), pool.begin() + extra);
  std::sort(out.begin(), out.end());
  return out;
}

Trajectory refine(const ScenePair& pair, Policy& policy, const ScoreFn& score,
                  const RefinementConfig& config, double eta, const LightField& init) {
  config.validate();
  check_eta(eta, "refine");
  pair.validate();
  require_same_shape(pair, init, "refine");

  Trajectory traj;
  traj.config = config;
  traj.eta = eta;
  traj.policy = policy.name();
  traj.scored_steps = sample_scored_steps(config.n_steps, config.k_scored, config.seed);
  const Raster<float> coords = coordinate_channels(pair.height(), pair.width());

  auto first = normalize_budget(init, eta, config.epsilon);
  LightField field = std::move(first.field);
  bool clipped = first.clipped;
  bool underfilled = first.underfilled;

  auto is_scored = [&](int t) {
    return std::binary_search(traj.scored_steps.begin(), traj.scored_steps.end(), t);
  };

  // Steps exchange nothing but (frame, field) values.
  for (int t = 0; t <= config.n_steps; ++t) {
    TrajectoryStep step;
    step.t = t;
    step.field = field;
    step.image = relight(pair, field);
    step.clipped = clipped;
    step.underfilled = underfilled;
    const bool last = t == config.n_steps;
    if ((last && config.score_final) || (!last && is_scored(t))) {
      ScoreReport r;
      r.total = score(step.image);
      r.tasks.push_back({"score", r.total, true});
      step.score = std::move(r);
    }
    traj.steps.push_back(std::move(step));
    if (last) break;

    const Image& observation = traj.steps[std::max(0, t - config.latency_frames)].image;
    ResidualField delta = policy.propose({observation, field, coords});
    if (!field.same_shape(delta.height, delta.width) || delta.channels != 1) {
      throw PolicyError("policy '" + policy.name() + "' returned a residual of the wrong shape");
    }
    for (float d : delta.data) {
      if (!(d >= -1.0F && d <= 1.0F)) {
        throw PolicyError("policy '" + policy.name() + "' returned a residual outside [-1, 1]");
      }
    }
    auto next = normalize_budget(residual_update(field, delta), eta, config.epsilon);
    field = std::move(next.field);
    clipped = next.clipped;
    underfilled = next.underfilled;
  }
  return traj;
}

void write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory) {
  std::filesystem::create_directories(dir);
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trajectory.steps) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "step_%03d", s.t);
    const std::string field_name = std::string(stem) + "_field.lidf";
    const std::string image_name = std::string(stem) + "_image.lidf";
    io::write_field(dir / field_name, s.field);
    io::write_image(dir / image_name, s.image);
    nlohmann::json row{{"t", s.t},
                       {"field", field_name},
                       {"image", image_name},
                       {"field_mean", s.field.mean()},
                       {"clipped", s.clipped},
                       {"underfilled", s.underfilled},
                       {"scored", s.score.has_value()}};
    if (s.score) {
      row["score"] = s.score->total;
      nlohmann::json tasks = nlohmann::json::object();
      for (const auto& t : s.score->tasks) tasks[t.task] = t.score;
      row["tasks"] = tasks;
    }
    steps.push_back(std::move(row));
  }
  const auto& c = trajectory.config;
  nlohmann::json manifest{
      {"seed", c.seed},
      {"eta", trajectory.eta},
      {"policy", trajectory.policy},
      {"config",
       {{"n_steps", c.n_steps},
        {"k_scored", c.k_scored},
        {"epsilon", c.epsilon},
        {"latency_frames", c.latency_frames},
        {"score_final", c.score_final}}},
      {"scored_steps", trajectory.scored_steps},
      {"steps", steps}};
  const std::string text = manifest.dump(2) + "\n";
  io::write_file(dir / "manifest.json",
                 std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// -- Built-in optimizers ---------------------------------------------------------

OptimizeResult optimize_gradient(const ScenePair& pair, const GradientScoreFn& score, double eta,
                                 const GradientOptions& options) {
  check_eta(eta, "optimize_gradient");
  pair.validate();
  if (options.steps < 0 || !(options.step_size > 0.0)) throw ConfigError("optimize_gradient: bad step settings");
  const int h = pair.height();
  const int w = pair.width();

  OptimizeResult result;
  auto evaluate = [&](const LightField& m) {
    auto [s, dimage] = score(relight(pair, m));
    ++result.evaluations;
    if (!std::isfinite(s)) throw NumericalError("optimize_gradient: non-finite score");
    FieldGradient g = relight_gradient(pair, dimage);
    for (double v : g.data) {
      if (!std::isfinite(v)) throw NumericalError("optimize_gradient: non-finite gradient");
    }
    return Evaluated{s, std::move(g)};
  };

  LightField field;
  if (options.init) {
    require_same_shape(pair, *options.init, "optimize_gradient");
    std::vector<double> v(options.init->data().begin(), options.init->data().end());
    field = project_to_budget(v, h, w, eta);
  } else {
    field = uniform_field(h, w, eta);
  }
  Evaluated current = evaluate(field);
  result.initial_score = current.score;
  result.accepted_scores.push_back(current.score);

  double step = options.step_size;
  std::vector<double> candidate(field.pixel_count());
  for (int it = 0; it < options.steps && step >= options.min_step; ++it) {
    double maxabs = 0.0;
    for (double v : current.grad.data) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs == 0.0) break;
    const auto m = field.data();
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      candidate[i] = static_cast<double>(m[i]) + step * current.grad.data[i] / maxabs;
    }
    LightField next = project_to_budget(candidate, h, w, eta);
    Evaluated e = evaluate(next);
    if (e.score > current.score) {
      field = std::move(next);
      current = std::move(e);
      result.accepted_scores.push_back(current.score);
    } else {
      step *= 0.5;
    }
  }
  result.field = std::move(field);
  result.score = current.score;
  return result;
}

OptimizeResult optimize_blackbox(const ScenePair& pair, const ScoreFn& score, double eta,
                                 const BlackBoxOptions& options) {
  check_eta(eta, "optimize_blackbox");
  pair.validate();
  if (options.iterations < 0 || options.block_size < 1 || !(options.perturbation > 0.0)) {
    throw ConfigError("optimize_blackbox: bad iteration/block/perturbation settings");
  }
  const int h = pair.height();
  const int w = pair.width();
  const int bs = options.block_size;

  OptimizeResult result;
  auto evaluate = [&](const LightField& m) {
    const double s = score(relight(pair, m));
    ++result.evaluations;
    if (!std::isfinite(s)) throw NumericalError("optimize_blackbox: scorer returned a non-finite value");
    return s;
  };

  LightField field = options.init ? normalize_budget(*options.init, eta, options.epsilon).field
                                  : uniform_field(h, w, eta);
  require_same_shape(pair, field, "optimize_blackbox");
  double current = evaluate(field);
  result.initial_score = current;
  result.accepted_scores.push_back(current);

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> offset(0, bs - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<float> plus(field.pixel_count());
  std::vector<float> minus(field.pixel_count());
  std::vector<float> signs;
  const float c = static_cast<float>(options.perturbation);

  for (int it = 0; it < options.iterations; ++it) {
    const int ox = offset(rng);
    const int oy = offset(rng);
    const int nbx = (w + ox + bs - 1) / bs;
    const int nby = (h + oy + bs - 1) / bs;
    signs.resize(static_cast<std::size_t>(nbx) * nby);
    for (float& s : signs) s = coin(rng) ? 1.0F : -1.0F;
    const auto m = field.data();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const float d = c * signs[static_cast<std::size_t>((y + oy) / bs) * nbx + (x + ox) / bs];
        plus[p] = std::clamp(m[p] + d, 0.0F, 1.0F);
        minus[p] = std::clamp(m[p] - d, 0.0F, 1.0F);
      }
    }
    LightField fp = normalize_budget(LightField::adopt(h, w, plus), eta, options.epsilon).field;
    LightField fm = normalize_budget(LightField::adopt(h, w, minus), eta, options.epsilon).field;
    const double sp = evaluate(fp);
    const double sm = evaluate(fm);
    const bool take_plus = sp >= sm;
    const double best = take_plus ? sp : sm;
    if (best > current) {
      field = take_plus ? std::move(fp) : std::move(fm);
      current = best;
      result.accepted_scores.push_back(current);
    }
  }
  result.field = std::move(field);
  result.score = current;
  return result;
}

// -- Baselines -------------------------------------------------------------------

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "uniform") return BaselineKind::uniform;
  if (name == "no_ego" || name == "no-ego") return BaselineKind::no_ego;
  if (name == "low_beam" || name == "lb" || name == "LB") return BaselineKind::low_beam;
  if (name == "high_beam" || name == "hb" || name == "HB") return BaselineKind::high_beam;
  if (name == "static") return BaselineKind::static_average;
  throw ConfigError("unknown baseline '" + name + "'");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::uniform:
      return "uniform";
    case BaselineKind::no_ego:
      return "no_ego";
    case BaselineKind::low_beam:
      return "low_beam";
    case BaselineKind::high_beam:
      return "high_beam";
    case BaselineKind::static_average:
      return "static";
  }
  return "unknown";
}

LightField baseline_field(BaselineKind kind, const BaselineContext& ctx) {
  auto need_budget = [&]() {
    if (!ctx.budget) throw ConfigError(to_string(kind) + " baseline needs a budget");
    check_eta(*ctx.budget, "baseline");
    return *ctx.budget;
  };
  switch (kind) {
    case BaselineKind::uniform:
      if (ctx.height <= 0 || ctx.width <= 0) throw ConfigError("uniform baseline needs dimensions");
      return uniform_field(ctx.height, ctx.width, need_budget());
    case BaselineKind::no_ego:
      if (ctx.height <= 0 || ctx.width <= 0) throw ConfigError("no_ego baseline needs dimensions");
      return LightField(ctx.height, ctx.width, 0.0F);
    case BaselineKind::low_beam:
    case BaselineKind::high_beam: {
      const HeadlightModel* hl = kind == BaselineKind::low_beam ? ctx.low_beam : ctx.high_beam;
      if (hl == nullptr) throw ConfigError(to_string(kind) + " baseline needs a headlight model");
      if (ctx.camera == nullptr) throw ConfigError(to_string(kind) + " baseline needs a camera model");
      if (ctx.depth == nullptr) throw ConfigError(to_string(kind) + " baseline needs a depth map");
      return project_beam(*ctx.camera, *hl, *ctx.depth);
    }
    case BaselineKind::static_average: {
      if (ctx.collection.empty()) throw ConfigError("static baseline needs a non-empty field collection");
      const double eta = need_budget();
      const auto& first = ctx.collection.front();
      std::vector<double> sum(first.pixel_count(), 0.0);
      for (const auto& f : ctx.collection) {
        if (!f.same_shape(first)) throw ShapeError("static baseline: fields differ in size");
        const auto d = f.data();
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d[i];
      }
      std::vector<float> avg(sum.size());
      const double inv = 1.0 / static_cast<double>(ctx.collection.size());
      for (std::size_t i = 0; i < sum.size(); ++i) avg[i] = static_cast<float>(std::clamp(sum[i] * inv, 0.0, 1.0));
      return normalize_budget(LightField::adopt(first.height(), first.width(), std::move(avg)), eta, ctx.epsilon)
          .field;
    }
  }
  throw ConfigError("unknown baseline kind");
}

}  // namespace lidas
