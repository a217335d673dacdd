// lidas: command-line front end for scene generation, illumination
// optimization, baselines, evaluation and warp calibration.

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lidas/dataset.hpp"
#include "lidas/experiment.hpp"
#include "lidas/external_scorer.hpp"
#include "lidas/image_io.hpp"
#include "lidas/kernels.hpp"
#include "lidas/metrics.hpp"
#include "lidas/photometry.hpp"
#include "lidas/policy.hpp"
#include "lidas/relight.hpp"
#include "lidas/scorer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lidas;

namespace {

struct ScorerOptions {
  std::string spec = "contrast";
  std::string endpoint;
  std::string encoding = "png-base64";
};

void add_scorer_flags(CLI::App* cmd, ScorerOptions& s) {
  cmd->add_option("--scorer", s.spec, "Scorer parts, e.g. contrast:1,exposure:0.5,external")
      ->capture_default_str();
  cmd->add_option("--scorer-endpoint", s.endpoint, "External scorer: tcp://host:port or a command line");
  cmd->add_option("--scorer-encoding", s.encoding, "Image transport for the external scorer")
      ->check(CLI::IsMember({"png-base64", "path"}))
      ->capture_default_str();
}

Aggregate build_scorer(const ScorerOptions& s) {
  auto specs = parse_scorer_specs(s.spec);
  for (auto& spec : specs) {
    if (spec.kind != ScorerKind::external) continue;
    if (s.endpoint.empty()) throw ConfigError("--scorer external needs --scorer-endpoint");
    ExternalScorerConfig cfg;
    cfg.endpoint = s.endpoint;
    cfg.tasks = spec.tasks;
    cfg.encoding = s.encoding == "path" ? ImageEncoding::path : ImageEncoding::png_base64;
    cfg.apply_environment();
    spec.client = std::make_shared<ExternalScorer>(cfg);
  }
  return Aggregate(std::move(specs));
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

// -- synth-gen ---------------------------------------------------------------

struct SynthArgs {
  int count = 200;
  std::uint64_t seed = 0;
  std::string split = "test";
  fs::path out = "corpus";
};

int run_synth(const SynthArgs& a) {
  const ToyCorpus corpus = generate_toy_corpus(a.count, a.seed);
  write_corpus(a.out, corpus, a.split);
  std::cout << "wrote " << a.count << " scenes to " << (a.out / "manifest.json").string() << "\n";
  return 0;
}

// -- optimize ------------------------------------------------------------------

struct OptimizeArgs {
  fs::path dataset;
  int scene = 0;
  std::string method = "auto";
  double budget = 0.6;
  int steps = -1;
  int scored_steps = 5;
  std::uint64_t seed = 0;
  ScorerOptions scorer;
  fs::path out = "optimize_out";
};

int run_optimize(const OptimizeArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const ExperimentInput rig = [&] {
    ExperimentInput in;
    if (!ds.calibration) throw ConfigError("dataset has no calibration");
    in.camera = ds.calibration->camera;
    in.low_beam = ds.calibration->headlight;
    return in;
  }();
  if (a.scene < 0 || static_cast<std::size_t>(a.scene) >= ds.size()) throw ConfigError("--scene out of range");
  const ScenePair pair = ds.load(a.scene);
  if (!pair.depth) throw ConfigError("scene has no depth map; the budget is relative to the low beam");
  const LightField m_lb = project_beam(rig.camera, rig.low_beam, *pair.depth);
  const double eta = a.budget * m_lb.mean();

  const Aggregate scorer = build_scorer(a.scorer);
  std::string method = a.method;
  if (method == "auto") method = scorer.differentiable() ? "gradient" : "blackbox";

  json result{{"scene", ds.records[a.scene].id}, {"method", method}, {"budget", a.budget}, {"eta", eta},
              {"seed", a.seed}, {"scorer", a.scorer.spec}};
  LightField field;
  if (method == "gradient") {
    GradientOptions opts;
    if (a.steps >= 0) opts.steps = a.steps;
    const auto r = optimize_gradient(pair, make_gradient_fn(scorer, pair.annotations), eta, opts);
    field = r.field;
    result["score"] = r.score;
    result["initial_score"] = r.initial_score;
    result["accepted_scores"] = r.accepted_scores;
    result["evaluations"] = r.evaluations;
  } else if (method == "blackbox") {
    BlackBoxOptions opts;
    if (a.steps >= 0) opts.iterations = a.steps;
    opts.seed = a.seed;
    const auto r = optimize_blackbox(pair, make_score_fn(scorer, pair.annotations), eta, opts);
    field = r.field;
    result["score"] = r.score;
    result["initial_score"] = r.initial_score;
    result["accepted_scores"] = r.accepted_scores;
    result["evaluations"] = r.evaluations;
  } else if (method == "refine") {
    RefinementConfig cfg;
    if (a.steps >= 0) cfg.n_steps = a.steps;
    cfg.k_scored = a.scored_steps;
    cfg.seed = a.seed;
    InitOptions init;
    init.eta = eta;
    init.seed = a.seed;
    const LightField start = init_field(pair.height(), pair.width(), init);
    std::unique_ptr<Policy> policy;
    if (scorer.differentiable()) {
      policy = std::make_unique<GradientPolicy>(pair, make_gradient_fn(scorer, pair.annotations));
    } else {
      policy = std::make_unique<IdentityPolicy>();
    }
    const Trajectory traj = refine(pair, *policy, make_score_fn(scorer, pair.annotations), cfg, eta, start);
    write_trajectory(a.out / "trajectory", traj);
    field = traj.final_field();
    result["score"] = traj.steps.back().score ? json(traj.steps.back().score->total) : json(nullptr);
    result["policy"] = traj.policy;
  } else {
    throw ConfigError("unknown --method '" + method + "' (gradient, blackbox, refine)");
  }
  result["power"] = power_of(field, m_lb);
  io::write_field(a.out / "field.lidf", field);
  io::write_image(a.out / "image.lidf", relight(pair, field));
  write_text(a.out / "result.json", result.dump(2) + "\n");
  std::cout << result.dump() << "\n";
  return 0;
}

// -- baseline ------------------------------------------------------------------

struct BaselineArgs {
  fs::path dataset;
  std::string kind = "low_beam";
  double budget = 1.0;
  fs::path out = "baseline_out";
};

int run_baseline(const BaselineArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const ExperimentInput in = experiment_input(ds);
  const BaselineKind kind = parse_baseline_kind(a.kind);
  if (kind == BaselineKind::static_average) {
    throw ConfigError("the static baseline averages optimized fields; use `eval --methods static`");
  }
  json powers = json::object();
  for (std::size_t i = 0; i < in.scenes.size(); ++i) {
    const auto& s = in.scenes[i];
    if (!s.depth) throw ConfigError("scene '" + in.ids[i] + "' has no depth map");
    const LightField m_lb = project_beam(in.camera, in.low_beam, *s.depth);
    BaselineContext ctx;
    ctx.height = s.height();
    ctx.width = s.width();
    ctx.budget = a.budget * m_lb.mean();
    ctx.camera = &in.camera;
    ctx.low_beam = &in.low_beam;
    ctx.high_beam = &in.high_beam;
    ctx.depth = &*s.depth;
    const LightField f = baseline_field(kind, ctx);
    io::write_field(a.out / (in.ids[i] + "_field.lidf"), f);
    powers[in.ids[i]] = power_of(f, m_lb);
  }
  write_text(a.out / "powers.json", powers.dump(2) + "\n");
  std::cout << "wrote " << in.scenes.size() << " " << to_string(kind) << " fields to " << a.out.string() << "\n";
  return 0;
}

// -- eval ------------------------------------------------------------------------

struct EvalArgs {
  fs::path dataset;
  std::string methods = "uniform,low_beam,optimized";
  std::string budgets = "0.6,1.0";
  std::string bands = "0,20,60,70,inf";
  int steps = -1;
  int scored_steps = 5;
  int workers = 0;
  std::uint64_t seed = 0;
  ScorerOptions scorer;
  fs::path out = "eval_out";
};

int run_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const ExperimentInput in = experiment_input(ds);
  ExperimentConfig cfg;
  cfg.methods = parse_methods(a.methods);
  cfg.powers = parse_list(a.budgets);
  cfg.band_edges = parse_band_edges(a.bands);
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  if (a.steps >= 0) {
    cfg.gradient.steps = a.steps;
    cfg.blackbox.iterations = a.steps;
    cfg.refine.n_steps = a.steps;
  }
  cfg.refine.k_scored = a.scored_steps;
  const Aggregate scorer = build_scorer(a.scorer);
  const ExperimentReport report = run_experiment(in, scorer, cfg);
  write_report(a.out, report);
  std::cout << format_table(report_json(report));
  return 0;
}

// -- warp-calib ------------------------------------------------------------------

struct WarpArgs {
  fs::path calibration;
  double plane = 20.0;
  fs::path out = "warp_out";
};

int run_warp(const WarpArgs& a) {
  Calibration calib;
  if (!a.calibration.empty()) {
    calib = load_calibration(a.calibration);
  } else {
    calib.camera = toy_camera(ToyParams{});
    calib.headlight = default_headlight(synthetic_low_beam());
  }
  calib.reference_plane_m = a.plane;
  const WarpMap backward = build_warp(calib.camera, calib.headlight, a.plane);
  const WarpMap forward = camera_to_headlight(calib.camera, calib.headlight, a.plane);
  if (backward.valid_count() == 0) throw CalibrationError("warp has no valid entries; frusta do not overlap");
  const RoundTripError rt = warp_round_trip(forward, backward);
  io::write_raw(a.out / "warp.lidf", backward.coords, backward.height, backward.width, 2);
  io::write_raw(a.out / "inverse.lidf", forward.coords, forward.height, forward.width, 2);
  write_text(a.out / "calibration.json", calibration_to_json(calib) + "\n");
  json rep{{"plane_m", a.plane},
           {"valid_headlight_pixels", backward.valid_count()},
           {"valid_camera_pixels", forward.valid_count()},
           {"round_trip_max_px", rt.max_px},
           {"round_trip_mean_px", rt.mean_px},
           {"round_trip_samples", rt.samples}};
  write_text(a.out / "report.json", rep.dump(2) + "\n");
  std::cout << rep.dump() << "\n";
  return 0;
}

// -- report ------------------------------------------------------------------------

int run_report(const fs::path& in, const fs::path& out) {
  const auto bytes = io::read_file(in);
  const std::string table = format_table(std::string(bytes.begin(), bytes.end()));
  if (!out.empty()) write_text(out, table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-adaptive illumination: relighting, optimization and evaluation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for pixel kernels (0 = default)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-gen", "Render a seeded toy night-scene corpus");
  c_synth->add_option("--count", synth.count)->check(CLI::PositiveNumber)->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--split", synth.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  c_synth->add_option("--out", synth.out)->capture_default_str();

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "Optimize the light field of one scene");
  c_opt->add_option("--dataset", opt.dataset, "manifest.json")->required();
  c_opt->add_option("--scene", opt.scene)->capture_default_str();
  c_opt->add_option("--method", opt.method, "auto, gradient, blackbox or refine")->capture_default_str();
  c_opt->add_option("--budget", opt.budget, "Power relative to the low beam")->capture_default_str();
  c_opt->add_option("--steps", opt.steps, "Iterations (refine: trajectory length)");
  c_opt->add_option("--scored-steps", opt.scored_steps)->capture_default_str();
  c_opt->add_option("--seed", opt.seed)->capture_default_str();
  c_opt->add_option("--out", opt.out)->capture_default_str();
  add_scorer_flags(c_opt, opt.scorer);

  BaselineArgs base;
  auto* c_base = app.add_subcommand("baseline", "Write baseline fields for every scene");
  c_base->add_option("--dataset", base.dataset)->required();
  c_base->add_option("--kind", base.kind, "uniform, no_ego, low_beam, high_beam")->capture_default_str();
  c_base->add_option("--budget", base.budget, "Power relative to the low beam (uniform)")->capture_default_str();
  c_base->add_option("--out", base.out)->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate methods over a dataset");
  c_eval->add_option("--dataset", ev.dataset)->required();
  c_eval->add_option("--methods", ev.methods)->capture_default_str();
  c_eval->add_option("--budget", ev.budgets, "Comma-separated powers relative to the low beam")
      ->capture_default_str();
  c_eval->add_option("--bands", ev.bands, "Distance band edges in meters")->capture_default_str();
  c_eval->add_option("--steps", ev.steps);
  c_eval->add_option("--scored-steps", ev.scored_steps)->capture_default_str();
  c_eval->add_option("--workers", ev.workers, "Scene-level workers (0 = default)")->capture_default_str();
  c_eval->add_option("--seed", ev.seed)->capture_default_str();
  c_eval->add_option("--out", ev.out)->capture_default_str();
  add_scorer_flags(c_eval, ev.scorer);

  WarpArgs warp;
  auto* c_warp = app.add_subcommand("warp-calib", "Build the camera/headlight warp and check its round trip");
  c_warp->add_option("--calibration", warp.calibration, "Calibration JSON (default: toy rig)");
  c_warp->add_option("--plane", warp.plane, "Reference plane distance in meters")->capture_default_str();
  c_warp->add_option("--out", warp.out)->capture_default_str();

  fs::path report_in;
  fs::path report_out;
  auto* c_report = app.add_subcommand("report", "Print a metrics table");
  c_report->add_option("--in", report_in, "metrics.json")->required();
  c_report->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_threads(threads);

  try {
    if (*c_synth) return run_synth(synth);
    if (*c_opt) return run_optimize(opt);
    if (*c_base) return run_baseline(base);
    if (*c_eval) return run_eval(ev);
    if (*c_warp) return run_warp(warp);
    if (*c_report) return run_report(report_in, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "lidas: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "lidas: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
