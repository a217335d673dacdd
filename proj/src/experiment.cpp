#include "lidas/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>
#include <omp.h>

#include "lidas/image_io.hpp"
#include "lidas/relight.hpp"

namespace lidas {

namespace {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1) + 0xBF58476D1CE4E5B9ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Outcome {
  bool ok = false;
  std::string reason;
  std::optional<LightField> field;
  double measured_power = 0.0;
  double score = 0.0;
  std::vector<Detection> detections;
  std::optional<LabelMap> labels;
  MatchCounts counts;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string edge_name(double v) { return std::isinf(v) ? "inf" : fmt(v).substr(0, fmt(v).find('.')); }

json edge_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

std::string csv_field(std::string s) {
  for (char& c : s) {
    if (c == '"' || c == '\n') c = '\'';
  }
  return "\"" + s + "\"";
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "uniform") return Method::uniform;
  if (name == "no_ego" || name == "no-ego") return Method::no_ego;
  if (name == "low_beam" || name == "lb" || name == "LB") return Method::low_beam;
  if (name == "high_beam" || name == "hb" || name == "HB") return Method::high_beam;
  if (name == "static") return Method::static_average;
  if (name == "optimized" || name == "gradient") return Method::optimized;
  if (name == "blackbox") return Method::blackbox;
  if (name == "refine") return Method::refine;
  throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::uniform:
      return "uniform";
    case Method::no_ego:
      return "no_ego";
    case Method::low_beam:
      return "low_beam";
    case Method::high_beam:
      return "high_beam";
    case Method::static_average:
      return "static";
    case Method::optimized:
      return "optimized";
    case Method::blackbox:
      return "blackbox";
    case Method::refine:
      return "refine";
  }
  return "unknown";
}

bool fixed_power(Method m) { return m == Method::no_ego || m == Method::low_beam || m == Method::high_beam; }

ExperimentInput experiment_input(const ToyCorpus& corpus) {
  ExperimentInput in;
  in.ids = corpus.ids;
  in.scenes = corpus.scenes;
  in.camera = corpus.calibration.camera;
  in.low_beam = corpus.calibration.headlight;
  in.low_beam.phi = synthetic_low_beam();
  in.high_beam = corpus.calibration.headlight;
  in.high_beam.phi = synthetic_high_beam();
  return in;
}

ExperimentInput experiment_input(const Dataset& dataset) {
  if (!dataset.calibration) throw ConfigError("dataset has no calibration; beam baselines and budgets need one");
  ExperimentInput in;
  in.camera = dataset.calibration->camera;
  in.low_beam = dataset.calibration->headlight;
  in.low_beam.phi = synthetic_low_beam();
  in.high_beam = dataset.calibration->headlight;
  in.high_beam.phi = synthetic_high_beam();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    in.ids.push_back(dataset.records[i].id);
    in.scenes.push_back(dataset.load(i));
  }
  return in;
}

ExperimentReport run_experiment(const ExperimentInput& input, const Aggregate& scorer, const ExperimentConfig& config) {
  const int n = static_cast<int>(input.scenes.size());
  if (n == 0) throw ConfigError("experiment: no scenes");
  if (input.ids.size() != input.scenes.size()) throw ConfigError("experiment: ids and scenes differ in count");
  if (config.methods.empty()) throw ConfigError("experiment: no methods");
  for (double p : config.powers) {
    if (!(p > 0.0)) throw ConfigError("experiment: powers must be positive");
  }
  input.camera.validate("experiment camera");
  // Remote scorers hold one connection; keep their calls on one thread.
  const int workers = !scorer.differentiable() ? 1 : (config.workers > 0 ? config.workers : omp_get_max_threads());

  std::vector<std::optional<LightField>> m_lb(n);
  std::vector<std::string> lb_error(n);
  for (int i = 0; i < n; ++i) {
    const auto& s = input.scenes[i];
    try {
      s.validate();
      if (!s.depth) throw ConfigError("scene has no depth map; the low-beam reference needs one");
      if (s.i_full.width() != input.camera.width || s.i_full.height() != input.camera.height) {
        throw ShapeError("scene size differs from the camera model");
      }
      LightField lb = project_beam(input.camera, input.low_beam, *s.depth);
      if (!(lb.mean() > 0.0)) throw ValueError("low-beam reference is dark in this scene");
      m_lb[i] = std::move(lb);
    } catch (const Error& e) {
      lb_error[i] = e.what();
    }
  }

  auto budget_for = [&](int i, double power) {
    const double eta = power * m_lb[i]->mean();
    if (eta > 1.0) throw BudgetError("power " + fmt(power) + " exceeds full illumination in this scene");
    return eta;
  };

  // Optimized fields per power, shared with the static baseline.
  std::map<double, std::vector<Outcome>> optimized_cache;

  auto make_field = [&](Method method, std::optional<double> power, int i) -> LightField {
    const ScenePair& pair = input.scenes[i];
    switch (method) {
      case Method::no_ego:
        return LightField(pair.height(), pair.width(), 0.0F);
      case Method::low_beam:
        return *m_lb[i];
      case Method::high_beam:
        return project_beam(input.camera, input.high_beam, *pair.depth);
      case Method::uniform: {
        BaselineContext ctx;
        ctx.height = pair.height();
        ctx.width = pair.width();
        ctx.budget = budget_for(i, *power);
        return baseline_field(BaselineKind::uniform, ctx);
      }
      case Method::optimized: {
        auto fn = make_gradient_fn(scorer, pair.annotations);
        return optimize_gradient(pair, fn, budget_for(i, *power), config.gradient).field;
      }
      case Method::blackbox: {
        BlackBoxOptions opts = config.blackbox;
        opts.seed = mix_seed(config.seed, i, 1);
        return optimize_blackbox(pair, make_score_fn(scorer, pair.annotations), budget_for(i, *power), opts).field;
      }
      case Method::refine: {
        const double eta = budget_for(i, *power);
        GradientPolicy policy(pair, make_gradient_fn(scorer, pair.annotations), config.policy_step);
        RefinementConfig rc = config.refine;
        rc.seed = mix_seed(config.seed, i, 2);
        InitOptions init;
        init.eta = eta;
        init.seed = mix_seed(config.seed, i, 3);
        const LightField start = init_field(pair.height(), pair.width(), init);
        auto traj = refine(pair, policy, make_score_fn(scorer, pair.annotations), rc, eta, start);
        return traj.final_field();
      }
      case Method::static_average: {
        std::vector<LightField> fields;
        for (const auto& o : optimized_cache.at(*power)) {
          if (o.ok) fields.push_back(*o.field);
        }
        BaselineContext ctx;
        ctx.height = pair.height();
        ctx.width = pair.width();
        ctx.budget = budget_for(i, *power);
        ctx.collection = fields;
        return baseline_field(BaselineKind::static_average, ctx);
      }
    }
    throw ConfigError("experiment: unhandled method");
  };

  auto evaluate_cell = [&](Method method, std::optional<double> power) {
    std::vector<Outcome> out(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < n; ++i) {
      Outcome& o = out[i];
      if (!m_lb[i]) {
        o.reason = lb_error[i];
        continue;
      }
      try {
        const ScenePair& pair = input.scenes[i];
        LightField field = make_field(method, power, i);
        const Image image = relight(pair, field);
        o.score = scorer.evaluate(image, pair.annotations).total;
        o.measured_power = power_of(field, *m_lb[i]);
        o.detections = proxy_detect(image, pair.annotations, pair.distractors, config.detector);
        std::vector<int> matched;
        const auto tp = match_predictions(o.detections, pair.annotations, 0.5, &matched);
        for (bool t : tp) (t ? o.counts.tp : o.counts.fp) += 1;
        o.counts.fn = static_cast<long>(pair.annotations.size()) - o.counts.tp;
        if (pair.semantic) o.labels = proxy_segment(image, *pair.semantic, config.segmenter);
        o.field = std::move(field);
        o.ok = true;
      } catch (const Error& e) {
        o.reason = e.what();
      } catch (const std::exception& e) {
        o.reason = std::string("unexpected failure: ") + e.what();
      }
    }
    return out;
  };

  ExperimentReport report;
  report.band_edges = config.band_edges;

  auto summarize = [&](Method method, std::optional<double> power, std::vector<Outcome>& outcomes, double ms) {
    MetricsReport row;
    row.method = to_string(method);
    row.power = power;
    row.elapsed_ms = ms;
    std::vector<ImageDetections> images;
    std::vector<LabelPair> labels;
    bool all_labels = true;
    double power_sum = 0.0;
    double score_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      Outcome& o = outcomes[i];
      SceneRow sr{row.method, power, input.ids[i], o.ok, o.reason, o.measured_power, o.score, o.counts};
      report.rows.push_back(std::move(sr));
      if (!o.ok) {
        ++row.failed;
        continue;
      }
      ++row.scenes;
      power_sum += o.measured_power;
      score_sum += o.score;
      images.push_back({o.detections, input.scenes[i].annotations});
      if (o.labels) {
        labels.push_back({&*o.labels, &*input.scenes[i].semantic});
      } else {
        all_labels = false;
      }
    }
    if (row.scenes > 0) {
      row.measured_power = power_sum / row.scenes;
      row.mean_score = score_sum / row.scenes;
      const DetectionMetrics dm = detection_metrics(images);
      row.precision = dm.precision;
      row.recall = dm.recall;
      row.map50 = dm.map50;
      row.map50_90 = dm.map50_90;
      try {
        row.bands = distance_banded(images, config.band_edges);
      } catch (const ValueError&) {
        row.bands.clear();  // ground truth without distances
      }
      if (all_labels) {
        const SegmentationMetrics sm = segmentation_metrics(labels, kToyLabelCount);
        row.miou = sm.miou;
        row.macc = sm.macc;
      }
    }
    report.table.push_back(std::move(row));
  };

  auto timed = [&](Method method, std::optional<double> power) {
    const auto start = std::chrono::steady_clock::now();
    auto outcomes = evaluate_cell(method, power);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return std::pair{std::move(outcomes), ms};
  };

  for (Method method : config.methods) {
    if (fixed_power(method)) {
      auto [outcomes, ms] = timed(method, std::nullopt);
      summarize(method, std::nullopt, outcomes, ms);
      continue;
    }
    for (double power : config.powers) {
      if (method == Method::static_average && !optimized_cache.contains(power)) {
        auto [opt, ms] = timed(Method::optimized, power);
        (void)ms;
        optimized_cache[power] = std::move(opt);
      }
      if (method == Method::optimized && optimized_cache.contains(power)) {
        summarize(method, power, optimized_cache[power], 0.0);
        continue;
      }
      auto [outcomes, ms] = timed(method, power);
      summarize(method, power, outcomes, ms);
      if (method == Method::optimized) optimized_cache[power] = std::move(outcomes);
    }
  }
  return report;
}

const MetricsReport* find_row(const ExperimentReport& report, Method method, std::optional<double> power) {
  for (const auto& r : report.table) {
    if (r.method != to_string(method)) continue;
    if (!power && !r.power) return &r;
    if (power && r.power && std::abs(*power - *r.power) < 1e-12) return &r;
  }
  return nullptr;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "method,power,measured_power,precision,recall,map50,map50_90,miou,macc,mean_score,scenes,failed";
  for (std::size_t b = 0; b + 1 < report.band_edges.size(); ++b) {
    os << ",map50_" << edge_name(report.band_edges[b]) << "_" << edge_name(report.band_edges[b + 1]);
  }
  os << "\n";
  for (const auto& r : report.table) {
    os << r.method << "," << fmt_opt(r.power) << "," << fmt(r.measured_power) << "," << fmt(r.precision) << ","
       << fmt(r.recall) << "," << fmt(r.map50) << "," << fmt(r.map50_90) << "," << fmt_opt(r.miou) << ","
       << fmt_opt(r.macc) << "," << fmt(r.mean_score) << "," << r.scenes << "," << r.failed;
    for (std::size_t b = 0; b + 1 < report.band_edges.size(); ++b) {
      os << ",";
      if (b < r.bands.size()) os << fmt_opt(r.bands[b].map50);
    }
    os << "\n";
  }
  return os.str();
}

std::string report_json(const ExperimentReport& report) {
  json edges = json::array();
  for (double e : report.band_edges) edges.push_back(edge_json(e));
  json rows = json::array();
  for (const auto& r : report.table) {
    json bands = json::array();
    for (const auto& b : r.bands) {
      bands.push_back({{"lo", edge_json(b.lo)},
                       {"hi", edge_json(b.hi)},
                       {"map50", b.map50 ? json(*b.map50) : json(nullptr)},
                       {"tp", b.counts.tp},
                       {"fp", b.counts.fp},
                       {"fn", b.counts.fn}});
    }
    rows.push_back({{"method", r.method},
                    {"power", r.power ? json(*r.power) : json(nullptr)},
                    {"measured_power", r.measured_power},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"map50", r.map50},
                    {"map50_90", r.map50_90},
                    {"miou", r.miou ? json(*r.miou) : json(nullptr)},
                    {"macc", r.macc ? json(*r.macc) : json(nullptr)},
                    {"mean_score", r.mean_score},
                    {"scenes", r.scenes},
                    {"failed", r.failed},
                    {"bands", bands}});
  }
  json failures = json::array();
  for (const auto& s : report.rows) {
    if (!s.ok) {
      failures.push_back({{"method", s.method},
                          {"power", s.power ? json(*s.power) : json(nullptr)},
                          {"scene", s.scene},
                          {"reason", s.reason}});
    }
  }
  json j{{"band_edges", edges}, {"band_fp_rule", kBandFpRule}, {"rows", rows}, {"failures", failures}};
  return j.dump(2) + "\n";
}

std::string scenes_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "method,power,scene,ok,measured_power,score,tp,fp,fn,reason\n";
  for (const auto& s : report.rows) {
    os << s.method << "," << fmt_opt(s.power) << "," << s.scene << "," << (s.ok ? 1 : 0) << ","
       << fmt(s.measured_power) << "," << fmt(s.score) << "," << s.counts.tp << "," << s.counts.fp << ","
       << s.counts.fn << "," << (s.reason.empty() ? "" : csv_field(s.reason)) << "\n";
  }
  return os.str();
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  auto put = [&](const char* name, const std::string& text) {
    io::write_file(dir / name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  };
  put("metrics.csv", report_csv(report));
  put("metrics.json", report_json(report));
  put("scenes.csv", scenes_csv(report));
  json timing = json::array();
  for (const auto& r : report.table) {
    timing.push_back(
        {{"method", r.method}, {"power", r.power ? json(*r.power) : json(nullptr)}, {"elapsed_ms", r.elapsed_ms}});
  }
  put("timing.json", timing.dump(2) + "\n");
}

std::string format_table(const std::string& metrics_json) {
  json j;
  try {
    j = json::parse(metrics_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: invalid metrics JSON: ") + e.what());
  }
  auto num = [](const json& v) { return v.is_null() ? std::string("-") : fmt(v.get<double>()).substr(0, 6); };
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %6s %6s %6s %6s %6s %8s %6s %6s %8s\n", "method", "power", "meas",
                "P", "R", "mAP50", "mAP50-90", "mIoU", "mAcc", "score");
  os << line;
  for (const auto& r : j.at("rows")) {
    std::snprintf(line, sizeof(line), "%-10s %6s %6s %6s %6s %6s %8s %6s %6s %8s\n",
                  r.at("method").get<std::string>().c_str(), num(r.at("power")).c_str(),
                  num(r.at("measured_power")).c_str(), num(r.at("precision")).c_str(), num(r.at("recall")).c_str(),
                  num(r.at("map50")).c_str(), num(r.at("map50_90")).c_str(), num(r.at("miou")).c_str(),
                  num(r.at("macc")).c_str(), num(r.at("mean_score")).c_str());
    os << line;
  }
  const auto& failures = j.value("failures", json::array());
  if (!failures.empty()) os << failures.size() << " failed cell(s); see metrics.json\n";
  return os.str();
}

}  // namespace lidas
