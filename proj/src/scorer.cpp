#include "lidas/scorer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "lidas/external_scorer.hpp"

namespace lidas {

namespace {

constexpr double kLumaWeights[3] = {0.2126, 0.7152, 0.0722};

struct PixelRange {
  int lo = 0;
  int hi = -1;  // inclusive
};

// Pixels whose centers fall in [a, b).
PixelRange centers_in(double a, double b, int size) {
  PixelRange r;
  r.lo = std::max(0, static_cast<int>(std::ceil(a - 0.5)));
  r.hi = std::min(size - 1, static_cast<int>(std::ceil(b - 0.5)) - 1);
  return r;
}

// Distributes dS/dL onto the channels of the image.
ImageGradient luminance_to_image(const std::vector<double>& dl, const Image& image) {
  ImageGradient g(image.height(), image.width(), image.channels());
  const int ch = image.channels();
  for (std::size_t p = 0; p < dl.size(); ++p) {
    if (ch >= 3) {
      for (int c = 0; c < 3; ++c) g.data[p * ch + c] = dl[p] * kLumaWeights[c];
    } else {
      g.data[p] = dl[p];
    }
  }
  return g;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

template <typename E>
[[noreturn]] void rethrow_named(const E& e, const std::string& part) {
  throw E("aggregate part '" + part + "' failed: " + e.what());
}

}  // namespace

const TaskScore* ScoreReport::find(const std::string& task) const {
  for (const auto& t : tasks) {
    if (t.task == task) return &t;
  }
  return nullptr;
}

BoxRegions box_regions(const Box& box, int height, int width, double ring_fraction) {
  BoxRegions out;
  const PixelRange ix = centers_in(box.x1, box.x2, width);
  const PixelRange iy = centers_in(box.y1, box.y2, height);
  for (int y = iy.lo; y <= iy.hi; ++y) {
    for (int x = ix.lo; x <= ix.hi; ++x) out.interior.push_back(static_cast<std::size_t>(y) * width + x);
  }
  if (out.interior.empty()) return out;
  const double r = ring_fraction * std::hypot(box.width(), box.height());
  const PixelRange ox = centers_in(box.x1 - r, box.x2 + r, width);
  const PixelRange oy = centers_in(box.y1 - r, box.y2 + r, height);
  for (int y = oy.lo; y <= oy.hi; ++y) {
    for (int x = ox.lo; x <= ox.hi; ++x) {
      const bool inside = y >= iy.lo && y <= iy.hi && x >= ix.lo && x <= ix.hi;
      if (!inside) out.ring.push_back(static_cast<std::size_t>(y) * width + x);
    }
  }
  return out;
}

ScoreGradient contrast_score(const Image& image, std::span<const Annotation> annotations,
                             const ContrastParams& params) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> lum = image.luminance();
  const std::size_t n = lum.size();
  std::vector<double> dl(n, 0.0);
  ScoreReport report;

  struct Term {
    BoxRegions regions;
    double contrast;
  };
  std::vector<Term> terms;
  for (std::size_t k = 0; k < annotations.size(); ++k) {
    BoxRegions regions = box_regions(annotations[k].box, image.height(), image.width(), params.ring_fraction);
    if (regions.interior.empty()) {
      report.warnings.push_back("contrast: annotation " + std::to_string(k) + " has zero area, skipped");
      continue;
    }
    if (regions.ring.empty()) {
      report.warnings.push_back("contrast: annotation " + std::to_string(k) + " has no surrounding ring, skipped");
      continue;
    }
    double in = 0.0;
    for (std::size_t p : regions.interior) in += lum[p];
    double ring = 0.0;
    for (std::size_t p : regions.ring) ring += lum[p];
    const double c = in / regions.interior.size() - ring / regions.ring.size();
    terms.push_back({std::move(regions), c});
  }

  double contrast_part = 0.0;
  if (!terms.empty()) {
    const double inv_k = 1.0 / static_cast<double>(terms.size());
    for (const auto& t : terms) {
      const double denom = 1.0 + std::abs(t.contrast);
      contrast_part += t.contrast / denom * inv_k;
      const double dterm = inv_k / (denom * denom);
      const double din = dterm / t.regions.interior.size();
      const double dring = dterm / t.regions.ring.size();
      for (std::size_t p : t.regions.interior) dl[p] += din;
      for (std::size_t p : t.regions.ring) dl[p] -= dring;
    }
  }

  double over = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double excess = lum[p] - params.saturation_level;
    if (excess > 0.0) {
      over += excess;
      dl[p] -= params.lambda_sat * inv_n;
    }
  }
  const double score = contrast_part - params.lambda_sat * over * inv_n;

  report.tasks.push_back({"contrast", score, true});
  report.total = score;
  report.timing_ms = elapsed_ms(start);
  return {std::move(report), luminance_to_image(dl, image)};
}

ScoreGradient exposure_score(const Image& image, const ExposureParams& params) {
  if (!(params.sigma > 0.0)) throw ConfigError("exposure: sigma must be positive");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> lum = image.luminance();
  const std::size_t n = lum.size();
  const double inv_two_var = 1.0 / (2.0 * params.sigma * params.sigma);
  std::vector<double> dl(n);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double d = lum[p] - 0.5;
    const double k = std::exp(-d * d * inv_two_var);
    total += k;
    dl[p] = -2.0 * d * inv_two_var * k / static_cast<double>(n);
  }
  ScoreReport report;
  const double score = total / static_cast<double>(n);
  report.tasks.push_back({"exposure", score, true});
  report.total = score;
  report.timing_ms = elapsed_ms(start);
  return {std::move(report), luminance_to_image(dl, image)};
}

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::contrast_proxy:
      return "contrast";
    case ScorerKind::exposure_proxy:
      return "exposure";
    case ScorerKind::external:
      return "external";
  }
  return "unknown";
}

std::string ScorerSpec::name() const { return to_string(kind); }

std::vector<ScorerSpec> parse_scorer_specs(const std::string& text) {
  std::vector<ScorerSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ScorerSpec spec;
    std::string kind = item;
    const auto colon = item.find(':');
    if (colon != std::string::npos) {
      kind = item.substr(0, colon);
      try {
        spec.weight = std::stod(item.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("scorer spec '" + item + "': bad weight");
      }
    }
    if (kind == "contrast" || kind == "contrast_proxy") {
      spec.kind = ScorerKind::contrast_proxy;
    } else if (kind == "exposure" || kind == "exposure_proxy") {
      spec.kind = ScorerKind::exposure_proxy;
    } else if (kind == "external") {
      spec.kind = ScorerKind::external;
      spec.tasks = {"detection"};
    } else {
      throw ConfigError("unknown scorer kind '" + kind + "'");
    }
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw ConfigError("scorer spec list is empty");
  return out;
}

Aggregate::Aggregate(std::vector<ScorerSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ConfigError("aggregate: at least one scorer spec is required");
  for (const auto& s : specs_) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      throw ConfigError("aggregate: weight of '" + s.name() + "' must be a finite non-negative number");
    }
    if (s.kind == ScorerKind::external) {
      differentiable_ = false;
      if (!s.client) throw ConfigError("aggregate: external part has no connected client");
    }
  }
}

ScoreReport Aggregate::evaluate(const Image& image, std::span<const Annotation> annotations) const {
  const auto start = std::chrono::steady_clock::now();
  ScoreReport out;
  for (const auto& spec : specs_) {
    ScoreReport part;
    try {
      switch (spec.kind) {
        case ScorerKind::contrast_proxy:
          part = contrast_score(image, annotations, spec.contrast).report;
          break;
        case ScorerKind::exposure_proxy:
          part = exposure_score(image, spec.exposure).report;
          break;
        case ScorerKind::external:
          part = spec.client->score(image, spec.tasks);
          break;
      }
    } catch (const TimeoutError& e) {
      rethrow_named(e, spec.name());
    } catch (const VersionMismatchError& e) {
      rethrow_named(e, spec.name());
    } catch (const ProtocolError& e) {
      rethrow_named(e, spec.name());
    } catch (const TransportError& e) {
      rethrow_named(e, spec.name());
    } catch (const RemoteError& e) {
      rethrow_named(e, spec.name());
    } catch (const ScorerError& e) {
      rethrow_named(e, spec.name());
    } catch (const Error& e) {
      throw ScorerError("aggregate part '" + spec.name() + "' failed: " + e.what());
    }
    double part_score = 0.0;
    if (spec.kind == ScorerKind::external) {
      // Mean over the requested tasks; orientation is higher-is-better on the wire.
      for (const auto& t : part.tasks) part_score += t.score;
      part_score = part.tasks.empty() ? 0.0 : part_score / static_cast<double>(part.tasks.size());
      out.detections.insert(out.detections.end(), part.detections.begin(), part.detections.end());
      if (part.mask_path) out.mask_path = part.mask_path;
    } else {
      part_score = part.total;
    }
    if (!std::isfinite(part_score)) {
      throw NumericalError("aggregate part '" + spec.name() + "' returned a non-finite score");
    }
    out.total += spec.weight * part_score;
    out.tasks.insert(out.tasks.end(), part.tasks.begin(), part.tasks.end());
    out.warnings.insert(out.warnings.end(), part.warnings.begin(), part.warnings.end());
  }
  out.timing_ms = elapsed_ms(start);
  return out;
}

ScoreGradient Aggregate::evaluate_with_gradient(const Image& image,
                                                std::span<const Annotation> annotations) const {
  if (!differentiable_) throw ConfigError("aggregate: an external part makes the score non-differentiable");
  const auto start = std::chrono::steady_clock::now();
  ScoreGradient out{{}, ImageGradient(image.height(), image.width(), image.channels())};
  for (const auto& spec : specs_) {
    ScoreGradient part = spec.kind == ScorerKind::contrast_proxy
                             ? contrast_score(image, annotations, spec.contrast)
                             : exposure_score(image, spec.exposure);
    out.report.total += spec.weight * part.report.total;
    for (std::size_t i = 0; i < out.gradient.data.size(); ++i) {
      out.gradient.data[i] += spec.weight * part.gradient.data[i];
    }
    out.report.tasks.insert(out.report.tasks.end(), part.report.tasks.begin(), part.report.tasks.end());
    out.report.warnings.insert(out.report.warnings.end(), part.report.warnings.begin(),
                               part.report.warnings.end());
  }
  out.report.timing_ms = elapsed_ms(start);
  return out;
}

}  // namespace lidas
