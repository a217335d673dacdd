#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidas/image.hpp"

namespace lidas {

struct Detection {
  int cls = 0;
  Box box;
  double conf = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct TaskScore {
  std::string task;
  double score = 0.0;
  bool higher_is_better = true;
  friend bool operator==(const TaskScore&, const TaskScore&) = default;
};

struct ScoreReport {
  std::vector<TaskScore> tasks;
  /// Weighted sum over parts (equals the single part score for one spec).
  double total = 0.0;
  std::vector<Detection> detections;
  std::optional<std::string> mask_path;
  double timing_ms = 0.0;
  std::vector<std::string> warnings;

  const TaskScore* find(const std::string& task) const;
};

struct ScoreGradient {
  ScoreReport report;
  ImageGradient gradient;
};

struct ContrastParams {
  double lambda_sat = 1.0;
  double saturation_level = 0.95;
  /// Ring width as a fraction of the box diagonal.
  double ring_fraction = 0.25;
};

struct ExposureParams {
  double sigma = 0.25;
};

/// Mean over annotated objects of soft-clipped (interior - ring) luminance
/// contrast, minus a saturation penalty. Zero-area boxes are skipped with a warning.
ScoreGradient contrast_score(const Image& image, std::span<const Annotation> annotations,
                             const ContrastParams& params = {});

/// Mean well-exposedness exp(-(L - 0.5)^2 / (2 sigma^2)).
ScoreGradient exposure_score(const Image& image, const ExposureParams& params = {});

/// Pixel index ranges used by contrast_score for one box.
struct BoxRegions {
  std::vector<std::size_t> interior;
  std::vector<std::size_t> ring;
};
BoxRegions box_regions(const Box& box, int height, int width, double ring_fraction);

class ExternalScorer;

enum class ScorerKind { contrast_proxy, exposure_proxy, external };

std::string to_string(ScorerKind kind);

struct ScorerSpec {
  ScorerKind kind = ScorerKind::contrast_proxy;
  double weight = 1.0;
  ContrastParams contrast;
  ExposureParams exposure;
  /// External part: connected client and the tasks to request.
  std::shared_ptr<ExternalScorer> client;
  std::vector<std::string> tasks;

  std::string name() const;
};

/// Parses "contrast", "contrast:2,exposure:0.5", "external:1" (weights default to 1).
std::vector<ScorerSpec> parse_scorer_specs(const std::string& text);

/// Weighted multi-task scorer.
class Aggregate {
 public:
  explicit Aggregate(std::vector<ScorerSpec> specs);

  /// False as soon as one part is opaque (external).
  bool differentiable() const { return differentiable_; }
  const std::vector<ScorerSpec>& specs() const { return specs_; }

  ScoreReport evaluate(const Image& image, std::span<const Annotation> annotations) const;
  /// Throws ConfigError when a part is not differentiable.
  ScoreGradient evaluate_with_gradient(const Image& image,
                                       std::span<const Annotation> annotations) const;

 private:
  std::vector<ScorerSpec> specs_;
  bool differentiable_ = true;
};

}  // namespace lidas
