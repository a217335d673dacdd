#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lidas/image.hpp"
#include "lidas/photometry.hpp"

namespace lidas {

// -- Manifest ------------------------------------------------------------------

struct SceneRecord {
  std::string id;
  std::filesystem::path i_full;  // relative to the manifest directory
  std::filesystem::path i_off;
  std::optional<std::filesystem::path> depth;
  std::optional<std::filesystem::path> semantic;
  std::vector<Annotation> annotations;
  std::vector<Annotation> distractors;
};

struct Dataset {
  std::filesystem::path root;
  std::string split = "test";
  std::optional<Calibration> calibration;
  std::vector<SceneRecord> records;

  std::size_t size() const { return records.size(); }
  /// Reads and validates scene i.
  ScenePair load(std::size_t i) const;
};

/// JSON manifest; image paths resolve against the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest);
void save_manifest(const std::filesystem::path& manifest, const Dataset& dataset);

// -- Synthetic night scenes -------------------------------------------------------

enum ToyClass : int { kPedestrian = 0, kCar = 1 };
enum ToyLabel : std::uint8_t { kVoid = 0, kRoad = 1, kPedestrianLabel = 2, kCarLabel = 3 };
inline constexpr int kToyLabelCount = 4;

struct ToyParams {
  int height = 80;
  int width = 160;
  double focal = 240.0;
  double horizon_row = 28.0;
  double camera_height_m = 1.3;
  int min_objects = 2;
  int max_objects = 5;
  double min_distance_m = 6.0;
  double max_distance_m = 90.0;
  double max_ambient = 0.05;
  /// Beam gain g(d) = (gain_distance_m / d)^2.
  double gain_distance_m = 12.0;
  int max_distractors = 2;

  void validate() const;
};

struct ToyCorpus {
  Calibration calibration;
  std::vector<std::string> ids;
  std::vector<ScenePair> scenes;
};

CameraModel toy_camera(const ToyParams& params);

/// Renders `count` scenes; scene i depends only on (seed, i).
ToyCorpus generate_toy_corpus(int count, std::uint64_t seed, const ToyParams& params = {});
ScenePair generate_toy_scene(std::uint64_t seed, int index, const ToyParams& params = {});

/// Writes every scene as raw containers plus manifest.json under `dir`.
Dataset write_corpus(const std::filesystem::path& dir, const ToyCorpus& corpus, const std::string& split = "test");

}  // namespace lidas
