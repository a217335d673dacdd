#include "lidas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "lidas/image_io.hpp"

namespace lidas {

namespace {

using nlohmann::json;

json annotation_json(const Annotation& a) {
  json j{{"class", a.class_id}, {"box", {a.box.x1, a.box.y1, a.box.x2, a.box.y2}}};
  if (a.distance_m) j["distance_m"] = *a.distance_m;
  return j;
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  a.class_id = j.at("class").get<int>();
  const auto b = j.at("box").get<std::vector<double>>();
  if (b.size() != 4) throw ConfigError("manifest: box needs 4 values");
  a.box = {b[0], b[1], b[2], b[3]};
  if (j.contains("distance_m") && !j["distance_m"].is_null()) a.distance_m = j["distance_m"].get<double>();
  return a;
}

std::vector<Annotation> annotations_from_json(const json& j, const char* key) {
  std::vector<Annotation> out;
  if (!j.contains(key)) return out;
  for (const auto& a : j.at(key)) out.push_back(annotation_from_json(a));
  return out;
}

LabelMap labels_from_raw(const Raster<float>& raw) {
  if (raw.channels != 1) throw ShapeError("label map must have one channel");
  LabelMap out(raw.height, raw.width, 1);
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const float v = raw.data[i];
    if (!(v >= 0.0F && v <= 255.0F) || v != std::floor(v)) throw ValueError("label map holds a non-integer label");
    out.data[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

bool boxes_touch(const Box& a, const Box& b, double margin) {
  return a.x1 - margin < b.x2 && b.x1 - margin < a.x2 && a.y1 - margin < b.y2 && b.y1 - margin < a.y2;
}

// Rows/columns whose pixel centers fall inside [a, b).
std::pair<int, int> covered(double a, double b, int size) {
  const int lo = std::max(0, static_cast<int>(std::ceil(a - 0.5)));
  const int hi = std::min(size - 1, static_cast<int>(std::ceil(b - 0.5)) - 1);
  return {lo, hi};
}

}  // namespace

// -- Manifest ------------------------------------------------------------------

ScenePair Dataset::load(std::size_t i) const {
  if (i >= records.size()) throw ValueError("dataset: scene index out of range");
  const auto& r = records[i];
  ScenePair pair;
  pair.i_full = io::read_image(root / r.i_full);
  pair.i_off = io::read_image(root / r.i_off);
  if (r.depth) pair.depth = io::read_depth(root / *r.depth);
  if (r.semantic) pair.semantic = labels_from_raw(io::read_raw(root / *r.semantic));
  pair.annotations = r.annotations;
  pair.distractors = r.distractors;
  try {
    pair.validate();
  } catch (const Error& e) {
    throw ShapeError("scene '" + r.id + "': " + e.what());
  }
  return pair;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  const auto bytes = io::read_file(manifest);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + manifest.string() + ": " + e.what());
  }
  Dataset d;
  d.root = manifest.parent_path();
  try {
    d.split = j.value("split", "test");
    if (d.split != "train" && d.split != "val" && d.split != "test") {
      throw ConfigError("manifest: split must be train, val or test");
    }
    if (j.contains("calibration")) d.calibration = parse_calibration(j["calibration"].dump());
    for (const auto& s : j.at("scenes")) {
      SceneRecord r;
      r.id = s.at("id").get<std::string>();
      r.i_full = s.at("i_full").get<std::string>();
      r.i_off = s.at("i_off").get<std::string>();
      if (s.contains("depth")) r.depth = s["depth"].get<std::string>();
      if (s.contains("semantic")) r.semantic = s["semantic"].get<std::string>();
      r.annotations = annotations_from_json(s, "annotations");
      r.distractors = annotations_from_json(s, "distractors");
      d.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + manifest.string() + ": " + e.what());
  }
  for (const auto& r : d.records) {
    for (const auto* p : {&r.i_full, &r.i_off}) {
      if (!std::filesystem::exists(d.root / *p)) throw IoError("manifest: missing file " + (d.root / *p).string());
    }
  }
  return d;
}

void save_manifest(const std::filesystem::path& manifest, const Dataset& dataset) {
  json scenes = json::array();
  for (const auto& r : dataset.records) {
    json s{{"id", r.id}, {"i_full", r.i_full.generic_string()}, {"i_off", r.i_off.generic_string()}};
    if (r.depth) s["depth"] = r.depth->generic_string();
    if (r.semantic) s["semantic"] = r.semantic->generic_string();
    json ann = json::array();
    for (const auto& a : r.annotations) ann.push_back(annotation_json(a));
    json dis = json::array();
    for (const auto& a : r.distractors) dis.push_back(annotation_json(a));
    s["annotations"] = std::move(ann);
    s["distractors"] = std::move(dis);
    scenes.push_back(std::move(s));
  }
  json j{{"version", 1}, {"split", dataset.split}, {"scenes", std::move(scenes)}};
  if (dataset.calibration) j["calibration"] = json::parse(calibration_to_json(*dataset.calibration));
  const std::string text = j.dump(2) + "\n";
  io::write_file(manifest, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// -- Synthetic night scenes -------------------------------------------------------

void ToyParams::validate() const {
  if (height < 8 || width < 8) throw ConfigError("toy corpus: image must be at least 8x8");
  if (!(focal > 0.0)) throw ConfigError("toy corpus: focal length must be positive");
  if (!(horizon_row > 8.0 && horizon_row < height - 2.0)) throw ConfigError("toy corpus: horizon outside the image");
  if (!(camera_height_m > 0.0)) throw ConfigError("toy corpus: camera height must be positive");
  if (min_objects < 0 || max_objects < min_objects) throw ConfigError("toy corpus: bad object count range");
  if (!(min_distance_m > 0.0 && max_distance_m > min_distance_m)) {
    throw ConfigError("toy corpus: bad distance range");
  }
  if (!(max_ambient >= 0.0 && max_ambient <= 1.0)) throw ConfigError("toy corpus: ambient must lie in [0, 1]");
  if (!(gain_distance_m > 0.0)) throw ConfigError("toy corpus: gain distance must be positive");
  if (max_distractors < 0) throw ConfigError("toy corpus: distractor count must be >= 0");
}

CameraModel toy_camera(const ToyParams& p) {
  CameraModel c;
  c.fx = p.focal;
  c.fy = p.focal;
  c.cx = (p.width - 1) / 2.0;
  c.cy = p.horizon_row;
  c.width = p.width;
  c.height = p.height;
  return c;
}

ScenePair generate_toy_scene(std::uint64_t seed, int index, const ToyParams& p) {
  p.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int h = p.height;
  const int w = p.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> albedo(3 * n, 0.0);
  std::vector<double> emission(3 * n, 0.0);
  DepthMap depth(h, w, 1, 0.0F);
  LabelMap labels(h, w, 1, kVoid);

  const double ambient = uniform(0.0, p.max_ambient);
  const double ground = uniform(0.08, 0.15);
  for (int y = 0; y < h; ++y) {
    const double below = y - p.horizon_row;
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (below <= 0.0) continue;  // sky
      const double rho = ground * uniform(0.85, 1.15);
      for (int c = 0; c < 3; ++c) albedo[3 * i + c] = rho;
      depth.data[i] = static_cast<float>(p.focal * p.camera_height_m / below);
      labels.data[i] = kRoad;
    }
  }

  ScenePair pair;
  std::vector<Box> placed;
  const int n_objects = integer(p.min_objects, p.max_objects);
  for (int k = 0; k < n_objects; ++k) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const bool pedestrian = uniform(0.0, 1.0) < 0.5;
      const double d = p.min_distance_m * std::pow(p.max_distance_m / p.min_distance_m, uniform(0.0, 1.0));
      const double lateral = uniform(-6.0, 6.0);
      const double ow = pedestrian ? uniform(0.5, 0.7) : uniform(1.7, 2.0);
      const double oh = pedestrian ? uniform(1.6, 1.9) : uniform(1.4, 1.6);
      const double rho = uniform(0.25, 0.8);
      const double tint[3] = {uniform(0.8, 1.0), uniform(0.8, 1.0), uniform(0.8, 1.0)};
      const double cx = (w - 1) / 2.0;
      Box b{cx + p.focal * (lateral - ow / 2) / d, p.horizon_row + p.focal * (p.camera_height_m - oh) / d,
            cx + p.focal * (lateral + ow / 2) / d, p.horizon_row + p.focal * p.camera_height_m / d};
      if (b.x1 < 0 || b.x2 > w || b.y1 < 0 || b.y2 > h) continue;
      if (b.width() < 2.0 || b.height() < 3.0) continue;
      if (std::any_of(placed.begin(), placed.end(), [&](const Box& o) { return boxes_touch(b, o, 2.0); })) continue;
      const auto [x0, x1] = covered(b.x1, b.x2, w);
      const auto [y0, y1] = covered(b.y1, b.y2, h);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          for (int c = 0; c < 3; ++c) albedo[3 * i + c] = rho * tint[c];
          depth.data[i] = static_cast<float>(d);
          labels.data[i] = pedestrian ? kPedestrianLabel : kCarLabel;
        }
      }
      placed.push_back(b);
      pair.annotations.push_back({pedestrian ? kPedestrian : kCar, b, std::nullopt, d});
      break;
    }
  }

  // Street lamps and signs above the horizon: bright in both renders, never ground truth.
  const int n_distractors = integer(0, p.max_distractors);
  for (int k = 0; k < n_distractors; ++k) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const int side = integer(2, 4);
      const double x = std::floor(uniform(0.0, w - side));
      const double y = std::floor(uniform(2.0, p.horizon_row - side - 2.0));
      const Box b{x, y, x + side, y + side};
      if (std::any_of(placed.begin(), placed.end(), [&](const Box& o) { return boxes_touch(b, o, 2.0); })) continue;
      const double e = uniform(0.5, 1.0);
      const double color[3] = {1.0, 0.85, 0.55};
      for (int yy = static_cast<int>(y); yy < static_cast<int>(y) + side; ++yy) {
        for (int xx = static_cast<int>(x); xx < static_cast<int>(x) + side; ++xx) {
          const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
          for (int c = 0; c < 3; ++c) emission[3 * i + c] = e * color[c];
        }
      }
      placed.push_back(b);
      pair.distractors.push_back({uniform(0.0, 1.0) < 0.5 ? kPedestrian : kCar, b, std::nullopt, std::nullopt});
      break;
    }
  }

  std::vector<float> full(3 * n);
  std::vector<float> off(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = depth.data[i];
    const double gain = z > 0.0 ? std::pow(p.gain_distance_m / z, 2) : 0.0;
    for (int c = 0; c < 3; ++c) {
      const std::size_t k = 3 * i + c;
      off[k] = static_cast<float>(std::min(1.0, ambient * albedo[k] + emission[k]));
      full[k] = static_cast<float>(std::min(1.0, (ambient + gain) * albedo[k] + emission[k]));
    }
  }
  pair.i_full = Image(h, w, 3, std::move(full));
  pair.i_off = Image(h, w, 3, std::move(off));
  pair.depth = std::move(depth);
  pair.semantic = std::move(labels);
  pair.validate();
  return pair;
}

ToyCorpus generate_toy_corpus(int count, std::uint64_t seed, const ToyParams& params) {
  if (count < 1) throw ConfigError("toy corpus: count must be >= 1");
  params.validate();
  ToyCorpus corpus;
  corpus.calibration.camera = toy_camera(params);
  corpus.calibration.headlight = default_headlight(synthetic_low_beam());
  corpus.scenes.resize(count);
  corpus.ids.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    corpus.scenes[i] = generate_toy_scene(seed, i, params);
  }
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%04d", i);
    corpus.ids[i] = id;
  }
  return corpus;
}

Dataset write_corpus(const std::filesystem::path& dir, const ToyCorpus& corpus, const std::string& split) {
  Dataset d;
  d.root = dir;
  d.split = split;
  d.calibration = corpus.calibration;
  for (std::size_t i = 0; i < corpus.scenes.size(); ++i) {
    const auto& s = corpus.scenes[i];
    const std::string& id = corpus.ids[i];
    SceneRecord r;
    r.id = id;
    r.i_full = std::filesystem::path("scenes") / (id + "_full.lidf");
    r.i_off = std::filesystem::path("scenes") / (id + "_off.lidf");
    io::write_image(dir / r.i_full, s.i_full);
    io::write_image(dir / r.i_off, s.i_off);
    if (s.depth) {
      r.depth = std::filesystem::path("scenes") / (id + "_depth.lidf");
      io::write_raw(dir / *r.depth, *s.depth);
    }
    if (s.semantic) {
      r.semantic = std::filesystem::path("scenes") / (id + "_labels.lidf");
      std::vector<float> v(s.semantic->data.begin(), s.semantic->data.end());
      io::write_raw(dir / *r.semantic, v, s.semantic->height, s.semantic->width, 1);
    }
    r.annotations = s.annotations;
    r.distractors = s.distractors;
    d.records.push_back(std::move(r));
  }
  save_manifest(dir / "manifest.json", d);
  return d;
}

}  // namespace lidas
