#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lidas/dataset.hpp"
#include "lidas/proxy.hpp"
#include "lidas/relight.hpp"

using namespace lidas;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lidas_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool inside_any(const std::vector<Annotation>& anns, int y, int x) {
  for (const auto& a : anns) {
    if (x + 0.5 >= a.box.x1 && x + 0.5 < a.box.x2 && y + 0.5 >= a.box.y1 && y + 0.5 < a.box.y2) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("toy scenes are deterministic per seed and index") {
  const ScenePair a = generate_toy_scene(7, 3);
  const ScenePair b = generate_toy_scene(7, 3);
  CHECK(a.i_full == b.i_full);
  CHECK(a.i_off == b.i_off);
  CHECK(a.annotations.size() == b.annotations.size());
  CHECK_FALSE(generate_toy_scene(7, 4).i_full == a.i_full);
  CHECK_FALSE(generate_toy_scene(8, 3).i_full == a.i_full);

  const ToyCorpus c = generate_toy_corpus(5, 7);
  CHECK(c.scenes[3].i_full == a.i_full);
  CHECK(c.ids[3] == "scene_0003");
}

TEST_CASE("toy scene physics") {
  const ToyParams params;
  for (int i = 0; i < 10; ++i) {
    const ScenePair s = generate_toy_scene(11, i, params);
    CHECK(s.i_full.height() == 80);
    CHECK(s.i_full.width() == 160);
    REQUIRE(s.depth);
    REQUIRE(s.semantic);
    // Light only adds.
    for (std::size_t k = 0; k < s.i_full.data().size(); ++k) CHECK(s.i_full.data()[k] >= s.i_off.data()[k]);
    for (const auto& a : s.annotations) {
      REQUIRE(a.distance_m);
      CHECK(*a.distance_m >= params.min_distance_m);
      CHECK(*a.distance_m <= params.max_distance_m);
      CHECK(a.box.x1 >= 0);
      CHECK(a.box.x2 <= 160);
      // Feet sit on the ground plane.
      CHECK(a.box.y2 == doctest::Approx(params.horizon_row + params.focal * params.camera_height_m / *a.distance_m));
    }
    // Distractors emit the same light in both renders.
    for (const auto& d : s.distractors) {
      CHECK_FALSE(d.distance_m.has_value());
      const int y = static_cast<int>(d.box.y1);
      const int x = static_cast<int>(d.box.x1);
      for (int c = 0; c < 3; ++c) CHECK(s.i_full.at(y, x, c) == s.i_off.at(y, x, c));
      CHECK(s.i_off.at(y, x, 0) > 0.4F);
    }
    // Labels follow the boxes.
    for (int y = 0; y < 80; ++y) {
      for (int x = 0; x < 160; ++x) {
        const std::uint8_t l = s.semantic->at(y, x, 0);
        if (inside_any(s.annotations, y, x)) {
          CHECK((l == kPedestrianLabel || l == kCarLabel));
        } else if (y + 0.0 > params.horizon_row) {
          CHECK(l == kRoad);
        } else {
          CHECK(l == kVoid);
        }
      }
    }
  }
}

TEST_CASE("without ambient light only emitters show in the unlit render") {
  ToyParams dark;
  dark.max_ambient = 0.0;
  dark.max_distractors = 2;
  for (int i = 0; i < 5; ++i) {
    const ScenePair s = generate_toy_scene(13, i, dark);
    for (int y = 0; y < dark.height; ++y) {
      for (int x = 0; x < dark.width; ++x) {
        if (inside_any(s.distractors, y, x)) continue;
        for (int c = 0; c < 3; ++c) CHECK(s.i_off.at(y, x, c) == 0.0F);
      }
    }
  }
}

TEST_CASE("beam gain falls with distance") {
  // Ground pixels farther down the image are closer and brighter in the lit render.
  const ScenePair s = generate_toy_scene(17, 0);
  double near = 0.0, far = 0.0;
  int n_near = 0, n_far = 0;
  for (int x = 0; x < 160; ++x) {
    if (s.semantic->at(78, x, 0) == kRoad) {
      near += s.i_full.at(78, x, 1);
      ++n_near;
    }
    if (s.semantic->at(31, x, 0) == kRoad) {
      far += s.i_full.at(31, x, 1);
      ++n_far;
    }
  }
  REQUIRE(n_near > 0);
  REQUIRE(n_far > 0);
  CHECK(near / n_near > 4.0 * far / n_far);
}

TEST_CASE("toy parameter validation") {
  ToyParams p;
  p.horizon_row = 4;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ToyParams{};
  p.min_distance_m = 100;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ToyParams{};
  p.max_objects = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(generate_toy_corpus(0, 1), ConfigError);
  const CameraModel cam = toy_camera(ToyParams{});
  CHECK(cam.cx == doctest::Approx(79.5));
  CHECK(cam.cy == doctest::Approx(28.0));
}

TEST_CASE("corpus round trip through the manifest") {
  const fs::path dir = scratch("corpus");
  const ToyCorpus c = generate_toy_corpus(4, 21);
  write_corpus(dir, c, "val");
  const Dataset d = load_dataset(dir / "manifest.json");
  CHECK(d.split == "val");
  REQUIRE(d.size() == 4);
  REQUIRE(d.calibration);
  CHECK(d.calibration->camera == c.calibration.camera);
  for (std::size_t i = 0; i < 4; ++i) {
    const ScenePair s = d.load(i);
    CHECK(d.records[i].id == c.ids[i]);
    CHECK(s.i_full == c.scenes[i].i_full);
    CHECK(s.i_off == c.scenes[i].i_off);
    CHECK(s.depth->data == c.scenes[i].depth->data);
    CHECK(s.semantic->data == c.scenes[i].semantic->data);
    REQUIRE(s.annotations.size() == c.scenes[i].annotations.size());
    for (std::size_t k = 0; k < s.annotations.size(); ++k) {
      CHECK(s.annotations[k].box == c.scenes[i].annotations[k].box);
      CHECK(s.annotations[k].distance_m == c.scenes[i].annotations[k].distance_m);
      CHECK(s.annotations[k].class_id == c.scenes[i].annotations[k].class_id);
    }
    CHECK(s.distractors.size() == c.scenes[i].distractors.size());
  }
  CHECK_THROWS_AS(d.load(9), ValueError);
}

TEST_CASE("manifest errors") {
  const fs::path dir = scratch("bad_manifest");
  auto write = [&](const std::string& text) {
    std::ofstream(dir / "manifest.json") << text;
    return dir / "manifest.json";
  };
  CHECK_THROWS_AS(load_dataset(write("{oops")), ConfigError);
  CHECK_THROWS_AS(load_dataset(write(R"({"scenes": [{"id": "a"}]})")), ConfigError);
  CHECK_THROWS_AS(load_dataset(write(R"({"split": "dev", "scenes": []})")), ConfigError);
  CHECK_THROWS_AS(load_dataset(write(R"({"scenes": [{"id": "a", "i_full": "x.png", "i_off": "y.png"}]})")), IoError);
  CHECK_THROWS_AS(load_dataset(dir / "absent.json"), IoError);
}

TEST_CASE("proxy detector responds to light") {
  const ScenePair s = generate_toy_scene(23, 1);
  REQUIRE_FALSE(s.annotations.empty());
  const auto dark = proxy_detect(s.i_off, s.annotations, {});
  const auto lit = proxy_detect(s.i_full, s.annotations, {});
  CHECK(lit.size() >= dark.size());
  for (const auto& d : lit) {
    CHECK(d.conf > 0.0);
    CHECK(d.conf < 1.0);
  }
  // A box with contrast c gets conf c / (c + 0.05) and shifts by 0.3 (1 - conf) of its width.
  std::vector<float> px(100, 0.1F);
  for (int y = 4; y < 6; ++y) {
    for (int x = 4; x < 6; ++x) px[y * 10 + x] = 0.15F;
  }
  const Image im(10, 10, 1, std::move(px));
  const std::vector<Annotation> obj{{0, {4, 4, 6, 6}, std::nullopt, 5.0}};
  const auto det = proxy_detect(im, obj, {});
  REQUIRE(det.size() == 1);
  CHECK(det[0].conf == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(det[0].box.x1 == doctest::Approx(4.3).epsilon(1e-5));
  CHECK(det[0].box.y1 == 4.0);
  ProxyDetectorParams strict;
  strict.threshold = 0.2;
  CHECK(proxy_detect(im, obj, {}, strict).empty());
  CHECK(proxy_detect(im, {}, obj).size() == 1);
}

TEST_CASE("proxy segmenter") {
  Image im(1, 4, 1, std::vector<float>{0.01F, 0.5F, 0.99F, 0.5F});
  LabelMap truth(1, 4, 1);
  truth.data = {2, 3, 2, 0};
  const LabelMap out = proxy_segment(im, truth);
  CHECK(out.data == std::vector<std::uint8_t>{kRoad, 3, kRoad, 0});
  CHECK_THROWS_AS(proxy_segment(Image(2, 2, 1), truth), ShapeError);
}
