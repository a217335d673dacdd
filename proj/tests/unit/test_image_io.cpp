#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "lidas/image.hpp"
#include "lidas/image_io.hpp"

using namespace lidas;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lidas_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("image construction validates shape and range") {
  CHECK_THROWS_AS(Image(0, 4, 3), ShapeError);
  CHECK_THROWS_AS(Image(4, 4, 2), ShapeError);
  CHECK_THROWS_AS(Image(2, 2, 1, std::vector<float>(3, 0.5F)), ShapeError);
  CHECK_THROWS_AS(Image(1, 2, 1, std::vector<float>{0.5F, 1.5F}), ValueError);
  CHECK_THROWS_AS(Image(1, 1, 1, std::vector<float>{std::nanf("")}), ValueError);
  CHECK_THROWS_AS(LightField(2, 2, -0.1F), ValueError);
  const Image ok(2, 3, 3, 0.25F);
  CHECK(ok.pixel_count() == 6);
  CHECK(ok.at(1, 2, 2) == doctest::Approx(0.25));
}

TEST_CASE("luminance uses Rec.709 weights") {
  const Image im(1, 1, 3, std::vector<float>{1.0F, 0.0F, 0.0F});
  CHECK(im.luminance()[0] == doctest::Approx(0.2126));
  const Image gray(1, 1, 1, std::vector<float>{0.3F});
  CHECK(gray.luminance()[0] == doctest::Approx(0.3));
}

TEST_CASE("iou of boxes") {
  const Box a{0, 0, 2, 2};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, Box{2, 0, 4, 2}) == 0.0);
  CHECK(iou(a, Box{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou(a, Box{1, 1, 1, 1}) == 0.0);
}

TEST_CASE("scene validation catches mismatched renders and boxes") {
  std::mt19937_64 rng(1);
  ScenePair p = fixture::random_pair(8, 10, rng);
  CHECK_NOTHROW(p.validate());
  p.annotations.push_back({0, {5, 5, 11, 7}, std::nullopt, 1.0});
  CHECK_THROWS_AS(p.validate(), ShapeError);
  p.annotations.pop_back();
  p.i_off = Image(8, 9, 3);
  CHECK_THROWS_AS(p.validate(), ShapeError);
}

TEST_CASE("raw container round trips bit-exactly") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 17);
    const int h = dim(rng), w = dim(rng), c = trial % 2 ? 3 : 1;
    const Image im = fixture::random_image(h, w, c, rng);
    const auto bytes = io::encode_raw(im.data(), h, w, c);
    const auto back = io::decode_raw(bytes);
    CHECK(back.height == h);
    CHECK(back.width == w);
    CHECK(back.channels == c);
    CHECK(std::equal(back.data.begin(), back.data.end(), im.data().begin()));
  }
}

TEST_CASE("raw container rejects corrupt input") {
  std::vector<std::uint8_t> bytes = io::encode_raw(std::vector<float>(4, 0.5F), 2, 2, 1);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_raw(bad_magic), IoError);
  bytes.pop_back();
  CHECK_THROWS_AS(io::decode_raw(bytes), IoError);
}

TEST_CASE("png round trip stays within quantization") {
  std::mt19937_64 rng(3);
  const Image im = fixture::random_image(7, 9, 3, rng);
  for (int depth : {8, 16}) {
    const Image back = io::decode_png(io::encode_png(im, depth));
    REQUIRE(back.same_shape(im));
    const double step = depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;
    for (std::size_t i = 0; i < im.data().size(); ++i) {
      CHECK(std::abs(back.data()[i] - im.data()[i]) <= 0.5 * step + 1e-7);
    }
    // Quantized values survive a second trip unchanged.
    CHECK(io::decode_png(io::encode_png(back, depth)) == back);
  }
}

TEST_CASE("files dispatch on extension") {
  std::mt19937_64 rng(4);
  const Image im = fixture::random_image(5, 6, 3, rng);
  io::write_image(scratch("a.lidf"), im);
  CHECK(io::read_image(scratch("a.lidf")) == im);
  io::write_image(scratch("a.png"), im);
  CHECK(io::read_image(scratch("a.png")).same_shape(im));
  const LightField f = fixture::random_field(5, 6, rng);
  io::write_field(scratch("f.lidf"), f);
  CHECK(io::read_field(scratch("f.lidf")) == f);
  CHECK_THROWS_AS(io::read_image(scratch("missing.lidf")), IoError);
}

TEST_CASE("base64 round trip") {
  std::mt19937_64 rng(5);
  for (std::size_t n : {0U, 1U, 2U, 3U, 4U, 31U, 1000U}) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) b = static_cast<std::uint8_t>(rng());
    CHECK(io::base64_decode(io::base64_encode(v)) == v);
  }
  CHECK(io::base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
  CHECK_THROWS_AS(io::base64_decode("@@@"), IoError);
}
