#include "lidas/image_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lidas::io {

namespace {

constexpr char kMagic[4] = {'L', 'I', 'D', 'F'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t count) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + count > st->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, st->bytes.data() + st->offset, count);
  st->offset += count;
}

void png_write_mem(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp msg) { throw IoError(std::string("PNG: ") + msg); }

void png_warn_noop(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_raw(std::span<const float> data, int height, int width,
                                     int channels) {
  if (data.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("raw container: data length does not match header");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + data.size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(height));
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(channels));
  for (float f : data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Raster<float> decode_raw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("raw container: bad magic");
  }
  const std::uint32_t h = get_u32(bytes.data() + 4);
  const std::uint32_t w = get_u32(bytes.data() + 8);
  const std::uint32_t c = get_u32(bytes.data() + 12);
  const std::size_t count = static_cast<std::size_t>(h) * w * c;
  if (h == 0 || w == 0 || c == 0 || bytes.size() != kHeaderSize + count * 4) {
    throw IoError("raw container: header does not match payload size");
  }
  Raster<float> r(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  const std::uint8_t* p = bytes.data() + kHeaderSize;
  for (std::size_t i = 0; i < count; ++i) r.data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return r;
}

Raster<float> read_raw(const std::filesystem::path& path) {
  try {
    return decode_raw(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_raw(const std::filesystem::path& path, const Raster<float>& raster) {
  write_raw(path, raster.data, raster.height, raster.width, raster.channels);
}

void write_raw(const std::filesystem::path& path, std::span<const float> data, int height,
               int width, int channels) {
  write_file(path, encode_raw(data, height, width, channels));
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("PNG: bad signature");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_noop);
  if (png == nullptr) throw IoError("PNG: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  PngReadState state{bytes, 0};
  png_set_read_fn(png, &state, png_read_mem);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if ((color & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int ch = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  if (ch != 1 && ch != 3) throw IoError("PNG: unsupported channel count");
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());

  std::vector<float> data(static_cast<std::size_t>(h) * w * ch);
  if (out_depth == 16) {
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w * ch; ++i) {
        std::uint16_t v = 0;
        std::memcpy(&v, rows[y] + 2 * i, 2);
        data[static_cast<std::size_t>(y) * w * ch + i] = static_cast<float>(v) / 65535.0F;
      }
    }
  } else {
    for (int y = 0; y < h; ++y) {
      for (int i = 0; i < w * ch; ++i) {
        data[static_cast<std::size_t>(y) * w * ch + i] = rows[y][i] / 255.0F;
      }
    }
  }
  return Image(h, w, ch, std::move(data));
}

std::vector<std::uint8_t> encode_png(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ValueError("PNG: bit depth must be 8 or 16");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_noop);
  if (png == nullptr) throw IoError("PNG: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};

  std::vector<std::uint8_t> out;
  png_set_write_fn(png, &out, png_write_mem, png_flush_noop);
  const int h = image.height();
  const int w = image.width();
  const int ch = image.channels();
  png_set_IHDR(png, info, w, h, bit_depth, ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const int bytes_per = bit_depth / 8;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * ch * bytes_per);
  const auto data = image.data();
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w * ch; ++i) {
      const float v = data[static_cast<std::size_t>(y) * w * ch + i];
      if (bit_depth == 8) {
        row[i] = static_cast<std::uint8_t>(std::lround(v * 255.0F));
      } else {
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0F));
        row[2 * i] = static_cast<std::uint8_t>(q >> 8);  // PNG is big-endian
        row[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  return out;
}

Image read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  write_file(path, encode_png(image, bit_depth));
}

Image read_image(const std::filesystem::path& path) {
  if (lower_ext(path) == ".png") return read_png(path);
  Raster<float> r = read_raw(path);
  return Image(r.height, r.width, r.channels, std::move(r.data));
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (lower_ext(path) == ".png") {
    write_png(path, image, 16);
  } else {
    write_raw(path, image.data(), image.height(), image.width(), image.channels());
  }
}

LightField read_field(const std::filesystem::path& path) {
  if (lower_ext(path) == ".png") {
    Image img = read_png(path);
    if (img.channels() != 1) throw IoError(path.string() + ": light field PNG must be grayscale");
    return LightField(img.height(), img.width(),
                      std::vector<float>(img.data().begin(), img.data().end()));
  }
  Raster<float> r = read_raw(path);
  if (r.channels != 1) throw IoError(path.string() + ": light field container must have C=1");
  return LightField(r.height, r.width, std::move(r.data));
}

void write_field(const std::filesystem::path& path, const LightField& field) {
  write_raw(path, field.data(), field.height(), field.width(), 1);
}

DepthMap read_depth(const std::filesystem::path& path) {
  Raster<float> r = read_raw(path);
  if (r.channels != 1) throw IoError(path.string() + ": depth container must have C=1");
  return r;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw IoError("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw IoError("base64: invalid input");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lidas::io
