#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lidas/image.hpp"

namespace lidas::io {

// Raw float32 container: "LIDF", u32 height, u32 width, u32 channels, then
// H*W*C little-endian float32 values in row-major, channel-interleaved order.

Raster<float> read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const Raster<float>& raster);
void write_raw(const std::filesystem::path& path, std::span<const float> data, int height,
               int width, int channels);

std::vector<std::uint8_t> encode_raw(std::span<const float> data, int height, int width,
                                     int channels);
Raster<float> decode_raw(std::span<const std::uint8_t> bytes);

/// 8- or 16-bit grayscale/RGB(A) PNG; alpha is dropped, values scaled to [0,1].
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);
std::vector<std::uint8_t> encode_png(const Image& image, int bit_depth = 8);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Dispatches on extension: .png or .lidf.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);
LightField read_field(const std::filesystem::path& path);
void write_field(const std::filesystem::path& path, const LightField& field);
DepthMap read_depth(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lidas::io
