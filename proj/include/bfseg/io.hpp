#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bfseg/tensor.hpp"

namespace bfseg {

/// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

Image8 read_png(const std::filesystem::path& path, int channels);
std::vector<std::uint8_t> encode_png(const Image8& image);
/// Encodes and writes atomically.
void write_png(const std::filesystem::path& path, const Image8& image);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// RGB image to a (3, H, W) tensor with values in [0,1], and back.
Tensor image_to_tensor(const Image8& rgb);
Image8 tensor_to_image(const Tensor& t);

Image8 label_to_image(const LabelRaster& y);

}  // namespace bfseg
