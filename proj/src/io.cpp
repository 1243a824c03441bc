#include "bfseg/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bfseg/errors.hpp"

namespace bfseg {
namespace fs = std::filesystem;

namespace {

png_uint_32 png_format(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    default: throw DimensionError("PNG images must have 1 or 3 channels");
  }
}

}  // namespace

Image8 read_png(const fs::path& path, int channels) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = png_format(channels);
  Image8 out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = channels;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image8& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = png_format(image.channels);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encoding failed: ") + img.message);
  }
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&img, bytes.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encoding failed: ") + img.message);
  }
  bytes.resize(size);
  return bytes;
}

void write_png(const fs::path& path, const Image8& image) {
  const auto bytes = encode_png(image);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
    throw IoError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

Tensor image_to_tensor(const Image8& rgb) {
  Tensor t(rgb.channels, rgb.height, rgb.width);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      for (int c = 0; c < rgb.channels; ++c) {
        t.at(c, y, x) = rgb.pixels[(static_cast<std::size_t>(y) * rgb.width + x) * rgb.channels + c] / 255.0;
      }
    }
  }
  return t;
}

Image8 tensor_to_image(const Tensor& t) {
  Image8 img{t.width, t.height, t.channels, {}};
  img.pixels.resize(static_cast<std::size_t>(t.width) * t.height * t.channels);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      for (int c = 0; c < t.channels; ++c) {
        const double v = std::clamp(t.at(c, y, x), 0.0, 1.0);
        img.pixels[(static_cast<std::size_t>(y) * t.width + x) * t.channels + c] =
            static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  }
  return img;
}

Image8 label_to_image(const LabelRaster& y) {
  Image8 img{y.width, y.height, 1, std::vector<std::uint8_t>(y.size())};
  for (std::size_t i = 0; i < y.size(); ++i) img.pixels[i] = y.values[i] ? 255 : 0;
  return img;
}

}  // namespace bfseg
