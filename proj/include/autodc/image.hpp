/*
 * Copyright 2026 The AutoDC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "autodc/error.hpp"
#include "autodc/io.hpp"

namespace autodc {

/// 8-bit RGB image, row-major, channels interleaved.
struct ImageBuf {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  ImageBuf() = default;
  ImageBuf(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(3 * w * h, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) noexcept {
    return pixels[3 * (y * width + x) + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const noexcept {
    return pixels[3 * (y * width + x) + c];
  }

  bool operator==(const ImageBuf&) const = default;
};

/// Decodes any PNG libpng understands into 8-bit RGB (alpha dropped, gray
/// expanded, 16-bit reduced).
inline ImageBuf read_png(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, path.string());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorCode::IoFailure, path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  ImageBuf out(image.width, image.height);
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::IoFailure, path.string() + ": " + image.message);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_png(const ImageBuf& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, img.pixels.data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, img.pixels.data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  bytes.resize(size);
  return bytes;
}

inline void write_png(const ImageBuf& img, const fs::path& path) {
  const auto bytes = encode_png(img);
  write_file_atomic(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace autodc
