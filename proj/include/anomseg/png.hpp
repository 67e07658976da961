// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// PNG input/output. Decoding goes through libpng. Encoding emits the zlib
// stream as uncompressed (stored) deflate blocks so the output bytes depend
// only on the pixels and never on the installed zlib's compressor.

#pragma once

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anomseg/errors.hpp"

namespace anomseg::png {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 = gray, 3 = RGB
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

namespace detail {

inline void put_u32_be(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xff);
  out += static_cast<char>((v >> 16) & 0xff);
  out += static_cast<char>((v >> 8) & 0xff);
  out += static_cast<char>(v & 0xff);
}

inline void put_chunk(std::string& out, std::string_view type,
                      std::string_view body) {
  put_u32_be(out, static_cast<std::uint32_t>(body.size()));
  std::string typed(type);
  typed += body;
  out += typed;
  const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(typed.data()),
                           static_cast<uInt>(typed.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

// zlib container around stored deflate blocks.
inline std::string stored_zlib(std::string_view raw) {
  constexpr std::size_t kMaxBlock = 65535;
  std::string out;
  out += '\x78';
  out += '\x01';
  std::size_t pos = 0;
  do {
    const std::size_t n = std::min(kMaxBlock, raw.size() - pos);
    const bool last = pos + n == raw.size();
    out += static_cast<char>(last ? 1 : 0);
    out += static_cast<char>(n & 0xff);
    out += static_cast<char>((n >> 8) & 0xff);
    out += static_cast<char>(~n & 0xff);
    out += static_cast<char>((~n >> 8) & 0xff);
    out.append(raw.substr(pos, n));
    pos += n;
  } while (pos < raw.size());
  const auto adler =
      ::adler32(1L, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uInt>(raw.size()));
  put_u32_be(out, static_cast<std::uint32_t>(adler));
  return out;
}

}  // namespace detail

/// Encodes an 8-bit gray or RGB image. `text` entries become tEXt chunks.
inline std::string encode(
    const Image& img,
    const std::vector<std::pair<std::string, std::string>>& text = {}) {
  if (img.channels != 1 && img.channels != 3) {
    throw FormatError("PNG encoder supports 1 or 3 channels");
  }
  if (img.pixels.size() != img.width * img.height * img.channels) {
    throw FormatError("PNG pixel buffer does not match its dimensions");
  }
  std::string out("\x89PNG\r\n\x1a\n", 8);

  std::string ihdr;
  detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += '\x08';                                  // bit depth
  ihdr += static_cast<char>(img.channels == 3 ? 2 : 0);  // color type
  ihdr += '\x00';                                  // deflate
  ihdr += '\x00';                                  // adaptive filtering
  ihdr += '\x00';                                  // no interlace
  detail::put_chunk(out, "IHDR", ihdr);

  for (const auto& [key, value] : text) {
    detail::put_chunk(out, "tEXt", key + std::string(1, '\0') + value);
  }

  const std::size_t stride = img.width * img.channels;
  std::string raw;
  raw.reserve((stride + 1) * img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    raw += '\x00';  // filter type None
    raw.append(reinterpret_cast<const char*>(img.pixels.data() + y * stride),
               stride);
  }
  detail::put_chunk(out, "IDAT", detail::stored_zlib(raw));
  detail::put_chunk(out, "IEND", "");
  return out;
}

inline void write(
    const std::filesystem::path& path, const Image& img,
    const std::vector<std::pair<std::string, std::string>>& text = {}) {
  const std::string bytes = encode(img, text);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

/// Decodes an 8-bit PNG without any color conversion. Images that are not
/// plain 8-bit gray or RGB are rejected.
inline Image read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("cannot open " + path.string());
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": " + msg);
  }
  const auto fmt = image.format;
  if (fmt != PNG_FORMAT_GRAY && fmt != PNG_FORMAT_RGB) {
    png_image_free(&image);
    throw FormatError(path.string() +
                      ": only 8-bit grayscale or RGB PNG without alpha, "
                      "palette or 16-bit samples is supported");
  }
  Image out;
  out.width = image.width;
  out.height = image.height;
  out.channels = PNG_IMAGE_SAMPLE_CHANNELS(fmt);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": " + msg);
  }
  return out;
}

}  // namespace anomseg::png
