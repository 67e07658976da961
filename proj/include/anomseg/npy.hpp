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

// Reader/writer for the NPY binary tensor format, restricted to the two
// element types the engine exchanges: little-endian float32 ('<f4') and
// uint8 ('|u1'). Files are written as format version 1.0 in C order.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg::npy {

inline constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

enum class DType { kFloat32, kUInt8 };

inline const char* descr(DType d) {
  return d == DType::kFloat32 ? "<f4" : "|u1";
}
inline std::size_t item_size(DType d) { return d == DType::kFloat32 ? 4 : 1; }

struct Header {
  DType dtype = DType::kFloat32;
  bool fortran_order = false;
  Shape shape;
};

using AnyTensor = std::variant<Tensor<float>, Tensor<std::uint8_t>>;

namespace detail {

// Parses the Python dict literal of an NPY header. Only the three keys the
// format defines are accepted.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : s_(text) {}

  Header parse() {
    Header h;
    bool have_descr = false, have_order = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = quoted();
      expect(':');
      if (key == "descr") {
        const std::string d = quoted();
        if (d == "<f4") {
          h.dtype = DType::kFloat32;
        } else if (d == "|u1" || d == "<u1" || d == ">u1") {
          h.dtype = DType::kUInt8;
        } else {
          throw FormatError("unsupported NPY element type '" + d +
                            "' (expected '<f4' or '|u1')");
        }
        have_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = boolean();
        have_order = true;
      } else if (key == "shape") {
        h.shape = tuple();
        have_shape = true;
      } else {
        throw FormatError("unexpected NPY header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after header dict");
    if (!have_descr || !have_order || !have_shape) {
      fail("header dict is missing one of descr/fortran_order/shape");
    }
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("malformed NPY header: " + why);
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    const auto end = s_.find(q, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }
  bool boolean() {
    skip_ws();
    if (s_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  Shape tuple() {
    expect('(');
    Shape shape;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return shape;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        fail("shape entries must be non-negative integers");
      }
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(s_[pos_++] - '0');
      }
      shape.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape");
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::uint32_t read_le(const unsigned char* p, std::size_t n) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= std::uint32_t{p[i]} << (8 * i);
  return v;
}

}  // namespace detail

inline Header parse_header(std::string_view dict) {
  return detail::HeaderParser(dict).parse();
}

/// Decodes a complete NPY image held in memory.
inline AnyTensor decode(std::span<const unsigned char> bytes) {
  if (bytes.size() < 10 ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char a, unsigned char b) {
                    return static_cast<unsigned char>(a) == b;
                  })) {
    throw FormatError("missing NPY magic string");
  }
  const unsigned major = bytes[6];
  std::size_t len_bytes = 0;
  if (major == 1) {
    len_bytes = 2;
  } else if (major == 2 || major == 3) {
    len_bytes = 4;
  } else {
    throw FormatError("unsupported NPY format version " +
                      std::to_string(major) + "." + std::to_string(bytes[7]));
  }
  if (bytes.size() < 8 + len_bytes) throw FormatError("truncated NPY header");
  const std::size_t header_len = detail::read_le(bytes.data() + 8, len_bytes);
  const std::size_t data_offset = 8 + len_bytes + header_len;
  if (bytes.size() < data_offset) throw FormatError("truncated NPY header");

  const std::string_view dict(
      reinterpret_cast<const char*>(bytes.data()) + 8 + len_bytes, header_len);
  const Header h = parse_header(dict);
  if (h.fortran_order) {
    throw FormatError("Fortran-ordered NPY arrays are not supported");
  }

  const std::size_t count = element_count(h.shape);
  const std::size_t expected = count * item_size(h.dtype);
  const std::size_t actual = bytes.size() - data_offset;
  if (actual != expected) {
    throw FormatError("NPY payload holds " + std::to_string(actual) +
                      " bytes but shape " + shape_to_string(h.shape) +
                      " needs " + std::to_string(expected));
  }
  const unsigned char* payload = bytes.data() + data_offset;

  if (h.dtype == DType::kUInt8) {
    return Tensor<std::uint8_t>(h.shape,
                                std::vector<std::uint8_t>(payload,
                                                          payload + count));
  }
  std::vector<float> data(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), payload, expected);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(detail::read_le(payload + 4 * i, 4));
    }
  }
  return Tensor<float>(h.shape, std::move(data));
}

inline AnyTensor read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Header bytes (magic through padding) for a version 1.0 file.
inline std::string encode_header(DType dtype, const Shape& shape) {
  std::string dict = "{'descr': '";
  dict += descr(dtype);
  dict += "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // Pad with spaces so magic + version + length + dict + '\n' is a multiple
  // of 64 bytes.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';

  std::string out(kMagic.begin(), kMagic.end());
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(dict.size() & 0xff);
  out += static_cast<char>((dict.size() >> 8) & 0xff);
  out += dict;
  return out;
}

template <typename T>
std::string encode(const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, std::uint8_t>,
                "NPY interchange supports float32 and uint8 only");
  constexpr DType dtype =
      std::is_same_v<T, float> ? DType::kFloat32 : DType::kUInt8;
  std::string out = encode_header(dtype, t.shape());
  const auto v = t.values();
  if constexpr (std::is_same_v<T, float> &&
                std::endian::native != std::endian::little) {
    for (float x : v) {
      const auto u = std::bit_cast<std::uint32_t>(x);
      for (int b = 0; b < 4; ++b) out += static_cast<char>((u >> (8 * b)) & 0xff);
    }
  } else {
    out.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
  }
  return out;
}

template <typename T>
void write(const std::filesystem::path& path, const Tensor<T>& t) {
  const std::string bytes = encode(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace anomseg::npy
