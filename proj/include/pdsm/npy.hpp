// Copyright 2026 The PDSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reader/writer for the NPY v1.0 subset used for every matrix on disk:
// magic "\x93NUMPY", version 1.0, little-endian u16 header length, a Python
// dict literal header with descr '<f4' or '<f8', fortran_order False and a
// 1- or 2-element shape tuple, then C-order little-endian payload. Files
// written here are byte-identical to numpy.save for the same array.

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdsm/error.hpp"
#include "pdsm/matrix.hpp"

namespace pdsm {

enum class Precision { f32, f64 };

struct NpyArray {
  std::vector<std::size_t> shape;  // 1 or 2 entries
  std::vector<double> values;      // C order, widened to double
  Precision stored = Precision::f64;
};

namespace npy_detail {

inline constexpr std::string_view kMagic{"\x93NUMPY", 6};
inline constexpr std::size_t kPrefixLen = 10;  // magic + version + u16 length
inline constexpr std::size_t kAlign = 64;

static_assert(std::endian::native == std::endian::little,
              "NPY payload I/O assumes a little-endian host");

class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  NpyArray parse() {
    NpyArray out;
    std::optional<std::string> descr;
    std::optional<bool> fortran;
    std::optional<std::vector<std::size_t>> shape;

    skip_ws();
    expect('{');
    for (;;) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = parse_string();
      } else if (key == "fortran_order") {
        fortran = parse_bool();
      } else if (key == "shape") {
        shape = parse_tuple();
      } else {
        fail("unknown header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    if (!descr || !fortran || !shape) fail("header missing descr, fortran_order or shape");
    if (*fortran) throw UnsupportedError("npy: fortran_order arrays are not supported", kPrefixLen);
    if (*descr == "<f8") {
      out.stored = Precision::f64;
    } else if (*descr == "<f4") {
      out.stored = Precision::f32;
    } else {
      throw UnsupportedError("npy: unsupported dtype '" + *descr + "'", kPrefixLen);
    }
    if (shape->empty() || shape->size() > 2)
      throw UnsupportedError("npy: only 1-D and 2-D arrays are supported, got " +
                                 std::to_string(shape->size()) + " dims",
                             kPrefixLen);
    out.shape = std::move(*shape);
    return out;
  }

 private:
  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of header");
    return text_[pos_];
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("npy: malformed header: " + msg, kPrefixLen + pos_);
  }
  std::string parse_string() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected string literal");
    ++pos_;
    const std::size_t start = pos_;
    while (peek() != q) ++pos_;
    std::string s(text_.substr(start, pos_ - start));
    ++pos_;
    return s;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> parse_tuple() {
    std::vector<std::size_t> dims;
    expect('(');
    for (;;) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected dimension");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + static_cast<std::size_t>(peek() - '0'), ++pos_;
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

}  // namespace npy_detail

/// Parse an in-memory NPY image.
inline NpyArray parse_npy(std::string_view bytes) {
  using namespace npy_detail;
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    throw FormatError("npy: bad magic string", 0);
  if (bytes.size() < kPrefixLen) throw FormatError("npy: truncated preamble", bytes.size());
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0)
    throw UnsupportedError("npy: unsupported format version " + std::to_string(major) + "." +
                               std::to_string(minor),
                           6);
  const std::size_t hlen = static_cast<unsigned char>(bytes[8]) |
                           (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPrefixLen + hlen) throw FormatError("npy: truncated header", bytes.size());

  NpyArray arr = HeaderParser(bytes.substr(kPrefixLen, hlen)).parse();
  std::size_t count = 1;
  for (auto d : arr.shape) count *= d;
  const std::size_t width = arr.stored == Precision::f64 ? 8 : 4;
  const std::size_t offset = kPrefixLen + hlen;
  if (bytes.size() != offset + count * width)
    throw FormatError("npy: payload is " + std::to_string(bytes.size() - offset) +
                          " bytes, expected " + std::to_string(count * width),
                      offset);
  arr.values.resize(count);
  const char* p = bytes.data() + offset;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    if (arr.stored == Precision::f64) {
      double v;
      std::memcpy(&v, p, 8);
      arr.values[i] = v;
    } else {
      float v;
      std::memcpy(&v, p, 4);
      arr.values[i] = static_cast<double>(v);
    }
  }
  return arr;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

inline NpyArray load_npy(const std::filesystem::path& path) {
  return parse_npy(read_file_bytes(path));
}

/// Load a 1-D or 2-D array as a matrix; 1-D arrays become a single row.
inline Matrix load_matrix(const std::filesystem::path& path) {
  NpyArray a = load_npy(path);
  const std::size_t rows = a.shape.size() == 2 ? a.shape[0] : 1;
  const std::size_t cols = a.shape.back();
  return Matrix(rows, cols, std::move(a.values));
}

/// Serialize values with the given shape. Rejects empty dimensions and
/// non-finite values.
inline std::string encode_npy(std::span<const double> values, const std::vector<std::size_t>& shape,
                              Precision precision) {
  using namespace npy_detail;
  require(!shape.empty() && shape.size() <= 2, "npy: only 1-D and 2-D arrays are supported");
  std::size_t count = 1;
  for (auto d : shape) {
    require(d > 0, "npy: refusing to write an array with an empty dimension");
    count *= d;
  }
  require(values.size() == count, "npy: value count does not match shape");
  for (double v : values) require(std::isfinite(v), "npy: refusing to write non-finite value");

  std::string header = "{'descr': '";
  header += precision == Precision::f64 ? "<f8" : "<f4";
  header += "', 'fortran_order': False, 'shape': " + shape_literal(shape) + ", }";
  const std::size_t hlen = header.size() + 1;
  const std::size_t padlen = kAlign - ((kPrefixLen + hlen) % kAlign);
  header.append(padlen, ' ');
  header += '\n';

  std::string out(kMagic);
  out += '\x01';
  out += '\x00';
  const std::size_t total = header.size();
  require(total <= 0xFFFF, "npy: header too long for format 1.0");
  out += static_cast<char>(total & 0xFF);
  out += static_cast<char>((total >> 8) & 0xFF);
  out += header;

  const std::size_t width = precision == Precision::f64 ? 8 : 4;
  const std::size_t offset = out.size();
  out.resize(offset + count * width);
  char* p = out.data() + offset;
  for (double v : values) {
    if (precision == Precision::f64) {
      std::memcpy(p, &v, 8);
    } else {
      const float f = static_cast<float>(v);
      std::memcpy(p, &f, 4);
    }
    p += width;
  }
  return out;
}

inline void save_matrix(const Matrix& m, const std::filesystem::path& path,
                        Precision precision = Precision::f64) {
  write_file_bytes(path, encode_npy(m.values(), {m.rows(), m.cols()}, precision));
}

inline void save_vector(std::span<const double> v, const std::filesystem::path& path,
                        Precision precision = Precision::f64) {
  write_file_bytes(path, encode_npy(v, {v.size()}, precision));
}

}  // namespace pdsm
