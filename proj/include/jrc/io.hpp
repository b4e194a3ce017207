// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jrc/types.hpp"

namespace jrc::io {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    require(!ec, ErrorCode::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream f(path, binary ? std::ios::binary | std::ios::out | std::ios::trunc : std::ios::out | std::ios::trunc);
  require(f.good(), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return f;
}

/// Minimal CSV writer: a header row followed by rows of cells.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(open_out(path)) {
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    require(out_.good(), ErrorCode::Io, "write failed on " + path_.string());
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }

namespace detail {

inline void put_u64(std::ostream& o, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  o.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

inline void put_f64(std::ostream& o, double d) {
  std::uint64_t u = 0;
  std::memcpy(&u, &d, sizeof u);
  put_u64(o, u);
}

inline double get_f64(std::istream& in) {
  const std::uint64_t u = get_u64(in);
  double d = 0.0;
  std::memcpy(&d, &u, sizeof d);
  return d;
}

} // namespace detail

inline constexpr std::string_view kTensorMagic = "JRCTNSR1";

/// Binary tensor: 8-byte magic, three little-endian uint64 dimensions, then
/// row-major (last index fastest) interleaved re/im little-endian float64.
inline void write_tensor_binary(const std::filesystem::path& path, const Tensor3& t) {
  auto f = open_out(path, true);
  f.write(kTensorMagic.data(), static_cast<std::streamsize>(kTensorMagic.size()));
  for (std::size_t i = 0; i < 3; ++i) detail::put_u64(f, t.dim(i));
  for (const auto& v : t.data()) {
    detail::put_f64(f, v.real());
    detail::put_f64(f, v.imag());
  }
  require(f.good(), ErrorCode::Io, "write failed on " + path.string());
}

inline Tensor3 read_tensor_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot open " + path.string());
  std::array<char, 8> magic{};
  f.read(magic.data(), 8);
  require(f.good() && std::string_view(magic.data(), 8) == kTensorMagic, ErrorCode::Io,
          path.string() + " is not a tensor file");
  const auto d0 = detail::get_u64(f), d1 = detail::get_u64(f), d2 = detail::get_u64(f);
  Tensor3 t(d0, d1, d2);
  for (auto& v : t.data()) {
    const double re = detail::get_f64(f);
    const double im = detail::get_f64(f);
    v = {re, im};
  }
  require(f.good(), ErrorCode::Io, path.string() + " is truncated");
  return t;
}

/// CSV form of a tensor: one row per element, i0,i1,i2,re,im.
inline void write_tensor_csv(const std::filesystem::path& path, const Tensor3& t) {
  CsvWriter w(path, {"i0", "i1", "i2", "re", "im"});
  for (std::size_t a = 0; a < t.dim(0); ++a)
    for (std::size_t b = 0; b < t.dim(1); ++b)
      for (std::size_t c = 0; c < t.dim(2); ++c)
        w.row({cell(a), cell(b), cell(c), cell(t(a, b, c).real()), cell(t(a, b, c).imag())});
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view s, const std::string& where) {
  const auto t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  require(res.ec == std::errc{} && res.ptr == t.data() + t.size(), ErrorCode::Config,
          where + ": cannot parse '" + t + "' as a number");
  return v;
}

} // namespace jrc::io
