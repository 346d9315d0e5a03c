#pragma once

// CSV rows and binary field snapshots.
//
// Snapshot layout (all integers u32 little-endian):
//   "NSKG" | version = 1 | N | field_count |
//   field_count x ( name_length | name bytes | N*N f64 little-endian, row-major )

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nskqg/diagnostics.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/spectral.hpp"

namespace nskqg {

inline constexpr std::array<const char*, 13> kLimitColumns = {
    "t",      "mass",       "E_eps",          "D_eps",    "E_0",          "D_0",    "H_eps",
    "visc_accum", "norm_rho_gamma", "norm_mom", "norm_kinetic", "norm_G", "norm_cap"};

/// 17 significant digits in scientific notation; locale independent.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline std::string csv_line(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  out += '\n';
  return out;
}

inline std::string csv_header(std::span<const char* const> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  out += '\n';
  return out;
}

inline std::array<double, 13> row_values(const DiagnosticsRow& r) {
  return {r.t,          r.mass,           r.E_eps,    r.D_eps,        r.E_0,
          r.D_0,        r.H_eps,          r.visc_accum, r.norm_rho_gamma, r.norm_mom,
          r.norm_kinetic, r.norm_G,       r.norm_cap};
}

/// Buffers a CSV file and writes it in one go on flush(). A single writer owns
/// each output file.
class CsvWriter {
 public:
  explicit CsvWriter(std::filesystem::path path) : path_(std::move(path)) {}

  void header(std::span<const char* const> names) { text_ += csv_header(names); }
  void row(std::span<const double> values) { text_ += csv_line(values); }
  void line(std::string_view text) {
    text_ += text;
    text_ += '\n';
  }
  void comment(std::string_view line) {
    text_ += "# ";
    text_ += line;
    text_ += '\n';
  }
  const std::string& text() const noexcept { return text_; }

  void flush() const {
    if (path_.empty()) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path_.string() + " for writing");
    f.write(text_.data(), static_cast<std::streamsize>(text_.size()));
    if (!f) throw std::runtime_error("write to " + path_.string() + " failed");
  }

 private:
  std::filesystem::path path_;
  std::string text_;
};

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b += static_cast<char>((v >> (8 * i)) & 0xffu);
}

inline void put_f64(std::string& b, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) b += static_cast<char>((v >> (8 * i)) & 0xffu);
}

inline std::uint32_t get_u32(std::string_view b, std::size_t& pos) {
  if (pos + 4 > b.size()) throw std::runtime_error("snapshot truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

inline double get_f64(std::string_view b, std::size_t& pos) {
  if (pos + 8 > b.size()) throw std::runtime_error("snapshot truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  pos += 8;
  return std::bit_cast<double>(v);
}

}  // namespace detail

using NamedField = std::pair<std::string, const ScalarField*>;

inline std::string encode_snapshot(std::span<const NamedField> fields) {
  if (fields.empty()) throw UsageError("snapshot needs at least one field");
  const int n = fields.front().second->n();
  std::string b = "NSKG";
  detail::put_u32(b, 1);
  detail::put_u32(b, static_cast<std::uint32_t>(n));
  detail::put_u32(b, static_cast<std::uint32_t>(fields.size()));
  for (const auto& [name, f] : fields) {
    if (f->n() != n) throw UsageError("snapshot fields must share one grid");
    for (char ch : name) {
      if (static_cast<unsigned char>(ch) > 127) throw UsageError("snapshot field names must be ASCII");
    }
    detail::put_u32(b, static_cast<std::uint32_t>(name.size()));
    b += name;
    for (double x : f->values()) detail::put_f64(b, x);
  }
  return b;
}

inline void write_snapshot(const std::filesystem::path& path, std::span<const NamedField> fields) {
  const std::string b = encode_snapshot(fields);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(b.data(), static_cast<std::streamsize>(b.size()));
}

struct Snapshot {
  int n = 0;
  std::vector<std::pair<std::string, ScalarField>> fields;
};

inline Snapshot decode_snapshot(std::string_view b) {
  if (b.substr(0, 4) != "NSKG") throw std::runtime_error("not a snapshot (bad magic)");
  std::size_t pos = 4;
  if (detail::get_u32(b, pos) != 1) throw std::runtime_error("unsupported snapshot version");
  Snapshot s;
  s.n = static_cast<int>(detail::get_u32(b, pos));
  const std::uint32_t count = detail::get_u32(b, pos);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = detail::get_u32(b, pos);
    if (pos + len > b.size()) throw std::runtime_error("snapshot truncated");
    std::string name(b.substr(pos, len));
    pos += len;
    ScalarField f(s.n);
    for (double& x : f.values()) x = detail::get_f64(b, pos);
    s.fields.emplace_back(std::move(name), std::move(f));
  }
  if (pos != b.size()) throw std::runtime_error("trailing bytes after snapshot");
  return s;
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  const std::string b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(b);
}

}  // namespace nskqg
