#include "kpf/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kpf/errors.hpp"

namespace kpf::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError("not a number: '" + std::string(s) + "'");
  return v;
}

Mat read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
      double v;
      try {
        v = parse_double(field);
      } catch (const InputError& e) {
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
      if (!std::isfinite(v))
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": non-finite entry");
      data.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(cols) + " fields, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw InputError(path.string() + ": empty matrix file");
  return Mat(rows, cols, std::move(data));
}

void write_csv(const fs::path& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

namespace {

constexpr std::array<char, 4> kKmxMagic{'K', 'M', 'X', '1'};
constexpr std::array<char, 4> kKstMagic{'K', 'S', 'T', '1'};

std::uint32_t to_le32(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::uint64_t swap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFFu);
  return r;
}

void write_u32(std::ostream& out, std::size_t v) {
  if (v > 0xFFFFFFFFu) throw InputError("dimension exceeds the 32-bit header field");
  const std::uint32_t le = to_le32(static_cast<std::uint32_t>(v));
  out.write(reinterpret_cast<const char*>(&le), 4);
}

std::uint32_t read_u32(std::istream& in, const fs::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw InputError(path.string() + ": truncated header");
  return to_le32(v);
}

void write_payload(std::ostream& out, const Mat& m) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else {
    for (double v : m.flat()) {
      const std::uint64_t b = swap64(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&b), 8);
    }
  }
}

Mat read_payload(std::istream& in, std::size_t rows, std::size_t cols, const fs::path& path) {
  Mat m(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double))))
    throw InputError(path.string() + ": truncated payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : m.flat()) v = std::bit_cast<double>(swap64(std::bit_cast<std::uint64_t>(v)));
  }
  if (!all_finite(m)) throw InputError(path.string() + ": non-finite entry");
  return m;
}

std::ifstream open_binary(const fs::path& path, const std::array<char, 4>& magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || got != magic)
    throw InputError(path.string() + ": bad magic, expected " +
                     std::string(magic.data(), magic.size()));
  return in;
}

}  // namespace

Mat read_kmx(const fs::path& path) {
  auto in = open_binary(path, kKmxMagic);
  const std::size_t rows = read_u32(in, path), cols = read_u32(in, path);
  return read_payload(in, rows, cols, path);
}

void write_kmx(const fs::path& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kKmxMagic.data(), 4);
  write_u32(out, m.rows());
  write_u32(out, m.cols());
  write_payload(out, m);
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<Mat> read_kst(const fs::path& path) {
  auto in = open_binary(path, kKstMagic);
  const std::size_t n = read_u32(in, path);
  const std::size_t rows = read_u32(in, path), cols = read_u32(in, path);
  std::vector<Mat> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(read_payload(in, rows, cols, path));
  return out;
}

void write_kst(const fs::path& path, const std::vector<Mat>& mats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::size_t rows = mats.empty() ? 0 : mats[0].rows();
  const std::size_t cols = mats.empty() ? 0 : mats[0].cols();
  out.write(kKstMagic.data(), 4);
  write_u32(out, mats.size());
  write_u32(out, rows);
  write_u32(out, cols);
  for (const auto& m : mats) {
    if (m.rows() != rows || m.cols() != cols)
      throw DimensionError("write_kst: matrices in a stack must share one shape");
    write_payload(out, m);
  }
  if (!out) throw InputError("write failed: " + path.string());
}

FileKind detect_kind(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (in.gcount() == 4) {
    if (got == kKmxMagic) return FileKind::Kmx;
    if (got == kKstMagic) return FileKind::Kst;
  }
  return FileKind::Csv;
}

Mat read_matrix(const fs::path& path) {
  switch (detect_kind(path)) {
    case FileKind::Kmx: return read_kmx(path);
    case FileKind::Csv: return read_csv(path);
    case FileKind::Kst: {
      auto s = read_kst(path);
      if (s.size() != 1) throw InputError(path.string() + ": expected one matrix, found a stack");
      return std::move(s[0]);
    }
  }
  return {};
}

void write_matrix(const fs::path& path, const Mat& m) {
  if (path.extension() == ".kmx")
    write_kmx(path, m);
  else
    write_csv(path, m);
}

std::vector<Mat> read_stack(const fs::path& path) {
  if (detect_kind(path) == FileKind::Kst) return read_kst(path);
  std::vector<Mat> v;
  v.push_back(read_matrix(path));
  return v;
}

}  // namespace kpf::io
