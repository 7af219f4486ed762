#pragma once

// Matrix files:
//   CSV  headerless, one matrix row per line, full-precision decimals.
//   KMX1 "KMX1", u32 rows, u32 cols, rows*cols f64, all little-endian, row-major.
//   KST1 "KST1", u32 count, u32 rows, u32 cols, then count KMX-style payloads.

#include <filesystem>
#include <string>
#include <vector>

#include "kpf/mat.hpp"

namespace kpf::io {

/// Shortest text that re-parses to exactly x (at most 17 significant digits).
std::string format_double(double x);
/// InputError on anything that is not a complete decimal number.
double parse_double(std::string_view s);

Mat read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Mat& m);

Mat read_kmx(const std::filesystem::path& path);
void write_kmx(const std::filesystem::path& path, const Mat& m);

std::vector<Mat> read_kst(const std::filesystem::path& path);
void write_kst(const std::filesystem::path& path, const std::vector<Mat>& mats);

enum class FileKind { Csv, Kmx, Kst };
/// Sniffs the magic bytes; anything else is CSV.
FileKind detect_kind(const std::filesystem::path& path);

/// Any single-matrix file (CSV or KMX).
Mat read_matrix(const std::filesystem::path& path);
/// KMX when the extension is .kmx, CSV otherwise.
void write_matrix(const std::filesystem::path& path, const Mat& m);

/// A KST stack, or a single CSV/KMX matrix as a stack of one.
std::vector<Mat> read_stack(const std::filesystem::path& path);

}  // namespace kpf::io
