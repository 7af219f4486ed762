#pragma once

// kroprofac command line: simulate | fit | predict | spectrum | twogroup.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpf/analysis.hpp"
#include "kpf/model.hpp"

namespace kpf {

enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitInput = 2,
  kExitNumeric = 3,
  kExitConfig = 4,
};

/// Runs the tool on argv-style arguments (args[0] is the program name).
/// Messages go to `out` / `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Loads per-sample matrices. Accepts a KST stack of rows x cols matrices,
/// a single rows x cols matrix, or one matrix whose i-th row is vec(sample_i).
std::vector<Mat> load_samples(const std::filesystem::path& path, std::size_t rows,
                              std::size_t cols);

/// Stacks per-sample matrices into a Dataset (row i = vec(X_i), vec(Y_i)).
Dataset assemble_dataset(const Dims& dims, const std::vector<Mat>& xs, const std::vector<Mat>& ys);

/// Every .csv/.kmx/.kst file of a directory in lexicographic order; KST files
/// contribute all their matrices. InputError names the first file whose
/// shape disagrees with the first sample.
GroupData load_group(const std::filesystem::path& dir, const std::string& label);

}  // namespace kpf
