#pragma once

// Monte Carlo benchmark driver: fixed coefficients, fresh design and noise
// per replicate, every configured method fitted on the same data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kpf/config.hpp"

namespace kpf {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct ReplicateRecord {
  Method method;
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;   // seed_base xor replicate
  double rel_error = 0.0;   // NaN when the fit failed
  std::size_t d_selected = 0;
  std::string failure;      // empty on success
};

struct CellSummary {
  Method method;
  std::size_t n = 0;
  double mean = 0.0;            // over successful replicates
  double standard_error = 0.0;
  std::size_t count = 0;        // successful replicates
  std::size_t failures = 0;
};

/// Leading cumulative singular fractions of one replicate's OLS estimate.
struct SpectrumRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  double f1_rearranged = 0.0;  // f_1(R(nu_tilde))
  double f1_raw = 0.0;         // f_1(nu_tilde)
};

struct RunReport {
  ExperimentConfig config;
  std::vector<ReplicateRecord> records;  // ordered by n, method, replicate
  std::vector<CellSummary> cells;        // ordered by n, method
  std::vector<SpectrumRecord> spectra;   // ordered by n, replicate
  double wall_seconds = 0.0;
  std::string version{kToolVersion};
};

struct RunOptions {
  std::size_t threads = 1;
  /// When set, each replicate's data and in-process KRO-PRO-FAC fit are
  /// written here as n<N>_r<R>_X.kst, _Y.kst and _fit.json.
  std::optional<std::filesystem::path> dump_dir;
};

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// method,n,replicate,rel_error,seed; identical for any thread count.
std::string records_csv(const RunReport& report);

/// n,replicate,f1_rearranged,f1_raw
std::string spectrum_csv(const RunReport& report);

/// Threads from KROPROFAC_THREADS, else the hardware concurrency (at least 1).
std::size_t default_thread_count();

}  // namespace kpf
