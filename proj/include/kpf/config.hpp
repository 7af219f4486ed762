#pragma once

// Experiment configuration: a flat "key = value" text file ('#' starts a
// comment). Unknown keys are rejected. Every key can be overridden from the
// command line.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kpf/model.hpp"

namespace kpf {

enum class MethodKind { Kpf, KpfAlpha, RduRank, Mle };

struct Method {
  MethodKind kind = MethodKind::Kpf;
  std::size_t param = 0;  // alpha or gamma

  /// kpf | kpf_alpha(2) | rdu_rank(2) | mle
  std::string label() const;
  friend bool operator==(const Method&, const Method&) = default;
};

/// Accepts the label form; "kpf_alpha:2" is also understood.
Method parse_method(const std::string& s);

struct ExperimentConfig {
  Dims dims{10, 10, 10, 10, 0};
  std::size_t d_true = 1;
  std::vector<std::size_t> n_grid{200};
  std::optional<NoiseModelSpec> noise = NoiseModelSpec{};  // nullopt: noiseless
  std::vector<Method> methods{Method{}};
  std::size_t replicates = 1;
  std::uint64_t seed_base = 1;
  std::string output = "run";  // prefix for <output>.csv / <output>.json
  std::optional<std::size_t> d_bar;
  std::optional<std::size_t> d_fit;  // fixed d for every method; default: rank selection
  bool record_spectrum = false;
  bool dump = false;
  std::size_t mle_max_iter = 100;
  double mle_tol = 1e-6;

  /// ConfigError on invalid combinations.
  void validate() const;
};

/// All recognised keys, in documentation order.
const std::vector<std::string>& config_keys();

/// key -> raw value. ConfigError on syntax errors or unknown keys.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Builds and validates a config from raw key/value pairs.
ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv);

/// key -> value lines that config_from_map reads back to the same config.
std::map<std::string, std::string> config_to_map(const ExperimentConfig& cfg);

}  // namespace kpf
