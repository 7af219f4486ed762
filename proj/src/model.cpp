#include "kpf/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "kpf/tensor_core.hpp"

namespace kpf {

Mat KroneckerCoefficients::nu() const {
  Mat out(dims.p(), dims.q());
  for (const auto& t : factors) out += kron(t.beta2, t.beta1);
  return out;
}

void NoiseModelSpec::validate() const {
  switch (kind) {
    case NoiseKind::Identity:
      return;
    case NoiseKind::Banded:
      return;  // any b >= 0
    case NoiseKind::Ar1:
      if (!(std::abs(rho) < 1.0)) throw ArgumentError("AR(1) noise needs |rho| < 1");
      return;
    case NoiseKind::HeavyTailedT5:
      if (df == 0) throw ArgumentError("t noise needs df >= 1");
      return;
  }
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Identity: return "identity";
    case NoiseKind::Banded: return "banded";
    case NoiseKind::Ar1: return "ar1";
    case NoiseKind::HeavyTailedT5: return "t5";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "identity") return NoiseKind::Identity;
  if (l == "banded") return NoiseKind::Banded;
  if (l == "ar1") return NoiseKind::Ar1;
  if (l == "t5" || l == "heavy" || l == "heavytailedt5") return NoiseKind::HeavyTailedT5;
  throw ArgumentError("unknown noise model '" + s + "' (identity|banded|ar1|t5)");
}

Mat Dataset::x_sample(std::size_t i) const { return vec_inv(X.row(i), dims.q1, dims.q2); }
Mat Dataset::y_sample(std::size_t i) const { return vec_inv(Y.row(i), dims.p1, dims.p2); }

void Dataset::validate() const {
  dims.validate();
  if (X.cols() != dims.q())
    throw DimensionError("design has " + std::to_string(X.cols()) + " columns, expected q1*q2=" +
                         std::to_string(dims.q()));
  if (Y.cols() != dims.p())
    throw DimensionError("response has " + std::to_string(Y.cols()) +
                         " columns, expected p1*p2=" + std::to_string(dims.p()));
  if (X.rows() != Y.rows())
    throw DimensionError("design has " + std::to_string(X.rows()) + " rows, response has " +
                         std::to_string(Y.rows()));
}

}  // namespace kpf
