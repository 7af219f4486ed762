#pragma once

// Dual-Kronecker maximum likelihood baseline: Kronecker-structured mean
// beta2 (x) beta1 and covariance Sigma2 (x) Sigma1, fit by alternating the
// exact conditional maximizers of the row block (beta1, Sigma1) and the
// column block (beta2, Sigma2).

#include <optional>
#include <vector>

#include "kpf/model.hpp"

namespace kpf {

struct MleState {
  Mat beta1;   // p1 x q1
  Mat beta2;   // p2 x q2
  Mat Sigma1;  // p1 x p1
  Mat Sigma2;  // p2 x p2
  double loglik = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool pinv_fallback = false;   // a singular M was inverted by pseudo-inverse
  bool jitter_applied = false;  // a Sigma update needed the PD safeguard
  std::vector<double> loglik_trace;  // initial value, then one per iteration

  Mat nu() const;
};

struct MleOptions {
  std::size_t max_iter = 100;
  double tol = 1e-6;
  /// Keep Sigma1 = Sigma2 = I (generalized least squares on the bilinear mean).
  bool freeze_covariance = false;
};

/// Relative slack allowed on the ascent property before InternalError.
inline constexpr double kLoglikSlack = 1e-8;

/// 0.5 * (-n p2 ln|Sigma1| - n p1 ln|Sigma2|
///        - sum_i tr{Sigma2^-1 R_i^T Sigma1^-1 R_i}),  R_i = Y_i - beta1 X_i beta2^T.
/// Additive constants dropped. NumericError when a Sigma is not PD.
double log_likelihood(const MleState& state, const Dataset& data);

/// Default initializer: (beta1, beta2) from a rank-1 KRO-PRO-FAC fit,
/// Sigma1 = I, Sigma2 = I.
MleState mle_initial_state(const Dataset& data);

MleState mle_fit(const Dataset& data, const std::optional<MleState>& init = std::nullopt,
                 const MleOptions& opts = {});
MleState mle_fit(const Dataset& data, const std::optional<MleState>& init, std::size_t max_iter,
                 double tol);

}  // namespace kpf
