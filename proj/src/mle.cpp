#include "kpf/mle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kpf/estimator.hpp"
#include "kpf/linalg.hpp"
#include "kpf/tensor_core.hpp"

namespace kpf {

Mat MleState::nu() const { return kron(beta2, beta1); }

namespace {

struct Samples {
  std::vector<Mat> x;
  std::vector<Mat> y;
};

Samples unpack(const Dataset& data) {
  Samples s;
  s.x.reserve(data.n());
  s.y.reserve(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    s.x.push_back(data.x_sample(i));
    s.y.push_back(data.y_sample(i));
  }
  return s;
}

void check_state(const MleState& st, const Dims& d) {
  if (st.beta1.rows() != d.p1 || st.beta1.cols() != d.q1 || st.beta2.rows() != d.p2 ||
      st.beta2.cols() != d.q2 || st.Sigma1.rows() != d.p1 || st.Sigma1.cols() != d.p1 ||
      st.Sigma2.rows() != d.p2 || st.Sigma2.cols() != d.p2)
    throw DimensionError("MleState shapes do not match the dataset dimensions");
}

double elementwise_dot(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double loglik_impl(const MleState& st, const Samples& s, const Dims& d) {
  const SpdInverse s1 = spd_inverse(st.Sigma1);
  const SpdInverse s2 = spd_inverse(st.Sigma2);
  const double n = static_cast<double>(s.y.size());
  double tr = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    const Mat r = s.y[i] - matmul_nt(matmul(st.beta1, s.x[i]), st.beta2);
    tr += elementwise_dot(matmul(s1.inverse, r), matmul(r, s2.inverse));
  }
  return 0.5 * (-n * static_cast<double>(d.p2) * s1.log_det -
                n * static_cast<double>(d.p1) * s2.log_det - tr);
}

Mat symmetrize(const Mat& m) {
  Mat out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

// Adds 1e-8 * tr(S)/p to the diagonal when S is numerically singular.
bool pd_safeguard(Mat& s) {
  const double p = static_cast<double>(s.rows());
  double scale = trace(s) / p;
  if (!(scale > 0.0)) scale = 1.0;
  if (min_eigenvalue(s) >= 1e-10 * scale) return false;
  const double jitter = 1e-8 * scale;
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += jitter;
  return true;
}

// Solves beta M = C for beta, falling back to the pseudo-inverse.
Mat right_solve(const Mat& c, const Mat& m, bool& pinv_used) {
  try {
    const SpdInverse inv = spd_inverse(m);
    const double cond_guard = max_abs(inv.inverse) * max_abs(m);
    if (std::isfinite(cond_guard) && cond_guard < 1e12) return matmul(c, inv.inverse);
  } catch (const NumericError&) {
  }
  pinv_used = true;
  return matmul(c, pseudo_inverse(m));
}

// One conditional update of (beta_a, Sigma_a) given (beta_b, Sigma_b).
// Row step: a = 1, Y_i as given. Column step: transpose every sample.
void half_step(const std::vector<Mat>& ys, const std::vector<Mat>& xs, const Mat& beta_b,
               const Mat& sigma_b, Mat& beta_a, Mat& sigma_a, bool update_sigma,
               MleState& st) {
  const SpdInverse sb = spd_inverse(sigma_b);
  const Mat w = matmul(sb.inverse, beta_b);  // Sigma_b^-1 beta_b
  const Mat g = matmul_tn(beta_b, w);        // beta_b^T Sigma_b^-1 beta_b
  const std::size_t qa = beta_a.cols();
  Mat c(beta_a.rows(), qa), m(qa, qa);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Mat wx = matmul_nt(w, xs[i]);  // Sigma_b^-1 beta_b X_i^T
    c += matmul(ys[i], wx);
    m += matmul_nt(matmul(xs[i], g), xs[i]);
  }
  beta_a = right_solve(c, m, st.pinv_fallback);
  if (!update_sigma) return;

  Mat s(beta_a.rows(), beta_a.rows());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Mat r = ys[i] - matmul_nt(matmul(beta_a, xs[i]), beta_b);
    s += matmul_nt(matmul(r, sb.inverse), r);
  }
  s *= 1.0 / (static_cast<double>(ys.size()) * static_cast<double>(beta_b.rows()));
  s = symmetrize(s);
  if (pd_safeguard(s)) st.jitter_applied = true;
  sigma_a = std::move(s);
}

void normalize(MleState& st) {
  const double n1 = frobenius_norm(st.beta1), n2 = frobenius_norm(st.beta2);
  if (n1 > 0.0 && n2 > 0.0) {
    const double c = std::sqrt(n1 / n2);
    st.beta1 *= 1.0 / c;
    st.beta2 *= c;
  }
  if (st.beta2.size() > 0 && st.beta2(0, 0) < 0.0) {
    st.beta1 *= -1.0;
    st.beta2 *= -1.0;
  }
  const double s = frobenius_norm(st.Sigma2);
  if (s > 0.0) {
    st.Sigma2 *= 1.0 / s;
    st.Sigma1 *= s;
  }
}

}  // namespace

double log_likelihood(const MleState& state, const Dataset& data) {
  data.validate();
  check_state(state, data.dims);
  return loglik_impl(state, unpack(data), data.dims);
}

MleState mle_initial_state(const Dataset& data) {
  KpfOptions opts;
  opts.d_fixed = 1;
  const FitReport fit = kro_pro_fac(data, opts);
  MleState st;
  st.beta1 = fit.coefficients.factors[0].beta1;
  st.beta2 = fit.coefficients.factors[0].beta2;
  st.Sigma1 = Mat::identity(data.dims.p1);
  st.Sigma2 = Mat::identity(data.dims.p2);
  return st;
}

MleState mle_fit(const Dataset& data, const std::optional<MleState>& init, const MleOptions& opts) {
  data.validate();
  MleState st = init ? *init : mle_initial_state(data);
  check_state(st, data.dims);
  st.iterations = 0;
  st.converged = false;
  st.loglik_trace.clear();

  const Samples s = unpack(data);
  std::vector<Mat> yt, xt;
  yt.reserve(s.y.size());
  xt.reserve(s.x.size());
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    yt.push_back(s.y[i].transpose());
    xt.push_back(s.x[i].transpose());
  }

  const bool update_sigma = !opts.freeze_covariance;
  // Mean residual variance below this fraction of mean(Y^2) is an exact fit.
  const double exact_fit_level =
      1e-24 * frobenius_norm(data.Y) * frobenius_norm(data.Y) / static_cast<double>(data.Y.size());
  double prev = loglik_impl(st, s, data.dims);
  st.loglik = prev;
  st.loglik_trace.push_back(prev);

  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const MleState before = st;
    st.jitter_applied = false;
    // Row block: (beta1, Sigma1) given (beta2, Sigma2).
    half_step(s.y, s.x, st.beta2, st.Sigma2, st.beta1, st.Sigma1, update_sigma, st);
    // Column block on transposed samples: Y_i^T = beta2 X_i^T beta1^T + E_i^T.
    half_step(yt, xt, st.beta1, st.Sigma1, st.beta2, st.Sigma2, update_sigma, st);
    if (update_sigma) normalize(st);

    const double cur = loglik_impl(st, s, data.dims);
    const double scale = std::max(1.0, std::abs(prev));
    if (cur < prev - kLoglikSlack * scale && st.jitter_applied) {
      // A jittered covariance is no longer the exact conditional maximizer, so
      // the step may descend. Keep the last ascending state and stop.
      const bool pinv = st.pinv_fallback;
      st = before;
      st.jitter_applied = true;
      st.pinv_fallback = pinv;
      break;
    }
    st.jitter_applied = st.jitter_applied || before.jitter_applied;
    st.iterations = it + 1;
    st.loglik = cur;
    st.loglik_trace.push_back(cur);
    if (cur < prev - kLoglikSlack * scale)
      throw InternalError("dual-Kronecker MLE: log-likelihood decreased from " +
                          std::to_string(prev) + " to " + std::to_string(cur) +
                          " at iteration " + std::to_string(it + 1));
    const double residual_level = trace(st.Sigma1) * trace(st.Sigma2) /
                                  static_cast<double>(data.dims.p1 * data.dims.p2);
    if (std::abs(cur - prev) / scale < opts.tol ||
        (update_sigma && residual_level <= exact_fit_level)) {
      st.converged = true;
      break;
    }
    prev = cur;
  }
  return st;
}

MleState mle_fit(const Dataset& data, const std::optional<MleState>& init, std::size_t max_iter,
                 double tol) {
  MleOptions opts;
  opts.max_iter = max_iter;
  opts.tol = tol;
  return mle_fit(data, init, opts);
}

}  // namespace kpf
