#include "kpf/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kpf/tensor_core.hpp"

namespace kpf {

std::size_t default_d_bar(const Dims& dims) {
  const std::size_t m = std::min(dims.p1 * dims.q1, dims.p2 * dims.q2);
  return std::max<std::size_t>(1, std::min<std::size_t>(10, m > 0 ? m - 1 : 0));
}

Mat fit_ols_nu(const Dataset& data) {
  data.validate();
  Dims d = data.dims;
  d.n = data.n();
  d.validate_for_estimation();
  return ols_solve(data.X, data.Y).transpose();
}

std::vector<double> selection_ratios(std::span<const double> sigmas, std::size_t d_bar) {
  if (d_bar < 1 || sigmas.size() < d_bar + 1)
    throw ArgumentError("select_rank: d_bar=" + std::to_string(d_bar) + " needs at least " +
                        std::to_string(d_bar + 1) + " singular values, have " +
                        std::to_string(sigmas.size()));
  const double floor = kRankEps * sigmas[0];
  std::vector<double> ratios(d_bar);
  for (std::size_t j = 0; j < d_bar; ++j) {
    ratios[j] = sigmas[j + 1] <= floor ? std::numeric_limits<double>::infinity()
                                       : sigmas[j] / sigmas[j + 1];
  }
  return ratios;
}

std::size_t select_rank(std::span<const double> sigmas, std::size_t d_bar) {
  const auto ratios = selection_ratios(sigmas, d_bar);
  std::size_t best = 0;
  for (std::size_t j = 1; j < ratios.size(); ++j)
    if (ratios[j] > ratios[best]) best = j;
  return best + 1;
}

FitReport factorize_nu(const Mat& nu_tilde, const Dims& dims, const KpfOptions& opts) {
  dims.validate();
  const Mat r = rearrange(nu_tilde, dims);
  const std::size_t min_dim = std::min(r.rows(), r.cols());

  FitReport rep;
  rep.d_bar = opts.d_bar.value_or(default_d_bar(dims));
  if (min_dim >= 2 && rep.d_bar > min_dim - 1)
    throw ArgumentError("d_bar=" + std::to_string(rep.d_bar) + " exceeds min(p1q1, p2q2) - 1 = " +
                        std::to_string(min_dim - 1));
  if (opts.d_fixed && (*opts.d_fixed < 1 || *opts.d_fixed > min_dim))
    throw ArgumentError("d=" + std::to_string(*opts.d_fixed) + " outside [1, " +
                        std::to_string(min_dim) + "]");

  const std::size_t needed =
      std::min(min_dim, std::max(rep.d_bar + 1, opts.d_fixed.value_or(1)));
  bool randomized = opts.engine == SvdEngine::Randomized ||
                    (opts.engine == SvdEngine::Auto && min_dim > kDenseSvdLimit);

  SvdFactors svd;
  if (randomized && needed < min_dim) {
    const std::size_t oversample = std::min(opts.rsvd.oversample, min_dim - needed);
    svd = svd_randomized(r, needed, oversample, opts.rsvd.power_iters, opts.rsvd.seed);
  } else {
    randomized = false;
    svd = svd_full(r);
  }
  rep.randomized_svd = randomized;
  rep.singular_values_all = svd.S;

  if (min_dim == 1) {
    rep.d_selected = 1;
  } else {
    rep.selection_ratios = selection_ratios(svd.S, rep.d_bar);
    rep.d_selected = select_rank(svd.S, rep.d_bar);
  }
  const std::size_t d = opts.d_fixed.value_or(rep.d_selected);

  auto& c = rep.coefficients;
  c.dims = dims;
  c.factors.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = svd.S[k];
    const double root = std::sqrt(s);
    std::vector<double> u = svd.U.col(k);
    std::vector<double> v = svd.V.col(k);
    for (double& x : u) x *= root;
    for (double& x : v) x *= root;
    c.factors.push_back({vec_inv(v, dims.p1, dims.q1), vec_inv(u, dims.p2, dims.q2)});
    c.sigma.push_back(s);
  }
  return rep;
}

FitReport kro_pro_fac(const Dataset& data, const KpfOptions& opts) {
  Dims dims = data.dims;
  dims.n = data.n();
  return factorize_nu(fit_ols_nu(data), dims, opts);
}

FitReport kro_pro_fac(const Dataset& data, std::size_t d_bar, std::optional<std::size_t> d_fixed) {
  KpfOptions opts;
  opts.d_bar = d_bar;
  opts.d_fixed = d_fixed;
  return kro_pro_fac(data, opts);
}

void truncate_response_row(std::span<double> y_row, const Dims& dims, std::size_t alpha) {
  if (alpha < 1 || alpha > std::min(dims.p1, dims.p2))
    throw ArgumentError("alpha=" + std::to_string(alpha) + " outside [1, min(p1, p2)]");
  const Mat yi = vec_inv(y_row, dims.p1, dims.p2);
  const std::vector<double> out = vec(low_rank_approx(yi, alpha));
  std::copy(out.begin(), out.end(), y_row.begin());
}

Dataset variant_low_rank_response(const Dataset& data, std::size_t alpha) {
  data.validate();
  if (alpha < 1 || alpha > std::min(data.dims.p1, data.dims.p2))
    throw ArgumentError("alpha=" + std::to_string(alpha) + " outside [1, min(p1, p2)]");
  Dataset out = data;
  for (std::size_t i = 0; i < out.Y.rows(); ++i) truncate_response_row(out.Y.row(i), out.dims, alpha);
  return out;
}

Mat variant_reduced_rank_ols(const Mat& nu_tilde, std::size_t gamma) {
  const std::size_t kmax = std::min(nu_tilde.rows(), nu_tilde.cols());
  if (gamma < 1 || gamma > kmax)
    throw ArgumentError("gamma=" + std::to_string(gamma) + " outside [1, " +
                        std::to_string(kmax) + "]");
  return low_rank_approx(nu_tilde, gamma);
}

Mat predict(const KroneckerCoefficients& coeffs, const Mat& x_new) {
  const Dims& d = coeffs.dims;
  if (x_new.rows() != d.q1 || x_new.cols() != d.q2)
    throw DimensionError("predict: X must be " + std::to_string(d.q1) + "x" +
                         std::to_string(d.q2) + ", got " + std::to_string(x_new.rows()) + "x" +
                         std::to_string(x_new.cols()));
  Mat y(d.p1, d.p2);
  for (const auto& t : coeffs.factors) y += matmul_nt(matmul(t.beta1, x_new), t.beta2);
  return y;
}

}  // namespace kpf
