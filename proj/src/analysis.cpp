#include "kpf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "kpf/tensor_core.hpp"

namespace kpf {

void GroupData::validate() const {
  if (samples.empty()) throw ArgumentError("group '" + label + "' has no samples");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].rows() != samples[0].rows() || samples[i].cols() != samples[0].cols())
      throw DimensionError("group '" + label + "': sample " + std::to_string(i) +
                           " has a different shape");
}

namespace {

Dataset intercept_dataset(const GroupData& g) {
  Dataset ds;
  ds.dims = {g.rows(), g.cols(), 1, 1, g.samples.size()};
  ds.X = Mat(g.samples.size(), 1, 1.0);
  ds.Y = Mat(g.samples.size(), g.rows() * g.cols());
  for (std::size_t i = 0; i < g.samples.size(); ++i) {
    const auto v = vec(g.samples[i]);
    std::copy(v.begin(), v.end(), ds.Y.row(i).begin());
  }
  return ds;
}

}  // namespace

FitReport fit_group_mean(const GroupData& group, std::optional<std::size_t> d_bar,
                         std::optional<std::size_t> d_fixed) {
  group.validate();
  KpfOptions opts;
  opts.d_bar = d_bar;
  opts.d_fixed = d_fixed;
  return kro_pro_fac(intercept_dataset(group), opts);
}

Mat group_sample_mean(const GroupData& group) {
  group.validate();
  Mat m(group.rows() * group.cols(), 1);
  for (const auto& s : group.samples) {
    const auto v = vec(s);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) += v[i];
  }
  m *= 1.0 / static_cast<double>(group.samples.size());
  return m;
}

std::vector<double> channel_effects(const Mat& nu1, const Mat& nu2, std::size_t p1,
                                    std::size_t p2) {
  if (nu1.size() != p1 * p2 || nu2.size() != p1 * p2)
    throw ArgumentError("channel_effects: fitted means do not have p1*p2 entries");
  const Mat diff = vec_inv((nu1 - nu2).flat(), p1, p2);
  std::vector<double> theta(p2, 0.0);
  for (std::size_t c = 0; c < p2; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < p1; ++r) s += diff(r, c);
    theta[c] = s / static_cast<double>(p1);
  }
  return theta;
}

std::vector<double> channel_effects(const FitReport& fit1, const FitReport& fit2) {
  const Dims& a = fit1.coefficients.dims;
  const Dims& b = fit2.coefficients.dims;
  if (a.p1 != b.p1 || a.p2 != b.p2 || a.q1 != b.q1 || a.q2 != b.q2)
    throw ArgumentError("channel_effects: fits have different dimensions");
  return channel_effects(fit1.coefficients.nu(), fit2.coefficients.nu(), a.p1, a.p2);
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

namespace {

// Per-subject time-averaged scores: column means of each sample.
std::vector<std::vector<double>> column_scores(const GroupData& g) {
  std::vector<std::vector<double>> s(g.cols(), std::vector<double>(g.samples.size()));
  for (std::size_t i = 0; i < g.samples.size(); ++i)
    for (std::size_t c = 0; c < g.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < g.rows(); ++r) acc += g.samples[i](r, c);
      s[c][i] = acc / static_cast<double>(g.rows());
    }
  return s;
}

double sample_variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

WelchTests channel_t_tests(std::span<const double> theta_hat, const GroupData& g1,
                           const GroupData& g2) {
  g1.validate();
  g2.validate();
  if (g1.samples.size() < 2 || g2.samples.size() < 2)
    throw ArgumentError("t-tests need at least 2 subjects per group");
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols())
    throw DimensionError("groups have different sample shapes");
  if (theta_hat.size() != g1.cols())
    throw DimensionError("theta_hat length differs from the channel count");

  const auto s1 = column_scores(g1), s2 = column_scores(g2);
  const double n1 = static_cast<double>(g1.samples.size());
  const double n2 = static_cast<double>(g2.samples.size());
  WelchTests out;
  const std::size_t m = theta_hat.size();
  out.t_stats.resize(m);
  out.p_values.resize(m);
  out.df.resize(m);
  out.degenerate.assign(m, false);
  for (std::size_t c = 0; c < m; ++c) {
    const double a = sample_variance(s1[c]) / n1;
    const double b = sample_variance(s2[c]) / n2;
    const double se = std::sqrt(a + b);
    const double th = theta_hat[c];
    if (!(se > 0.0)) {
      out.degenerate[c] = true;
      out.t_stats[c] = th == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), th);
      out.p_values[c] = th == 0.0 ? 1.0 : 0.0;
      out.df[c] = n1 + n2 - 2.0;
      continue;
    }
    const double df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    out.df[c] = df;
    out.t_stats[c] = th / se;
    out.p_values[c] = t_two_sided_p(out.t_stats[c], df);
  }
  return out;
}

std::vector<double> by_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("by_adjust: p-value outside [0, 1]");
  if (m == 0) return {};
  double cm = 0.0;
  for (std::size_t j = 1; j <= m; ++j) cm += 1.0 / static_cast<double>(j);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const double step = cm * static_cast<double>(m) / static_cast<double>(r + 1) *
                        p_values[order[r]];
    running = std::min(running, std::min(1.0, step));
    q[order[r]] = running;
  }
  return q;
}

ChannelTestResult two_group_analysis(const GroupData& g1, const GroupData& g2,
                                     const TwoGroupOptions& opts) {
  g1.validate();
  g2.validate();
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols())
    throw DimensionError("groups have different sample shapes");
  const std::size_t p1 = g1.rows(), p2 = g1.cols();

  ChannelTestResult res;
  if (opts.ols_baseline) {
    res.theta_hat = channel_effects(group_sample_mean(g1), group_sample_mean(g2), p1, p2);
  } else {
    const FitReport f1 = fit_group_mean(g1, opts.d_bar, opts.d1);
    const FitReport f2 = fit_group_mean(g2, opts.d_bar, opts.d2);
    res.d_selected = {f1.coefficients.d(), f2.coefficients.d()};
    res.theta_hat = channel_effects(f1, f2);
  }
  WelchTests t = channel_t_tests(res.theta_hat, g1, g2);
  res.t_stats = std::move(t.t_stats);
  res.p_values = std::move(t.p_values);
  res.degenerate = std::move(t.degenerate);
  res.p_adjusted = by_adjust(res.p_values);
  res.rejected.resize(p2);
  for (std::size_t c = 0; c < p2; ++c) res.rejected[c] = res.p_adjusted[c] <= opts.alpha;
  return res;
}

}  // namespace kpf
