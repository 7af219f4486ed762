#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kpf/linalg.hpp"
#include "kpf/tensor_core.hpp"
#include "test_util.hpp"

using namespace kpf;

namespace {

Mat unit_columns(std::initializer_list<std::vector<double>> cols) {
  const std::size_t n = cols.begin()->size();
  Mat w(n, cols.size());
  std::size_t j = 0;
  for (const auto& c : cols) w.set_col(j++, c);
  return w;
}

double gram_defect(const Mat& w) {
  const Mat g = test::naive_matmul(test::naive_transpose(w), w);
  return test::max_abs_diff(g, Mat::identity(w.cols()));
}

Mat random_orthonormal(std::mt19937_64& g, std::size_t n, std::size_t k) {
  // Classical Gram-Schmidt twice, written out here so the oracle does not
  // reuse the library routine.
  Mat w = test::random_mat(g, n, k);
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        double d = 0;
        for (std::size_t r = 0; r < n; ++r) d += w(r, i) * w(r, j);
        for (std::size_t r = 0; r < n; ++r) w(r, j) -= d * w(r, i);
      }
      double nn = 0;
      for (std::size_t r = 0; r < n; ++r) nn += w(r, j) * w(r, j);
      for (std::size_t r = 0; r < n; ++r) w(r, j) /= std::sqrt(nn);
    }
  return w;
}

/// U diag(s) V^T with prescribed singular values.
Mat with_spectrum(std::mt19937_64& g, std::size_t m, std::size_t n, const std::vector<double>& s) {
  const Mat u = random_orthonormal(g, m, s.size()), v = random_orthonormal(g, n, s.size());
  Mat out(m, n);
  for (std::size_t k = 0; k < s.size(); ++k)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += s[k] * u(i, k) * v(j, k);
  return out;
}

}  // namespace

TEST_CASE("full SVD: structure and reconstruction") {
  std::mt19937_64 g(21);
  for (auto [r, c] : {std::pair{8, 6}, std::pair{6, 8}, std::pair{5, 5}, std::pair{1, 4}}) {
    const Mat m = test::random_mat(g, r, c);
    const SvdFactors f = svd_full(m);
    REQUIRE(f.rank() == static_cast<std::size_t>(std::min(r, c)));
    CHECK(std::is_sorted(f.S.rbegin(), f.S.rend()));
    CHECK(f.S.back() >= 0.0);
    CHECK(gram_defect(f.U) <= 1e-10);
    CHECK(gram_defect(f.V) <= 1e-10);
    CHECK(test::fro(reconstruct(f) - m) <= 1e-8 * std::max(1.0, test::fro(m)));
    const auto oracle = test::jacobi_singular_values(m);
    for (std::size_t k = 0; k < f.rank(); ++k) CHECK(f.S[k] == doctest::Approx(oracle[k]).epsilon(1e-10));
    // sign convention: the largest-magnitude entry of each U column is positive
    for (std::size_t k = 0; k < f.rank(); ++k) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < f.U.rows(); ++i)
        if (std::abs(f.U(i, k)) > std::abs(f.U(arg, k))) arg = i;
      CHECK(f.U(arg, k) > 0);
    }
  }
}

TEST_CASE("full SVD: small exact cases") {
  const SvdFactors d = svd_full(Mat{{3, 0}, {0, 1}});
  CHECK(d.S == std::vector<double>{3, 1});
  CHECK(std::abs(d.U(0, 0)) == 1.0);
  CHECK(std::abs(d.V(1, 1)) == 1.0);

  const SvdFactors z = svd_full(Mat(3, 2));
  for (double s : z.S) CHECK(s == 0.0);

  std::mt19937_64 g(22);
  const Mat b1 = test::random_mat(g, 3, 2), b2 = test::random_mat(g, 2, 2);
  const SvdFactors r1 = svd_full(test::outer_product(vec(b2), vec(b1)));
  CHECK(r1.S[0] == doctest::Approx(test::fro(b1) * test::fro(b2)).epsilon(1e-13));
  for (std::size_t k = 1; k < r1.rank(); ++k) CHECK(r1.S[k] <= 1e-14 * r1.S[0]);
}

TEST_CASE("truncated SVD is the full SVD's leading block") {
  std::mt19937_64 g(23);
  const Mat m = test::random_mat(g, 8, 6);
  const SvdFactors full = svd_full(m);
  const SvdFactors t = svd_truncated(m, 3);
  REQUIRE(t.rank() == 3);
  double tail = 0;
  for (std::size_t k = 3; k < 6; ++k) tail += full.S[k] * full.S[k];
  const double res = test::fro(reconstruct(t) - m);
  CHECK(res * res == doctest::Approx(tail).epsilon(1e-10));

  CHECK(test::max_abs_diff(reconstruct(svd_truncated(m, 6)), reconstruct(full)) < 1e-12);

  const SvdFactors diag = svd_truncated(Mat{{5, 0, 0}, {0, 2, 0}, {0, 0, 1}}, 2);
  CHECK(diag.S == std::vector<double>{5, 2});
  CHECK(test::fro(reconstruct(diag) - Mat{{5, 0, 0}, {0, 2, 0}, {0, 0, 1}}) == doctest::Approx(1.0));

  double prev = INFINITY;
  for (std::size_t k = 1; k <= 6; ++k) {
    const double e = test::fro(low_rank_approx(m, k) - m);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
  CHECK_THROWS_AS(svd_truncated(m, 0), ArgumentError);
  CHECK_THROWS_AS(svd_truncated(m, 7), ArgumentError);
}

TEST_CASE("randomized SVD agrees with the full SVD on gapped spectra") {
  std::mt19937_64 g(24);
  const Mat exact2 = with_spectrum(g, 40, 30, {7.0, 3.0});
  const SvdFactors r = svd_randomized(exact2, 2);
  const SvdFactors f = svd_full(exact2);
  CHECK(r.S[0] == doctest::Approx(f.S[0]).epsilon(1e-8));
  CHECK(r.S[1] == doctest::Approx(f.S[1]).epsilon(1e-8));
  CHECK(gram_defect(r.U) < 1e-10);
  CHECK(gram_defect(r.V) < 1e-10);

  const auto u = test::random_vec(g, 25), v = test::random_vec(g, 20);
  const Mat rank1 = test::outer_product(u, v);
  const SvdFactors r1 = svd_randomized(rank1, 1);
  CHECK(test::max_abs_diff(reconstruct(r1), rank1) < 1e-10 * test::fro(rank1));

  const Mat noisy = with_spectrum(g, 60, 50, {100, 80, 60, 5, 4, 3, 2, 1});
  const SvdFactors a = svd_randomized(noisy, 3, 10, 2, 99);
  const SvdFactors b = svd_randomized(noisy, 3, 10, 2, 99);
  CHECK(a.S == b.S);
  CHECK(a.U == b.U);
  CHECK(a.V == b.V);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.S[k] == doctest::Approx(svd_full(noisy).S[k]).epsilon(1e-6));

  CHECK_THROWS_AS(svd_randomized(noisy, 45, 10, 2, 1), ArgumentError);
  CHECK_THROWS_AS(svd_randomized(noisy, 0, 10, 2, 1), ArgumentError);
}

TEST_CASE("Weyl bound on perturbed spectra") {
  std::mt19937_64 g(25);
  const Mat m = test::random_mat(g, 9, 7);
  Mat delta = test::random_mat(g, 9, 7);
  delta *= 1e-3;
  const auto s = svd_full(m).S, sp = svd_full(m + delta).S;
  const double bound = spectral_norm(delta);
  CHECK(bound == doctest::Approx(test::jacobi_singular_values(delta)[0]).epsilon(1e-10));
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(std::abs(sp[k] - s[k]) <= bound + 1e-10);
}

TEST_CASE("OLS solve") {
  std::mt19937_64 g(26);
  const Mat yv = test::random_mat(g, 4, 3);
  CHECK(test::max_abs_diff(ols_solve(Mat::identity(4), yv), yv) < 1e-14);

  // noiseless: Y = X nu^T exactly
  const Mat x = test::random_mat(g, 50, 4), nu = test::random_mat(g, 6, 4);
  const Mat y = test::naive_matmul(x, test::naive_transpose(nu));
  const Mat b = ols_solve(x, y);
  CHECK(test::fro(b - test::naive_transpose(nu)) <= 1e-8 * test::fro(nu));

  // 3 x 2 against an explicit 2 x 2 normal-equation inverse
  const Mat x3{{1, 2}, {3, -1}, {0.5, 4}};
  const Mat y3{{1}, {2}, {-3}};
  double a = 0, bb = 0, d = 0, r0 = 0, r1 = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    a += x3(i, 0) * x3(i, 0);
    bb += x3(i, 0) * x3(i, 1);
    d += x3(i, 1) * x3(i, 1);
    r0 += x3(i, 0) * y3(i, 0);
    r1 += x3(i, 1) * y3(i, 0);
  }
  const double det = a * d - bb * bb;
  const Mat sol = ols_solve(x3, y3);
  CHECK(sol(0, 0) == doctest::Approx((d * r0 - bb * r1) / det).epsilon(1e-13));
  CHECK(sol(1, 0) == doctest::Approx((-bb * r0 + a * r1) / det).epsilon(1e-13));

  // normal-equation residual
  const Mat xty = test::naive_matmul(test::naive_transpose(x), y);
  const Mat resid = test::naive_matmul(test::naive_matmul(test::naive_transpose(x), x), b) - xty;
  CHECK(max_abs(resid) <= 1e-8 * max_abs(xty));

  // additivity: OLS(X, X nu^T + E) = nu^T + OLS(X, E)
  const Mat e = test::random_mat(g, 50, 6);
  const Mat lhs = ols_solve(x, y + e);
  const Mat rhs = test::naive_transpose(nu) + ols_solve(x, e);
  CHECK(test::max_abs_diff(lhs, rhs) < 1e-10);

  // rank-deficient design
  Mat xs = test::random_mat(g, 20, 3);
  for (std::size_t i = 0; i < 20; ++i) xs(i, 2) = xs(i, 0) + xs(i, 1);
  try {
    (void)ols_solve(xs, test::random_mat(g, 20, 2));
    FAIL("expected SingularDesignError");
  } catch (const SingularDesignError& err) {
    CHECK(err.rcond() < kSingularDesignRcond);
  }
}

TEST_CASE("streaming cross products reproduce the in-memory solve bitwise") {
  std::mt19937_64 g(27);
  const Mat x = test::random_mat(g, 30, 3), y = test::random_mat(g, 30, 5);
  CrossProducts cp(3, 5);
  for (std::size_t i = 0; i < 30; ++i) cp.add_row(x.row(i), y.row(i));
  CHECK(cp.count() == 30);
  CHECK(cp.solve() == ols_solve(x, y));
}

TEST_CASE("sin-theta distance") {
  const Mat e1 = unit_columns({{1, 0}}), e2 = unit_columns({{0, 1}});
  CHECK(sin_theta(e1, e1) == doctest::Approx(0.0));
  CHECK(sin_theta(e1, e2) == doctest::Approx(1.0));
  const double th = std::numbers::pi / 6;
  CHECK(sin_theta(e1, unit_columns({{std::cos(th), std::sin(th)}})) == doctest::Approx(0.5).epsilon(1e-14));

  std::mt19937_64 g(28);
  const Mat w1 = random_orthonormal(g, 10, 3), w2 = random_orthonormal(g, 10, 3);
  const double s12 = sin_theta(w1, w2);
  CHECK(std::abs(s12 - sin_theta(w2, w1)) < 1e-10);
  const Mat q = random_orthonormal(g, 3, 3);
  CHECK(std::abs(s12 - sin_theta(test::naive_matmul(w1, q), w2)) < 1e-10);
  CHECK(std::abs(s12 - sin_theta(w1, test::naive_matmul(w2, q))) < 1e-10);

  // oracle: sqrt(1 - sigma_min(W1^T W2)^2)
  const auto sv = test::jacobi_singular_values(test::naive_matmul(test::naive_transpose(w1), w2));
  CHECK(s12 == doctest::Approx(std::sqrt(1 - sv.back() * sv.back())).epsilon(1e-10));

  CHECK(sin_theta(w1, w1) < 1e-12);
  Mat bad = w1;
  bad *= 1.01;
  CHECK_THROWS_AS(sin_theta(bad, w2), ArgumentError);
}

TEST_CASE("Gram-Schmidt, SPD inverse, pseudo-inverse") {
  std::mt19937_64 g(29);
  const Mat a = test::random_mat(g, 7, 3);
  const Mat q = gram_schmidt(a, true);
  CHECK(gram_defect(q) < 1e-12);
  CHECK(orthonormality_defect(q) < 1e-12);
  const Mat o = gram_schmidt(a, false);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      double d = 0;
      for (std::size_t r = 0; r < 7; ++r) d += o(r, i) * o(r, j);
      CHECK(std::abs(d) < 1e-12);
    }
  CHECK(o.col(0) == a.col(0));

  const Mat spd = test::naive_matmul(test::naive_transpose(a), a) + Mat::identity(3);
  const SpdInverse inv = spd_inverse(spd);
  CHECK(test::max_abs_diff(test::naive_matmul(spd, inv.inverse), Mat::identity(3)) < 1e-12);
  const auto ev = test::jacobi_singular_values(spd);  // singular values = eigenvalues for SPD
  CHECK(inv.log_det == doctest::Approx(std::log(ev[0] * ev[1] * ev[2])).epsilon(1e-12));
  CHECK(min_eigenvalue(spd) == doctest::Approx(ev[2]).epsilon(1e-10));
  CHECK_THROWS_AS(spd_inverse(Mat{{1, 2}, {2, 1}}), NumericError);

  const Mat sing{{1, 2}, {2, 4}};
  const Mat p = pseudo_inverse(sing);
  CHECK(test::max_abs_diff(test::naive_matmul(test::naive_matmul(sing, p), sing), sing) < 1e-12);
}
