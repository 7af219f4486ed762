#include "kpf/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kpf/kernels.hpp"
#include "kpf/linalg.hpp"
#include "kpf/tensor_core.hpp"

namespace kpf {

KroneckerCoefficients gen_coefficients(const Dims& dims, std::size_t d, std::uint64_t seed) {
  dims.validate();
  const std::size_t n1 = dims.p1 * dims.q1, n2 = dims.p2 * dims.q2;
  if (d < 1 || d > std::min(n1, n2))
    throw ArgumentError("gen_coefficients: d=" + std::to_string(d) + " outside [1, " +
                        std::to_string(std::min(n1, n2)) + "]");
  NormalRng rng(seed);
  // Columns k hold vec(beta1_k) / vec(beta2_k).
  Mat b1(n1, d), b2(n2, d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n1; ++i) b1(i, k) = rng.normal();
    for (std::size_t i = 0; i < n2; ++i) b2(i, k) = rng.normal();
  }

  KroneckerCoefficients c;
  c.dims = dims;
  c.dims.n = 0;
  if (d == 1) {
    c.factors.push_back({vec_inv(b1.col(0), dims.p1, dims.q1), vec_inv(b2.col(0), dims.p2, dims.q2)});
    c.sigma.push_back(frobenius_norm(c.factors[0].beta1) * frobenius_norm(c.factors[0].beta2));
    return c;
  }

  b1 = gram_schmidt(b1, false);
  b2 = gram_schmidt(b2, false);
  std::vector<KroneckerTerm> terms;
  std::vector<double> sig;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> v1 = b1.col(k), v2 = b2.col(k);
    const double n1k = std::sqrt(simd::sum_squares(v1.data(), v1.size()));
    const double n2k = std::sqrt(simd::sum_squares(v2.data(), v2.size()));
    const double target = std::sqrt(n1k * n2k);
    for (double& x : v1) x *= target / n1k;
    for (double& x : v2) x *= target / n2k;
    terms.push_back({vec_inv(v1, dims.p1, dims.q1), vec_inv(v2, dims.p2, dims.q2)});
    sig.push_back(n1k * n2k);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sig[a] > sig[b]; });
  for (std::size_t k : order) {
    c.factors.push_back(terms[k]);
    c.sigma.push_back(sig[k]);
  }
  return c;
}

Mat gen_design(std::size_t n, const Dims& dims, std::uint64_t seed) {
  dims.validate();
  Mat x(n, dims.q());
  NormalRng rng(seed);
  rng.fill_normal(x.flat());
  return x;
}

BandedFactor::BandedFactor(std::size_t p, std::size_t bandwidth, std::uint64_t seed)
    : p_(p), b_(bandwidth), band_(p * (bandwidth + 1), 0.0) {
  NormalRng rng(seed);
  for (std::size_t t = 0; t < p_; ++t) {
    double* row = band_.data() + t * (b_ + 1);
    row[0] = 3.0 + rng.normal();
    for (std::size_t s = 1; s <= std::min(b_, t); ++s) row[s] = rng.normal();
  }
}

double BandedFactor::at(std::size_t t, std::size_t j) const noexcept {
  if (j > t || t - j > b_) return 0.0;
  return band_[t * (b_ + 1) + (t - j)];
}

void BandedFactor::apply(std::span<const double> z, std::span<double> e) const noexcept {
  for (std::size_t t = 0; t < p_; ++t) {
    const double* row = band_.data() + t * (b_ + 1);
    double acc = 0.0;
    for (std::size_t s = 0; s <= std::min(b_, t); ++s) acc += row[s] * z[t - s];
    e[t] = acc;
  }
}

std::vector<double> BandedFactor::covariance_diagonal() const {
  std::vector<double> d(p_, 0.0);
  for (std::size_t t = 0; t < p_; ++t) {
    const double* row = band_.data() + t * (b_ + 1);
    for (std::size_t s = 0; s <= std::min(b_, t); ++s) d[t] += row[s] * row[s];
  }
  return d;
}

NoiseSource::NoiseSource(const NoiseModelSpec& spec, const Dims& dims, std::uint64_t seed)
    : spec_(spec), p_(dims.p()), rng_(seed) {
  spec_.validate();
  if (spec_.kind == NoiseKind::Banded) {
    banded_.emplace(p_, spec_.bandwidth, spec_.structure_seed);
    scratch_.resize(p_);
  }
}

void NoiseSource::next_row(std::span<double> out) {
  if (out.size() != p_) throw DimensionError("NoiseSource: row length mismatch");
  switch (spec_.kind) {
    case NoiseKind::Identity:
      rng_.fill_normal(out);
      return;
    case NoiseKind::Banded:
      rng_.fill_normal(scratch_);
      banded_->apply(scratch_, out);
      return;
    case NoiseKind::Ar1: {
      const double rho = spec_.rho;
      const double innov = std::sqrt(1.0 - rho * rho);
      double prev = rng_.normal();
      out[0] = prev;
      for (std::size_t t = 1; t < p_; ++t) {
        prev = rho * prev + innov * rng_.normal();
        out[t] = prev;
      }
      return;
    }
    case NoiseKind::HeavyTailedT5:
      for (double& e : out) e = rng_.student_t(spec_.df);
      return;
  }
}

Mat gen_noise(const NoiseModelSpec& spec, std::size_t n, const Dims& dims, std::uint64_t seed) {
  dims.validate();
  NoiseSource src(spec, dims, seed);
  Mat e(n, dims.p());
  for (std::size_t i = 0; i < n; ++i) src.next_row(e.row(i));
  return e;
}

SeedTuple replicate_seeds(std::uint64_t seed_base, std::uint64_t replicate) {
  const std::uint64_t rep = seed_base ^ replicate;
  return {derive_seed(seed_base, 0), derive_seed(rep, 1), derive_seed(rep, 2)};
}

std::uint64_t default_structure_seed(std::uint64_t seed_base) { return derive_seed(seed_base, 3); }

ReplicateStream::ReplicateStream(const KroneckerCoefficients& coeffs,
                                 std::optional<NoiseModelSpec> noise, std::uint64_t design_seed,
                                 std::uint64_t noise_seed)
    : dims_(coeffs.dims), nu_t_(coeffs.nu().transpose()), design_rng_(design_seed) {
  if (noise) noise_.emplace(*noise, dims_, noise_seed);
}

void ReplicateStream::next(std::span<double> x_row, std::span<double> y_row) {
  const std::size_t q = dims_.q(), p = dims_.p();
  if (x_row.size() != q || y_row.size() != p)
    throw DimensionError("ReplicateStream: row length mismatch");
  design_rng_.fill_normal(x_row);
  if (noise_)
    noise_->next_row(y_row);
  else
    std::fill(y_row.begin(), y_row.end(), 0.0);
  std::size_t j = 0;
  for (; j + 4 <= q; j += 4) {
    const double* src[4] = {nu_t_.row(j).data(), nu_t_.row(j + 1).data(),
                            nu_t_.row(j + 2).data(), nu_t_.row(j + 3).data()};
    simd::axpy4(x_row.data() + j, src, y_row.data(), p);
  }
  for (; j < q; ++j) simd::axpy(x_row[j], nu_t_.row(j).data(), y_row.data(), p);
}

Dataset gen_dataset(const KroneckerCoefficients& coeffs, std::size_t n,
                    const std::optional<NoiseModelSpec>& noise, std::uint64_t design_seed,
                    std::uint64_t noise_seed) {
  Dataset ds;
  ds.dims = coeffs.dims;
  ds.dims.n = n;
  ds.X = Mat(n, ds.dims.q());
  ds.Y = Mat(n, ds.dims.p());
  ReplicateStream stream(coeffs, noise, design_seed, noise_seed);
  for (std::size_t i = 0; i < n; ++i) stream.next(ds.X.row(i), ds.Y.row(i));
  SeedRecord rec;
  rec.generator = std::string(kGeneratorName);
  rec.design_seed = design_seed;
  rec.noise_seed = noise_seed;
  rec.noise = noise;
  ds.seed_record = rec;
  return ds;
}

std::pair<Dataset, KroneckerCoefficients> gen_dataset(const Dims& dims, std::size_t d,
                                                      std::size_t n,
                                                      const std::optional<NoiseModelSpec>& noise,
                                                      const SeedTuple& seeds) {
  KroneckerCoefficients coeffs = gen_coefficients(dims, d, seeds.coefficients);
  Dataset ds = gen_dataset(coeffs, n, noise, seeds.design, seeds.noise);
  ds.seed_record->coefficient_seed = seeds.coefficients;
  return {std::move(ds), std::move(coeffs)};
}

}  // namespace kpf
