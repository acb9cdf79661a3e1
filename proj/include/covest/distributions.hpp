#pragma once

// SPD matrices, seeded random streams and the Gaussian / (inverse-)Wishart
// samplers shared by the model, the estimators and the Gibbs sampler.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "covest/errors.hpp"

namespace covest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline constexpr double kPivotFloor = 1e-12;
inline constexpr double kJitter = 1e-10;
inline constexpr double kSymmetryTol = 1e-10;

inline bool try_cholesky(const Matrix& a, double floor, Matrix& lower) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double pivot = lower(i, i) * lower(i, i);
    if (!(pivot > floor)) return false;
  }
  return true;
}

}  // namespace detail

/// Lower Cholesky factor of a symmetric matrix (only the lower triangle is
/// read). A pivot at or below 1e-12 * trace/dim triggers one retry with
/// 1e-10 * trace/dim added to the diagonal; a second failure throws.
inline Matrix cholesky_lower(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidDimension("cholesky: matrix must be square and non-empty");
  }
  const double scale = a.trace() / static_cast<double>(a.rows());
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw NotPositiveDefinite("cholesky: non-positive or non-finite trace");
  }
  const double floor = detail::kPivotFloor * scale;
  Matrix lower;
  if (detail::try_cholesky(a, floor, lower)) return lower;
  Matrix jittered = a;
  jittered.diagonal().array() += detail::kJitter * scale;
  if (detail::try_cholesky(jittered, floor, lower)) return lower;
  throw NotPositiveDefinite("cholesky: matrix is not positive definite");
}

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Symmetric positive definite matrix with its Cholesky factor cached.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
      throw InvalidDimension("SpdMatrix: matrix must be square and non-empty");
    }
    if (!a.allFinite()) throw NotPositiveDefinite("SpdMatrix: non-finite entries");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > detail::kSymmetryTol) {
      throw NotPositiveDefinite("SpdMatrix: matrix is not symmetric");
    }
    a_ = symmetrized(a);
    lower_ = cholesky_lower(a_);
  }

  static SpdMatrix identity(Eigen::Index dim) { return scaled_identity(dim, 1.0); }

  static SpdMatrix scaled_identity(Eigen::Index dim, double s) {
    return SpdMatrix(s * Matrix::Identity(dim, dim));
  }

  Eigen::Index dim() const { return a_.rows(); }
  bool empty() const { return a_.size() == 0; }
  const Matrix& matrix() const { return a_; }
  const Matrix& lower() const { return lower_; }

  /// A^{-1} b.
  Matrix solve(const Matrix& b) const {
    const auto l = lower_.triangularView<Eigen::Lower>();
    return l.transpose().solve(l.solve(b));
  }

  /// L^{-1} b, so that (L^{-1} b)^T (L^{-1} b) = b^T A^{-1} b.
  Matrix whiten(const Matrix& b) const {
    return lower_.triangularView<Eigen::Lower>().solve(b);
  }

  Matrix inverse() const { return symmetrized(solve(Matrix::Identity(dim(), dim()))); }

  double log_det() const { return 2.0 * lower_.diagonal().array().log().sum(); }

  SpdMatrix scaled(double s) const {
    if (!(s > 0.0)) throw InvalidArgument("SpdMatrix::scaled: factor must be positive");
    SpdMatrix out;
    out.a_ = s * a_;
    out.lower_ = std::sqrt(s) * lower_;
    return out;
  }

 private:
  Matrix a_;
  Matrix lower_;
};

/// Inverse-Wishart W^{-1}(scale, dof); requires dof > dim + 1 so the mean exists.
struct InverseWishartParams {
  SpdMatrix scale;
  double dof = 0.0;

  InverseWishartParams() = default;
  InverseWishartParams(SpdMatrix s, double nu) : scale(std::move(s)), dof(nu) {
    if (!(dof > static_cast<double>(scale.dim()) + 1.0)) {
      throw InvalidArgument("InverseWishartParams: dof must exceed dim + 1");
    }
  }

  Eigen::Index dim() const { return scale.dim(); }

  SpdMatrix mean() const {
    return scale.scaled(1.0 / (dof - static_cast<double>(dim()) - 1.0));
  }

  SpdMatrix mode() const {
    return scale.scaled(1.0 / (dof + static_cast<double>(dim()) + 1.0));
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Reproducible random stream keyed by (seed, stream id). Each trial of a
/// Monte Carlo run owns its own stream, so results never depend on how
/// trials are scheduled across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x636f7665u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal() { return normal_(engine_); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double chi_squared(double dof) { return 2.0 * std::gamma_distribution<double>(0.5 * dof, 1.0)(engine_); }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix z(rows, cols);
    // column-major fill order is part of the reproducibility contract
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal();
    return z;
  }

  /// Seed for an auxiliary stream family derived from this one's seed.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return detail::splitmix64(seed ^ detail::splitmix64(salt));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline Vector sample_gaussian(const Vector& mean, const SpdMatrix& cov, RngStream& rng) {
  if (mean.size() != cov.dim()) throw InvalidDimension("sample_gaussian: mean/cov size mismatch");
  const Vector z = rng.normal_matrix(mean.size(), 1);
  return mean + cov.lower().triangularView<Eigen::Lower>() * z;
}

/// Columns x_t = mean_t + L z_t for a shared covariance.
inline Matrix sample_gaussian_columns(const Matrix& means, const SpdMatrix& cov, RngStream& rng) {
  if (means.rows() != cov.dim()) throw InvalidDimension("sample_gaussian_columns: size mismatch");
  const Matrix z = rng.normal_matrix(means.rows(), means.cols());
  return means + cov.lower().triangularView<Eigen::Lower>() * z;
}

/// Lower-triangular Bartlett factor A with A A^T ~ Wishart(I_p, dof).
inline Matrix bartlett_factor(Eigen::Index p, double dof, RngStream& rng) {
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double c = rng.chi_squared(dof - static_cast<double>(i));
    if (!(c > 0.0)) throw NotPositiveDefinite("bartlett_factor: degenerate chi-squared draw");
    a(i, i) = std::sqrt(c);
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  return a;
}

/// Draws R ~ W^{-1}(C, dof) and returns K with K^T K = R^{-1}.
///
/// With C = M M^T, the precision R^{-1} = M^{-T} A A^T M^{-1} is Wishart(C^{-1}, dof)
/// for a Bartlett factor A, so K = A^T M^{-1}.
inline Matrix sample_precision_root(const SpdMatrix& scale, double dof, RngStream& rng) {
  const Matrix a = bartlett_factor(scale.dim(), dof, rng);
  // K^T = M^{-T} A  <=>  M^T K^T = A
  const Matrix kt = scale.lower().triangularView<Eigen::Lower>().transpose().solve(a);
  return kt.transpose();
}

/// R ~ W^{-1}(C, dof) via the Bartlett decomposition of the Wishart for C^{-1}:
/// R = M A^{-T} A^{-1} M^T = T^T T with T = A^{-1} M^T.
inline SpdMatrix sample_inverse_wishart(const InverseWishartParams& params, RngStream& rng) {
  const Matrix a = bartlett_factor(params.dim(), params.dof, rng);
  const Matrix t = a.triangularView<Eigen::Lower>().solve(params.scale.lower().transpose());
  return SpdMatrix(symmetrized(t.transpose() * t));
}

/// log Gamma_p(a), the multivariate gamma function.
inline double log_multigamma(Eigen::Index p, double a) {
  const double pd = static_cast<double>(p);
  double out = 0.25 * pd * (pd - 1.0) * std::log(std::numbers::pi);
  for (Eigen::Index j = 0; j < p; ++j) out += std::lgamma(a - 0.5 * static_cast<double>(j));
  return out;
}

/// Normalized log-density of W^{-1}(C, nu) at X:
/// (nu/2) ln|C| - (nu p/2) ln 2 - ln Gamma_p(nu/2) - ((nu+p+1)/2) ln|X| - tr(C X^{-1})/2.
inline double logpdf_inverse_wishart(const SpdMatrix& x, const InverseWishartParams& params) {
  if (x.dim() != params.dim()) throw InvalidDimension("logpdf_inverse_wishart: dim mismatch");
  const double p = static_cast<double>(params.dim());
  const double nu = params.dof;
  const double trace_term = x.solve(params.scale.matrix()).trace();
  return 0.5 * nu * params.scale.log_det() - 0.5 * nu * p * std::numbers::ln2 -
         log_multigamma(params.dim(), 0.5 * nu) - 0.5 * (nu + p + 1.0) * x.log_det() -
         0.5 * trace_term;
}

}  // namespace covest
