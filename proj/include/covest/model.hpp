#pragma once

// Generative model Y = H X + W with inverse-Wishart covariance priors, and the
// MIMO training-sequence setup used by the benchmark scenarios.

#include <cmath>
#include <numbers>
#include <utility>

#include "covest/distributions.hpp"

namespace covest {

/// Which pair of log-det weights the concentrated cost uses.
/// kCmap: gamma = nu + p + 1 + N (joint MAP over X, P, R).
/// kMmap: gamma = nu + N (covariances marginalized out).
enum class WeightMode { kCmap, kMmap };

struct Weights {
  double gamma_x = 0.0;
  double gamma_w = 0.0;
};

class ProblemSpec {
 public:
  ProblemSpec() = default;

  /// h is m x n with full column rank, u is the n x N matrix of prior means.
  ProblemSpec(Matrix h, Matrix u, SpdMatrix p0, SpdMatrix r0, double nu_x, double nu_w)
      : h_(std::move(h)), u_(std::move(u)), p0_(std::move(p0)), r0_(std::move(r0)), nu_x_(nu_x),
        nu_w_(nu_w) {
    validate();
    c_x_ = p0_.scaled(nu_x_ - static_cast<double>(n()) - 1.0);
    c_w_ = r0_.scaled(nu_w_ - static_cast<double>(m()) - 1.0);
  }

  Eigen::Index m() const { return h_.rows(); }
  Eigen::Index n() const { return h_.cols(); }
  Eigen::Index num_snapshots() const { return u_.cols(); }

  const Matrix& h() const { return h_; }
  const Matrix& u() const { return u_; }
  const SpdMatrix& p0() const { return p0_; }
  const SpdMatrix& r0() const { return r0_; }
  double nu_x() const { return nu_x_; }
  double nu_w() const { return nu_w_; }

  /// Inverse-Wishart scales chosen so that E[P] = P0 and E[R] = R0.
  const SpdMatrix& c_x() const { return c_x_; }
  const SpdMatrix& c_w() const { return c_w_; }

  InverseWishartParams prior_x() const { return {c_x_, nu_x_}; }
  InverseWishartParams prior_w() const { return {c_w_, nu_w_}; }

  Weights weights(WeightMode mode) const {
    const double big_n = static_cast<double>(num_snapshots());
    if (mode == WeightMode::kMmap) return {nu_x_ + big_n, nu_w_ + big_n};
    return {nu_x_ + static_cast<double>(n()) + 1.0 + big_n,
            nu_w_ + static_cast<double>(m()) + 1.0 + big_n};
  }

  ProblemSpec with_dof(double nu_x, double nu_w) const { return {h_, u_, p0_, r0_, nu_x, nu_w}; }

  ProblemSpec with_prior_mean(Matrix u) const { return {h_, std::move(u), p0_, r0_, nu_x_, nu_w_}; }

 private:
  void validate() const {
    if (h_.size() == 0) throw InvalidDimension("ProblemSpec: H is empty");
    if (h_.rows() < h_.cols()) throw InvalidDimension("ProblemSpec: H must have m >= n");
    if (u_.rows() != h_.cols() || u_.cols() < 1) {
      throw InvalidDimension("ProblemSpec: U must be n x N with N >= 1");
    }
    if (p0_.dim() != n()) throw InvalidDimension("ProblemSpec: P0 must be n x n");
    if (r0_.dim() != m()) throw InvalidDimension("ProblemSpec: R0 must be m x m");
    if (!h_.allFinite() || !u_.allFinite()) throw InvalidArgument("ProblemSpec: non-finite entries");
    const Vector sv = Eigen::JacobiSVD<Matrix>(h_).singularValues();
    if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
      throw InvalidDimension("ProblemSpec: H does not have full column rank");
    }
    if (!(nu_x_ > static_cast<double>(n()) + 1.0)) throw InvalidArgument("ProblemSpec: nu_x must exceed n + 1");
    if (!(nu_w_ > static_cast<double>(m()) + 1.0)) throw InvalidArgument("ProblemSpec: nu_w must exceed m + 1");
  }

  Matrix h_;
  Matrix u_;
  SpdMatrix p0_;
  SpdMatrix r0_;
  double nu_x_ = 0.0;
  double nu_w_ = 0.0;
  SpdMatrix c_x_;
  SpdMatrix c_w_;
};

struct ObservationBatch {
  Matrix y;  // m x N
};

struct GroundTruth {
  Matrix x;  // n x N
  SpdMatrix p;
  SpdMatrix r;
  Matrix w;  // m x N
};

struct Realization {
  GroundTruth truth;
  ObservationBatch obs;
};

/// Smallest integer dof with a finite inverse-Wishart mean: p + 2.
inline double minimal_dof(Eigen::Index dim) { return static_cast<double>(dim) + 2.0; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline constexpr double kTrainingPower = 10.0;

/// d x K training sequence with orthogonal rows and ||S||_F^2 = 10, built
/// from the first d rows of the orthonormal DCT-II basis.
inline Matrix training_sequence(Eigen::Index k, Eigen::Index d) {
  if (d < 1 || k < d) throw InvalidDimension("training_sequence: need K >= antenna_dim >= 1");
  Matrix s(d, k);
  const double kd = static_cast<double>(k);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double norm = (i == 0) ? std::sqrt(1.0 / kd) : std::sqrt(2.0 / kd);
    for (Eigen::Index t = 0; t < k; ++t) {
      s(i, t) = norm * std::cos(std::numbers::pi * static_cast<double>(i) * (static_cast<double>(t) + 0.5) / kd);
    }
  }
  return std::sqrt(kTrainingPower / static_cast<double>(d)) * s;
}

/// H = S^T (x) I_d.
inline Matrix kron_training_design(const Matrix& s) {
  const Eigen::Index d = s.rows();
  const Eigen::Index k = s.cols();
  Matrix h = Matrix::Zero(k * d, d * d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index a = 0; a < d; ++a) h(i * d + a, j * d + a) = s(j, i);
  return h;
}

/// MIMO channel estimation setup: x = vec(A) for a d x d channel observed over
/// K training snapshots, P0 = I/n, R0 = sigma_w^2 I with
/// sigma_w^2 = tr{H H^T} / (m n snr), and zero prior mean.
inline ProblemSpec build_mimo_spec(Eigen::Index k, double snr_linear, double nu_x, double nu_w,
                                   Eigen::Index num_snapshots, Eigen::Index antenna_dim = 2) {
  if (antenna_dim < 1 || k < antenna_dim) throw InvalidDimension("build_mimo_spec: need K >= antenna_dim");
  if (num_snapshots < 1) throw InvalidDimension("build_mimo_spec: N must be positive");
  if (!(snr_linear > 0.0)) throw InvalidArgument("build_mimo_spec: snr must be positive");
  Matrix h = kron_training_design(training_sequence(k, antenna_dim));
  const double m = static_cast<double>(h.rows());
  const double n = static_cast<double>(h.cols());
  const double sigma2 = (h * h.transpose()).trace() / (m * n * snr_linear);
  const Eigen::Index rows = h.rows();
  const Eigen::Index cols = h.cols();
  return ProblemSpec(std::move(h), Matrix::Zero(cols, num_snapshots),
                     SpdMatrix::scaled_identity(cols, 1.0 / n),
                     SpdMatrix::scaled_identity(rows, sigma2), nu_x, nu_w);
}

/// tr{H P0 H^T} / tr{R0}.
inline double snr_of(const ProblemSpec& spec) {
  return (spec.h() * spec.p0().matrix() * spec.h().transpose()).trace() / spec.r0().matrix().trace();
}

/// E[||X||_F^2] = N tr{P0} + ||U||_F^2.
inline double expected_signal_energy(const ProblemSpec& spec) {
  return static_cast<double>(spec.num_snapshots()) * spec.p0().matrix().trace() + spec.u().squaredNorm();
}

/// Draws P, R from their priors, then X | P and W | R column by column.
/// Draw order (P, R, X, W) is fixed so a stream reproduces the scenario.
inline Realization draw_scenario(const ProblemSpec& spec, RngStream& rng) {
  Realization out;
  out.truth.p = sample_inverse_wishart(spec.prior_x(), rng);
  out.truth.r = sample_inverse_wishart(spec.prior_w(), rng);
  out.truth.x = sample_gaussian_columns(spec.u(), out.truth.p, rng);
  out.truth.w = sample_gaussian_columns(Matrix::Zero(spec.m(), spec.num_snapshots()), out.truth.r, rng);
  out.obs.y = spec.h() * out.truth.x + out.truth.w;
  return out;
}

inline void check_observation(const ProblemSpec& spec, const ObservationBatch& obs) {
  if (obs.y.rows() != spec.m() || obs.y.cols() != spec.num_snapshots()) {
    throw InvalidDimension("observation batch must be m x N for the problem spec");
  }
}

}  // namespace covest
