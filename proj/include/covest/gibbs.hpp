#pragma once

// Gibbs approximation of the posterior mean E[X | Y] under the
// inverse-Wishart priors. Used as the MSE reference in benchmarks.

#include <functional>

#include "covest/distributions.hpp"
#include "covest/estimators.hpp"
#include "covest/model.hpp"

namespace covest {

struct GibbsConfig {
  int n_samples = 2000;  // retained sweeps
  int burn_in = -1;      // negative: 10% of n_samples
  RngStream rng{0, 0};

  int effective_burn_in() const { return burn_in >= 0 ? burn_in : n_samples / 10; }
};

/// Sees every sweep: the X draw and roots K_P, K_R with K^T K = P^{-1}, R^{-1}.
using GibbsObserver = std::function<void(int sweep, const Matrix& x, const Matrix& p_root, const Matrix& r_root)>;

/// Cycles X | P, R  ->  P | X  ->  R | X starting from (X_mvu, P0, R0) and
/// averages X over the retained sweeps. The covariances are carried as
/// precision roots since the X conditional only needs P^{-1} and R^{-1}.
inline Matrix gibbs_posterior_mean(const ProblemSpec& spec, const ObservationBatch& obs, const GibbsConfig& cfg,
                                   const GibbsObserver& observer = {}) {
  check_observation(spec, obs);
  if (cfg.n_samples < 1) throw InvalidArgument("gibbs: n_samples must be >= 1");
  RngStream rng = cfg.rng;
  const Matrix& h = spec.h();
  const Matrix& u = spec.u();
  const double big_n = static_cast<double>(spec.num_snapshots());
  const Eigen::Index n = spec.n();

  Matrix x = estimate_mvu(spec, obs);
  Matrix p_root = spec.p0().lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix r_root = spec.r0().lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(spec.m(), spec.m()));

  const int burn = cfg.effective_burn_in();
  const int total = burn + cfg.n_samples;
  Matrix sum = Matrix::Zero(n, spec.num_snapshots());
  for (int sweep = 0; sweep < total; ++sweep) {
    const Matrix b = r_root * h;
    const Matrix z = r_root * obs.y;
    const Matrix p_inv = p_root.transpose() * p_root;
    const Matrix precision = symmetrized(b.transpose() * b + p_inv);
    const Matrix l = cholesky_lower(precision);
    const auto lv = l.triangularView<Eigen::Lower>();
    const Matrix mean = lv.transpose().solve(lv.solve(b.transpose() * z + p_inv * u));
    x = mean + lv.transpose().solve(rng.normal_matrix(n, spec.num_snapshots()));

    const Matrix dev = x - u;
    p_root = sample_precision_root(SpdMatrix(symmetrized(spec.c_x().matrix() + dev * dev.transpose())),
                                   spec.nu_x() + big_n, rng);
    const Matrix resid = obs.y - h * x;
    r_root = sample_precision_root(SpdMatrix(symmetrized(spec.c_w().matrix() + resid * resid.transpose())),
                                   spec.nu_w() + big_n, rng);

    if (observer) observer(sweep, x, p_root, r_root);
    if (sweep >= burn) sum += x;
  }
  return sum / static_cast<double>(cfg.n_samples);
}

}  // namespace covest
