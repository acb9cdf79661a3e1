#pragma once

// Point estimators for Y = H X + W: MVU, MAP with fixed covariances, the
// joint signal/covariance MAP (fixed-point and gradient descent), its
// marginalized and variational variants, and the difference-regret baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

#include "covest/distributions.hpp"
#include "covest/model.hpp"

namespace covest {

enum class StartKind { kMvu, kPrior, kTieBroken, kRandom };
enum class SolverStatus { kConverged, kMaxIters, kDiverged, kStalled };
/// Centre of the randomized starting points (RMAP).
enum class StartMean { kMvu, kPrior, kMap, kDre };
/// kSnapshot uses N x N inverses, kDimension the m x m / n x n forms
/// obtained with the matrix inversion lemma.
enum class GradientForm { kAuto, kSnapshot, kDimension };
/// Scatter terms in the variational updates. kScaledSignal keeps the factor N
/// on U~U~^T in the signal scatter and uses the exact residual expectation for
/// the noise scatter; kExact uses exact expectations for both; kLiteral applies
/// the factor N to the H U~U~^T H^T term of the noise scatter as well.
enum class VmapScatter { kScaledSignal, kExact, kLiteral };

constexpr std::string_view to_string(StartKind k) {
  switch (k) {
    case StartKind::kMvu: return "mvu";
    case StartKind::kPrior: return "prior";
    case StartKind::kTieBroken: return "tie_broken";
    case StartKind::kRandom: return "random";
  }
  return "?";
}

constexpr std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kMaxIters: return "max_iters";
    case SolverStatus::kDiverged: return "diverged";
    case SolverStatus::kStalled: return "stalled";
  }
  return "?";
}

/// Called after every iterate: (start index, iteration number starting at 1, iterate).
using IterateObserver = std::function<void(int, int, const Matrix&)>;

struct SolverOptions {
  double epsilon = 1e-6;
  int max_iters = 1000;
  WeightMode weight_mode = WeightMode::kCmap;
  double step_size = 1e-4;  // gradient descent only
  bool backtracking = true;  // gradient descent only
  int random_starts = 0;     // > 0 replaces the two standard starts (RMAP)
  StartMean start_mean = StartMean::kMvu;
  std::uint64_t random_start_seed = 0;
  VmapScatter vmap_scatter = VmapScatter::kScaledSignal;
  IterateObserver observer;

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("SolverOptions: epsilon must be positive");
    if (max_iters < 1) throw InvalidArgument("SolverOptions: max_iters must be >= 1");
    if (!(step_size > 0.0)) throw InvalidArgument("SolverOptions: step_size must be positive");
    if (random_starts < 0) throw InvalidArgument("SolverOptions: random_starts must be >= 0");
  }
};

struct StartOutcome {
  StartKind kind = StartKind::kMvu;
  Matrix x;
  double cost = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::kMaxIters;
};

struct EstimateResult {
  Matrix x_hat;
  SpdMatrix p_hat;
  SpdMatrix r_hat;
  int iterations = 0;  // summed over all starts
  double final_cost = 0.0;
  StartKind start_used = StartKind::kMvu;
  bool converged = false;
  SolverStatus status = SolverStatus::kMaxIters;
  std::vector<StartOutcome> starts;
};

/// Eigenvalue bounds (descending eigenvalue order) for the difference-regret estimator.
struct DreBounds {
  Vector lower_x, upper_x;
  Vector lower_w, upper_w;
};

// ---------------------------------------------------------------------------
// Linear estimators with fixed covariances

namespace detail {

inline Matrix spd_solve(const Matrix& g, const Matrix& rhs) {
  const Matrix l = cholesky_lower(symmetrized(g));
  const auto lv = l.triangularView<Eigen::Lower>();
  return lv.transpose().solve(lv.solve(rhs));
}

inline double log_det_spd(const Matrix& a) {
  return 2.0 * cholesky_lower(symmetrized(a)).diagonal().array().log().sum();
}

/// ln|I_N + E^T C^{-1} E|, evaluated as ln|C + E E^T| - ln|C| when N > dim(C).
inline double log_det_gram(const SpdMatrix& c, const Matrix& e) {
  if (e.cols() <= c.dim()) {
    const Matrix z = c.whiten(e);
    Matrix a = z.transpose() * z;
    a.diagonal().array() += 1.0;
    return log_det_spd(a);
  }
  return log_det_spd(c.matrix() + e * e.transpose()) - c.log_det();
}

}  // namespace detail

/// (H^T R0^{-1} H)^{-1} H^T R0^{-1} Y.
inline Matrix estimate_mvu(const ProblemSpec& spec, const ObservationBatch& obs) {
  check_observation(spec, obs);
  const Matrix b = spec.r0().whiten(spec.h());
  const Matrix z = spec.r0().whiten(obs.y);
  try {
    return detail::spd_solve(b.transpose() * b, b.transpose() * z);
  } catch (const NotPositiveDefinite& e) {
    throw SingularNormalEquations(std::string("estimate_mvu: ") + e.what());
  }
}

/// (H^T R^{-1} H + P^{-1})^{-1} (H^T R^{-1} Y + P^{-1} U).
inline Matrix estimate_map(const ProblemSpec& spec, const ObservationBatch& obs, const SpdMatrix& p,
                           const SpdMatrix& r) {
  check_observation(spec, obs);
  if (p.dim() != spec.n() || r.dim() != spec.m()) throw InvalidDimension("estimate_map: covariance dims");
  const Matrix b = r.whiten(spec.h());
  const Matrix z = r.whiten(obs.y);
  Matrix g = b.transpose() * b + p.inverse();
  Matrix rhs = b.transpose() * z + p.solve(spec.u());
  return detail::spd_solve(g, rhs);
}

inline Matrix estimate_map(const ProblemSpec& spec, const ObservationBatch& obs) {
  return estimate_map(spec, obs, spec.p0(), spec.r0());
}

// ---------------------------------------------------------------------------
// Concentrated cost and its gradient

/// V(X) = (g_w/2) ln|I + (Y-HX)^T C_w^{-1} (Y-HX)| + (g_x/2) ln|I + (X-U)^T C_x^{-1} (X-U)|.
inline double cost_v(const ProblemSpec& spec, const ObservationBatch& obs, const Matrix& x,
                     WeightMode mode = WeightMode::kCmap) {
  check_observation(spec, obs);
  const Weights wt = spec.weights(mode);
  const Matrix resid = obs.y - spec.h() * x;
  const Matrix dev = x - spec.u();
  return 0.5 * wt.gamma_w * detail::log_det_gram(spec.c_w(), resid) +
         0.5 * wt.gamma_x * detail::log_det_gram(spec.c_x(), dev);
}

inline Matrix grad_v(const ProblemSpec& spec, const ObservationBatch& obs, const Matrix& x,
                     WeightMode mode = WeightMode::kCmap, GradientForm form = GradientForm::kAuto) {
  check_observation(spec, obs);
  const Weights wt = spec.weights(mode);
  const Matrix resid = obs.y - spec.h() * x;
  const Matrix dev = x - spec.u();
  const Eigen::Index big_n = x.cols();
  if (form == GradientForm::kAuto) {
    form = (big_n > std::max(spec.m(), spec.n())) ? GradientForm::kDimension : GradientForm::kSnapshot;
  }
  if (form == GradientForm::kDimension) {
    const Matrix noise = spec.c_w().matrix() + resid * resid.transpose();
    const Matrix signal = spec.c_x().matrix() + dev * dev.transpose();
    return -wt.gamma_w * spec.h().transpose() * detail::spd_solve(noise, resid) +
           wt.gamma_x * detail::spd_solve(signal, dev);
  }
  // M A^{-1} = (A^{-1} M^T)^T for symmetric A
  const Matrix cw_resid = spec.c_w().solve(resid);
  Matrix a = resid.transpose() * cw_resid;
  a.diagonal().array() += 1.0;
  const Matrix cx_dev = spec.c_x().solve(dev);
  Matrix b = dev.transpose() * cx_dev;
  b.diagonal().array() += 1.0;
  const Matrix m1 = spec.h().transpose() * cw_resid;
  return -wt.gamma_w * detail::spd_solve(a, m1.transpose()).transpose() +
         wt.gamma_x * detail::spd_solve(b, cx_dev.transpose()).transpose();
}

/// P^(X) = (C_x + (X-U)(X-U)^T)/g_x and R^(X) = (C_w + (Y-HX)(Y-HX)^T)/g_w.
inline std::pair<SpdMatrix, SpdMatrix> covariance_updates(const ProblemSpec& spec, const Matrix& x,
                                                          const ObservationBatch& obs,
                                                          WeightMode mode = WeightMode::kCmap) {
  check_observation(spec, obs);
  if (x.rows() != spec.n() || x.cols() != spec.num_snapshots()) {
    throw InvalidDimension("covariance_updates: X must be n x N");
  }
  const Weights wt = spec.weights(mode);
  const Matrix dev = x - spec.u();
  const Matrix resid = obs.y - spec.h() * x;
  SpdMatrix p(symmetrized((spec.c_x().matrix() + dev * dev.transpose()) / wt.gamma_x));
  SpdMatrix r(symmetrized((spec.c_w().matrix() + resid * resid.transpose()) / wt.gamma_w));
  return {std::move(p), std::move(r)};
}

/// One MAP application with the covariances re-estimated at x_prev.
inline Matrix fixed_point_step(const ProblemSpec& spec, const ObservationBatch& obs, const Matrix& x_prev,
                               WeightMode mode = WeightMode::kCmap) {
  const auto [p, r] = covariance_updates(spec, x_prev, obs, mode);
  return estimate_map(spec, obs, p, r);
}

// ---------------------------------------------------------------------------
// Difference-regret baseline

namespace detail {

struct DescendingEigen {
  Vector values;
  Matrix vectors;
};

inline DescendingEigen descending_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Eigen::Index p = a.rows();
  DescendingEigen out{Vector(p), Matrix(p, p)};
  for (Eigen::Index i = 0; i < p; ++i) {
    out.values(i) = es.eigenvalues()(p - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(p - 1 - i);
  }
  return out;
}

}  // namespace detail

/// l = (1 - nu0/nu) lambda and u = (1 + nu0/nu) lambda with nu0 = p + 2, the
/// lower bound clipped at zero for nu < nu0.
inline DreBounds dre_bounds_heuristic(const ProblemSpec& spec) {
  auto bounds = [](const Vector& lambda, double nu0, double nu, Vector& lo, Vector& hi) {
    const double r = nu0 / nu;
    lo = std::max(0.0, 1.0 - r) * lambda;
    hi = (1.0 + r) * lambda;
  };
  DreBounds out;
  bounds(detail::descending_eigen(spec.p0().matrix()).values, minimal_dof(spec.n()), spec.nu_x(),
         out.lower_x, out.upper_x);
  bounds(detail::descending_eigen(spec.r0().matrix()).values, minimal_dof(spec.m()), spec.nu_w(),
         out.lower_w, out.upper_w);
  return out;
}

/// D_x H^T (H D_x H^T + D_w)^{-1} Y with D built on the nominal eigenvectors.
/// The first n noise eigenvalues are paired with the singular values of H in
/// descending order; the remaining m - n keep their nominal values.
inline Matrix estimate_dre(const ProblemSpec& spec, const ObservationBatch& obs, const DreBounds& bounds) {
  check_observation(spec, obs);
  if (spec.u().squaredNorm() > 0.0) throw ZeroMeanRequired("estimate_dre: prior mean must be zero");
  const Eigen::Index n = spec.n();
  const Eigen::Index m = spec.m();
  if (bounds.lower_x.size() != n || bounds.upper_x.size() != n || bounds.lower_w.size() != m ||
      bounds.upper_w.size() != m) {
    throw InvalidDimension("estimate_dre: bound vector sizes");
  }
  if ((bounds.lower_x.array() < 0.0).any() || (bounds.lower_w.array() < 0.0).any() ||
      (bounds.lower_x.array() > bounds.upper_x.array()).any() ||
      (bounds.lower_w.array() > bounds.upper_w.array()).any()) {
    throw InvalidArgument("estimate_dre: bounds must satisfy 0 <= lower <= upper");
  }
  const auto ex = detail::descending_eigen(spec.p0().matrix());
  const auto ew = detail::descending_eigen(spec.r0().matrix());
  const Vector sigma = Eigen::JacobiSVD<Matrix>(spec.h()).singularValues();

  Vector dx(n);
  Vector dw = ew.values;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s2 = sigma(i) * sigma(i);
    const double a = std::sqrt(bounds.lower_w(i) + bounds.upper_x(i) * s2);
    const double b = std::sqrt(bounds.upper_w(i) + bounds.lower_x(i) * s2);
    const double alpha = a / (a + b);
    dx(i) = alpha * bounds.lower_x(i) + (1.0 - alpha) * bounds.upper_x(i);
    dw(i) = alpha * bounds.lower_w(i) + (1.0 - alpha) * bounds.upper_w(i);
  }
  const Matrix d_x = ex.vectors * dx.asDiagonal() * ex.vectors.transpose();
  const Matrix d_w = ew.vectors * dw.asDiagonal() * ew.vectors.transpose();
  const Matrix hdx = spec.h() * d_x;
  const Matrix gram = hdx * spec.h().transpose() + d_w;
  return hdx.transpose() * detail::spd_solve(gram, obs.y);
}

// ---------------------------------------------------------------------------
// Joint MAP by fixed-point iteration

namespace detail {

inline StartOutcome iterate_fixed_point(const ProblemSpec& spec, const ObservationBatch& obs, Matrix x,
                                        StartKind kind, int start_index, const SolverOptions& opts) {
  StartOutcome out;
  out.kind = kind;
  out.status = SolverStatus::kMaxIters;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Matrix next = fixed_point_step(spec, obs, x, opts.weight_mode);
    const double step = (next - x).norm();
    x = std::move(next);
    out.iterations = it;
    if (opts.observer) opts.observer(start_index, it, x);
    if (!std::isfinite(step)) {
      out.status = SolverStatus::kDiverged;
      break;
    }
    if (step < opts.epsilon) {
      out.status = SolverStatus::kConverged;
      break;
    }
  }
  out.cost = cost_v(spec, obs, x, opts.weight_mode);
  out.x = std::move(x);
  return out;
}

inline bool costs_tie(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); }

inline Matrix random_start_centre(const ProblemSpec& spec, const ObservationBatch& obs, StartMean mean,
                                  const Matrix& mvu) {
  switch (mean) {
    case StartMean::kMvu: return mvu;
    case StartMean::kPrior: return spec.u();
    case StartMean::kMap: return estimate_map(spec, obs);
    case StartMean::kDre: return estimate_dre(spec, obs, dre_bounds_heuristic(spec));
  }
  return mvu;
}

inline EstimateResult finish(const ProblemSpec& spec, const ObservationBatch& obs, std::vector<StartOutcome> starts,
                             std::size_t winner, StartKind used, WeightMode mode) {
  EstimateResult res;
  res.x_hat = starts[winner].x;
  res.final_cost = starts[winner].cost;
  res.status = starts[winner].status;
  res.converged = res.status == SolverStatus::kConverged;
  res.start_used = used;
  for (const auto& s : starts) res.iterations += s.iterations;
  auto [p, r] = covariance_updates(spec, res.x_hat, obs, mode);
  res.p_hat = std::move(p);
  res.r_hat = std::move(r);
  res.starts = std::move(starts);
  return res;
}

}  // namespace detail

/// Joint signal/covariance MAP. Iterates the fixed-point map from X_mvu and
/// from U, keeps the point with the lower concentrated cost, and on a tie the
/// one closer to the nominal MAP estimate. With opts.random_starts > 0 the two
/// starts are replaced by Gaussian draws (covariance P0) around opts.start_mean.
inline EstimateResult estimate_cmap(const ProblemSpec& spec, const ObservationBatch& obs,
                                    const SolverOptions& opts = {}) {
  opts.validate();
  check_observation(spec, obs);
  const Matrix mvu = estimate_mvu(spec, obs);

  std::vector<StartOutcome> starts;
  if (opts.random_starts > 0) {
    RngStream rng(opts.random_start_seed, 0);
    const Matrix centre = detail::random_start_centre(spec, obs, opts.start_mean, mvu);
    for (int k = 0; k < opts.random_starts; ++k) {
      Matrix x0 = sample_gaussian_columns(centre, spec.p0(), rng);
      starts.push_back(detail::iterate_fixed_point(spec, obs, std::move(x0), StartKind::kRandom, k, opts));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < starts.size(); ++k)
      if (starts[k].cost < starts[best].cost) best = k;
    return detail::finish(spec, obs, std::move(starts), best, StartKind::kRandom, opts.weight_mode);
  }

  starts.push_back(detail::iterate_fixed_point(spec, obs, mvu, StartKind::kMvu, 0, opts));
  starts.push_back(detail::iterate_fixed_point(spec, obs, spec.u(), StartKind::kPrior, 1, opts));
  const double v1 = starts[0].cost;
  const double v2 = starts[1].cost;
  if (detail::costs_tie(v1, v2)) {
    const Matrix map = estimate_map(spec, obs);
    const std::size_t pick = ((map - starts[0].x).norm() <= (map - starts[1].x).norm()) ? 0 : 1;
    return detail::finish(spec, obs, std::move(starts), pick, StartKind::kTieBroken, opts.weight_mode);
  }
  const std::size_t pick = (v1 < v2) ? 0 : 1;
  const StartKind kind = starts[pick].kind;
  return detail::finish(spec, obs, std::move(starts), pick, kind, opts.weight_mode);
}

/// Marginalized MAP: the same solver with weights nu + N.
inline EstimateResult estimate_mmap(const ProblemSpec& spec, const ObservationBatch& obs, SolverOptions opts = {}) {
  opts.weight_mode = WeightMode::kMmap;
  return estimate_cmap(spec, obs, opts);
}

/// Gradient descent on V from X_mvu, stopping when ||grad||_F < epsilon.
/// With backtracking a step is accepted only if it lowers the cost (halving
/// up to 20 times); without it the fixed step is always taken and ten
/// consecutive cost increases flag divergence.
inline EstimateResult estimate_cmap_gd(const ProblemSpec& spec, const ObservationBatch& obs,
                                       const SolverOptions& opts = {}) {
  opts.validate();
  const WeightMode mode = opts.weight_mode;
  StartOutcome run;
  run.kind = StartKind::kMvu;
  run.status = SolverStatus::kMaxIters;
  Matrix x = estimate_mvu(spec, obs);
  double cost = cost_v(spec, obs, x, mode);
  int increases = 0;
  int it = 0;
  for (;;) {
    const Matrix g = grad_v(spec, obs, x, mode);
    if (g.norm() < opts.epsilon) {
      run.status = SolverStatus::kConverged;
      break;
    }
    if (it >= opts.max_iters) break;
    if (opts.backtracking) {
      double step = opts.step_size;
      bool accepted = false;
      for (int k = 0; k <= 20; ++k, step *= 0.5) {
        Matrix cand = x - step * g;
        const double c = cost_v(spec, obs, cand, mode);
        if (c < cost) {
          x = std::move(cand);
          cost = c;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        run.status = SolverStatus::kStalled;
        break;
      }
    } else {
      x -= opts.step_size * g;
      const double c = cost_v(spec, obs, x, mode);
      increases = (c > cost || !std::isfinite(c)) ? increases + 1 : 0;
      cost = c;
      if (increases >= 10 || !std::isfinite(c)) {
        ++it;
        if (opts.observer) opts.observer(0, it, x);
        run.status = SolverStatus::kDiverged;
        break;
      }
    }
    ++it;
    if (opts.observer) opts.observer(0, it, x);
  }
  run.iterations = it;
  run.cost = cost;
  run.x = x;
  std::vector<StartOutcome> starts{std::move(run)};
  if (!x.allFinite()) {
    EstimateResult res;
    res.x_hat = x;
    res.iterations = it;
    res.final_cost = cost;
    res.status = SolverStatus::kDiverged;
    res.starts = std::move(starts);
    return res;
  }
  return detail::finish(spec, obs, std::move(starts), 0, StartKind::kMvu, mode);
}

// ---------------------------------------------------------------------------
// Variational MAP

/// Mean-field q(X) q(P) q(R) iteration. Each round computes U~ and P~ from the
/// current inverse-Wishart scales C~_x, C~_w (E[P^{-1}] = g'_x C~_x^{-1}), then
/// refreshes the scales; starts at C~ = C and stops on ||U~_l - U~_{l-1}||_F < eps.
/// P^ and R^ are the modes of the q-factors.
inline EstimateResult estimate_vmap(const ProblemSpec& spec, const ObservationBatch& obs,
                                    const SolverOptions& opts = {}) {
  opts.validate();
  check_observation(spec, obs);
  const Weights wt = spec.weights(WeightMode::kMmap);
  const double big_n = static_cast<double>(spec.num_snapshots());
  const Matrix& h = spec.h();
  const Matrix& u = spec.u();
  const Matrix& y = obs.y;

  Matrix ct_x = spec.c_x().matrix();
  Matrix ct_w = spec.c_w().matrix();
  Matrix u_prev;
  Matrix u_t;
  StartOutcome run;
  run.kind = StartKind::kMvu;
  run.status = SolverStatus::kMaxIters;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const SpdMatrix p_eff(symmetrized(ct_x / wt.gamma_x));
    const SpdMatrix r_eff(symmetrized(ct_w / wt.gamma_w));
    const Matrix b = r_eff.whiten(h);
    const Matrix precision = symmetrized(b.transpose() * b + p_eff.inverse());
    const Matrix p_t = SpdMatrix(precision).inverse();
    u_t = estimate_map(spec, obs, p_eff, r_eff);

    const Matrix hu = h * u_t;
    const Matrix hph = h * p_t * h.transpose();
    switch (opts.vmap_scatter) {
      case VmapScatter::kScaledSignal:
        ct_x = spec.c_x().matrix() + big_n * p_t + big_n * u_t * u_t.transpose() - u_t * u.transpose() -
               u * u_t.transpose() + u * u.transpose();
        ct_w = spec.c_w().matrix() + (y - hu) * (y - hu).transpose() + big_n * hph;
        break;
      case VmapScatter::kExact:
        ct_x = spec.c_x().matrix() + big_n * p_t + (u_t - u) * (u_t - u).transpose();
        ct_w = spec.c_w().matrix() + (y - hu) * (y - hu).transpose() + big_n * hph;
        break;
      case VmapScatter::kLiteral:
        ct_x = spec.c_x().matrix() + big_n * p_t + big_n * u_t * u_t.transpose() - u_t * u.transpose() -
               u * u_t.transpose() + u * u.transpose();
        ct_w = spec.c_w().matrix() + y * y.transpose() - y * hu.transpose() - hu * y.transpose() + big_n * hph +
               big_n * hu * hu.transpose();
        break;
    }
    ct_x = symmetrized(ct_x);
    ct_w = symmetrized(ct_w);
    run.iterations = it;
    if (opts.observer) opts.observer(0, it, u_t);
    if (it > 1 && (u_t - u_prev).norm() < opts.epsilon) {
      run.status = SolverStatus::kConverged;
      break;
    }
    u_prev = u_t;
  }
  EstimateResult res;
  res.x_hat = u_t;
  res.p_hat = SpdMatrix(ct_x / (wt.gamma_x + static_cast<double>(spec.n()) + 1.0));
  res.r_hat = SpdMatrix(ct_w / (wt.gamma_w + static_cast<double>(spec.m()) + 1.0));
  res.iterations = run.iterations;
  res.status = run.status;
  res.converged = run.status == SolverStatus::kConverged;
  res.start_used = StartKind::kMvu;
  res.final_cost = cost_v(spec, obs, u_t, WeightMode::kMmap);
  run.x = u_t;
  run.cost = res.final_cost;
  res.starts.push_back(std::move(run));
  return res;
}

/// Distinct convergence points: ||X1 - X2||_F > 1e-2 n N.
inline bool distinct_minima(const EstimateResult& res, Eigen::Index n, Eigen::Index big_n) {
  if (res.starts.size() < 2) return false;
  return (res.starts[0].x - res.starts[1].x).norm() > 1e-2 * static_cast<double>(n * big_n);
}

}  // namespace covest
