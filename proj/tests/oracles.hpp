#pragma once

// Independent reference computations used only by the tests: dense grids,
// finite differences and quadrature. None of them calls into the solvers.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;

/// Scalar concentrated cost with explicit weights:
/// (gw/2) ln(1 + (y - h x)^2 / cw) + (gx/2) ln(1 + (x - u)^2 / cx).
struct ScalarCost {
  double y, h, cx, cw, gx, gw, u = 0.0;

  double operator()(double x) const {
    const double r = y - h * x;
    const double d = x - u;
    return 0.5 * gw * std::log1p(r * r / cw) + 0.5 * gx * std::log1p(d * d / cx);
  }

  double d1(double x) const {
    const double r = y - h * x;
    const double d = x - u;
    return -gw * h * r / (cw + r * r) + gx * d / (cx + d * d);
  }

  double d2(double x) const {
    const double r = y - h * x;
    const double d = x - u;
    return gw * h * h * (cw - r * r) / ((cw + r * r) * (cw + r * r)) + gx * (cx - d * d) / ((cx + d * d) * (cx + d * d));
  }
};

/// Local minima of a scalar cost on [lo, hi]: grid scan then Newton polishing.
inline std::vector<double> scalar_minima(const ScalarCost& f, double lo, double hi, int points = 200001) {
  std::vector<double> out;
  const double step = (hi - lo) / (points - 1);
  double prev = f(lo), cur = f(lo + step);
  for (int i = 2; i < points; ++i) {
    const double x = lo + i * step;
    const double next = f(x);
    if (cur <= prev && cur < next) {
      double z = x - step;
      for (int k = 0; k < 50; ++k) {
        const double dz = f.d1(z) / f.d2(z);
        z -= dz;
        if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
      }
      out.push_back(z);
    }
    prev = cur;
    cur = next;
  }
  return out;
}

/// Central differences of f at x with step h, entry by entry.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Matrix a = x, b = x;
      a(i, j) += h;
      b(i, j) -= h;
      g(i, j) = (f(a) - f(b)) / (2.0 * h);
    }
  return g;
}

/// Posterior mean of x for the scalar model y = h x + w with both variances
/// inverse-gamma distributed and integrated out analytically. The marginal
/// posterior is proportional to
///   (cx + (x-u)^2)^{-(nux+1)/2} (cw + (y-hx)^2)^{-(nuw+1)/2};
/// integrated by composite Simpson after x = c + s tan(theta).
inline double scalar_posterior_mean(double y, double h, double cx, double cw, double nux, double nuw, double u = 0.0,
                                    int panels = 400000) {
  const double centre = 0.5 * (u + y / h);
  const double scale = 1.0 + std::abs(y / h - u);
  auto density = [&](double x) {
    const double d = x - u;
    const double r = y - h * x;
    return std::exp(-0.5 * (nux + 1.0) * std::log(cx + d * d) - 0.5 * (nuw + 1.0) * std::log(cw + r * r));
  };
  const double lo = -0.5 * std::numbers::pi, hi = 0.5 * std::numbers::pi;
  const double step = (hi - lo) / panels;
  double z = 0.0, m = 0.0;
  for (int i = 1; i < panels; ++i) {
    const double t = lo + i * step;
    const double x = centre + scale * std::tan(t);
    const double jac = scale / (std::cos(t) * std::cos(t));
    const double w = (i % 2 == 1) ? 4.0 : 2.0;
    const double f = density(x) * jac;
    z += w * f;
    m += w * f * x;
  }
  return m / z;
}

/// Inverse-gamma log density with shape a and scale b.
inline double inverse_gamma_logpdf(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

/// MAP formula evaluated with explicit inverses.
inline Matrix map_by_inverses(const Matrix& h, const Matrix& y, const Matrix& u, const Matrix& p, const Matrix& r) {
  const Matrix ri = r.inverse();
  const Matrix pi = p.inverse();
  return (h.transpose() * ri * h + pi).inverse() * (h.transpose() * ri * y + pi * u);
}

}  // namespace oracle
