#include <gtest/gtest.h>

#include <cmath>

#include "covest/distributions.hpp"
#include "oracles.hpp"

using namespace covest;

namespace {

Matrix random_spd(Eigen::Index p, RngStream& rng) {
  const Matrix g = rng.normal_matrix(p, p);
  return g.transpose() * g + Matrix::Identity(p, p);
}

}  // namespace

TEST(Cholesky, IdentityIsItsOwnFactor) {
  EXPECT_TRUE(cholesky_lower(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
}

TEST(Cholesky, TwoByTwoHandFactor) {
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  const Matrix l = cholesky_lower(a);
  EXPECT_LT((l - expected).norm(), 1e-15);
  EXPECT_LT((l * l.transpose() - a).norm(), 1e-15);
}

TEST(Cholesky, IndefiniteMatrixThrows) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(cholesky_lower(a), NotPositiveDefinite);
  EXPECT_THROW(SpdMatrix{a}, NotPositiveDefinite);
}

TEST(Cholesky, TinyPivotIsJitteredOnce) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1e-14;
  const Matrix l = cholesky_lower(a);
  const double jitter = 1e-10 * a.trace() / 2.0;
  EXPECT_NEAR(l(1, 1) * l(1, 1), 1e-14 + jitter, 1e-24);
}

TEST(Cholesky, ZeroMatrixAndNonSquareFail) {
  EXPECT_THROW(cholesky_lower(Matrix::Zero(2, 2)), NotPositiveDefinite);
  EXPECT_THROW(cholesky_lower(Matrix::Ones(2, 3)), InvalidDimension);
  Matrix a = Matrix::Identity(2, 2);
  a(1, 1) = -1e-3;
  a(0, 0) = 3.0;
  EXPECT_THROW(cholesky_lower(a), NotPositiveDefinite);
}

TEST(Cholesky, RoundTripOnRandomSpd) {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index p = 1 + trial % 12;
    const Matrix a = random_spd(p, rng);
    const Matrix l = cholesky_lower(a);
    EXPECT_LT((l * l.transpose() - a).norm() / a.norm(), 1e-12);
  }
}

TEST(SpdMatrix, RejectsAsymmetry) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = 1e-9;
  EXPECT_THROW(SpdMatrix{a}, NotPositiveDefinite);
  a(0, 1) = 5e-11;
  EXPECT_NO_THROW(SpdMatrix{a});
}

TEST(SpdMatrix, SolveInverseLogDetAgreeWithDense) {
  RngStream rng(3, 1);
  const Matrix a = random_spd(5, rng);
  const SpdMatrix s(a);
  const Matrix b = rng.normal_matrix(5, 3);
  EXPECT_LT((s.solve(b) - a.inverse() * b).norm(), 1e-10);
  EXPECT_LT((s.inverse() - a.inverse()).norm(), 1e-10);
  EXPECT_NEAR(s.log_det(), std::log(a.determinant()), 1e-10);
  const Matrix z = s.whiten(b);
  EXPECT_LT((z.transpose() * z - b.transpose() * a.inverse() * b).norm(), 1e-10);
  const SpdMatrix t = s.scaled(4.0);
  EXPECT_LT((t.lower() - 2.0 * s.lower()).norm(), 1e-14);
}

TEST(RngStream, SameKeyReproducesSequence) {
  RngStream a(42, 9), b(42, 9), c(42, 10);
  const Matrix za = a.normal_matrix(4, 4);
  const Matrix zb = b.normal_matrix(4, 4);
  const Matrix zc = c.normal_matrix(4, 4);
  EXPECT_EQ(za, zb);
  EXPECT_NE(za, zc);
  EXPECT_EQ(a.chi_squared(3.5), b.chi_squared(3.5));
}

TEST(RngStream, DistinctStreamsAreUncorrelated) {
  RngStream a(1, 0), b(1, 1);
  constexpr int kDraws = 100000;
  double sab = 0.0;
  for (int i = 0; i < kDraws; ++i) sab += a.normal() * b.normal();
  EXPECT_LT(std::abs(sab / kDraws), 4.0 / std::sqrt(kDraws));
}

TEST(SampleGaussian, EmpiricalMeanNearZero) {
  RngStream rng(11, 0);
  const SpdMatrix cov = SpdMatrix::identity(2);
  Vector sum = Vector::Zero(2);
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) sum += sample_gaussian(Vector::Zero(2), cov, rng);
  EXPECT_LT((sum / kDraws).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleGaussian, ScalingCovarianceByFourDoublesSamples) {
  RngStream a(5, 2), b(5, 2);
  Matrix c(3, 3);
  c << 2, 0.5, 0.1, 0.5, 1, 0.2, 0.1, 0.2, 3;
  const SpdMatrix s1(c), s4(4.0 * c);
  for (int i = 0; i < 10; ++i) {
    const Vector x1 = sample_gaussian(Vector::Zero(3), s1, a);
    const Vector x4 = sample_gaussian(Vector::Zero(3), s4, b);
    EXPECT_LT((x4 - 2.0 * x1).norm(), 1e-12 * (1.0 + x1.norm()));
  }
}

TEST(SampleGaussian, EmpiricalCovarianceNearIdentity) {
  RngStream rng(13, 0);
  Vector mu(3);
  mu << 1.0, -2.0, 0.5;
  const SpdMatrix cov = SpdMatrix::identity(3);
  constexpr int kDraws = 100000;
  Matrix samples(3, kDraws);
  for (int i = 0; i < kDraws; ++i) samples.col(i) = sample_gaussian(mu, cov, rng);
  const Vector mean = samples.rowwise().mean();
  const Matrix centred = samples.colwise() - mean;
  const Matrix emp = centred * centred.transpose() / (kDraws - 1);
  EXPECT_LT((emp - Matrix::Identity(3, 3)).norm(), 0.05);
  EXPECT_THROW(sample_gaussian(Vector::Zero(2), cov, rng), InvalidDimension);
}

TEST(InverseWishart, ParamsValidateDof) {
  EXPECT_THROW(InverseWishartParams(SpdMatrix::identity(2), 3.0), InvalidArgument);
  EXPECT_NO_THROW(InverseWishartParams(SpdMatrix::identity(2), 3.5));
  const InverseWishartParams p(SpdMatrix::scaled_identity(2, 6.0), 5.0);
  EXPECT_LT((p.mean().matrix() - 3.0 * Matrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((p.mode().matrix() - 0.75 * Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(InverseWishart, ScalarMeanNearPointEight) {
  RngStream rng(17, 0);
  const InverseWishartParams params(SpdMatrix::scaled_identity(1, 0.8), 3.0);
  constexpr int kDraws = 100000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) sum += sample_inverse_wishart(params, rng).matrix()(0, 0);
  EXPECT_NEAR(sum / kDraws, 0.8, 0.05 * 0.8);
}

TEST(InverseWishart, HugeDofConcentratesOnMean) {
  RngStream rng(19, 0);
  const double dof = 1e5;
  const InverseWishartParams params(SpdMatrix::scaled_identity(3, dof - 4.0), dof);
  for (int i = 0; i < 20; ++i) {
    EXPECT_LT((sample_inverse_wishart(params, rng).matrix() - Matrix::Identity(3, 3)).norm(), 0.05);
  }
}

TEST(InverseWishart, TwoByTwoMeanIsHalfIdentity) {
  RngStream rng(23, 0);
  const InverseWishartParams params(SpdMatrix::identity(2), 5.0);
  constexpr int kDraws = 100000;
  Matrix sum = Matrix::Zero(2, 2);
  for (int i = 0; i < kDraws; ++i) sum += sample_inverse_wishart(params, rng).matrix();
  const Matrix expected = 0.5 * Matrix::Identity(2, 2);
  EXPECT_LT((sum / kDraws - expected).norm() / expected.norm(), 0.05);
}

TEST(InverseWishart, MeanLawWithinThreeStandardErrors) {
  const struct {
    Eigen::Index p;
    double dof;
  } grid[] = {{1, 8.0}, {2, 10.0}, {3, 12.5}, {4, 15.0}};
  for (const auto& g : grid) {
    RngStream rng(29, static_cast<std::uint64_t>(g.p));
    RngStream gen(31, static_cast<std::uint64_t>(g.p));
    const SpdMatrix scale(random_spd(g.p, gen));
    const InverseWishartParams params(scale, g.dof);
    constexpr int kDraws = 100000;
    Matrix sum = Matrix::Zero(g.p, g.p);
    Matrix sumsq = Matrix::Zero(g.p, g.p);
    for (int i = 0; i < kDraws; ++i) {
      const Matrix s = sample_inverse_wishart(params, rng).matrix();
      sum += s;
      sumsq += s.cwiseProduct(s);
    }
    const Matrix mean = sum / kDraws;
    const Matrix var = sumsq / kDraws - mean.cwiseProduct(mean);
    // standard error of the Frobenius deviation, entries treated as independent
    const double se = std::sqrt(var.sum() / kDraws);
    const double err = (mean - params.mean().matrix()).norm();
    EXPECT_LT(err, 3.0 * se) << "p=" << g.p << " dof=" << g.dof;
  }
}

TEST(InverseWishart, EverySampleIsSpd) {
  RngStream rng(37, 0);
  const InverseWishartParams params(SpdMatrix::scaled_identity(16, 1.0), 18.0);
  for (int i = 0; i < 500; ++i) {
    const SpdMatrix s = sample_inverse_wishart(params, rng);
    EXPECT_LT((s.matrix() - s.matrix().transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NO_THROW(cholesky_lower(s.matrix()));
  }
}

TEST(InverseWishart, PrecisionRootMatchesInverseSample) {
  RngStream a(41, 3), b(41, 3);
  RngStream gen(43, 0);
  const SpdMatrix scale(random_spd(4, gen));
  const InverseWishartParams params(scale, 7.0);
  const SpdMatrix r = sample_inverse_wishart(params, a);
  const Matrix k = sample_precision_root(scale, 7.0, b);
  EXPECT_LT((k.transpose() * k - r.inverse()).norm() / r.inverse().norm(), 1e-10);
}

TEST(LogPdfInverseWishart, ScalarMatchesInverseGamma) {
  for (double x : {0.1, 0.5, 1.0, 2.5, 10.0}) {
    for (double dof : {3.0, 4.5, 9.0}) {
      const double c = 0.8;
      const InverseWishartParams params(SpdMatrix::scaled_identity(1, c), dof);
      const double ours = logpdf_inverse_wishart(SpdMatrix::scaled_identity(1, x), params);
      EXPECT_NEAR(ours, oracle::inverse_gamma_logpdf(x, 0.5 * dof, 0.5 * c), 1e-12);
    }
  }
}

TEST(LogPdfInverseWishart, ModeMaximizesAlongScaleRay) {
  RngStream gen(47, 0);
  const SpdMatrix scale(random_spd(3, gen));
  const InverseWishartParams params(scale, 8.0);
  const double t_mode = 1.0 / (8.0 + 3.0 + 1.0);
  const double at_mode = logpdf_inverse_wishart(scale.scaled(t_mode), params);
  for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) {
    EXPECT_LT(logpdf_inverse_wishart(scale.scaled(t_mode * f), params), at_mode);
  }
}

TEST(LogPdfInverseWishart, DoublingScalarArgument) {
  const InverseWishartParams params(SpdMatrix::identity(1), 3.0);
  const double diff = logpdf_inverse_wishart(SpdMatrix::scaled_identity(1, 2.0), params) -
                      logpdf_inverse_wishart(SpdMatrix::identity(1), params);
  EXPECT_NEAR(diff, -(3.0 + 1.0 + 1.0) / 2.0 * std::log(2.0) - 0.5 * (0.5 - 1.0), 1e-12);
}

TEST(LogPdfInverseWishart, DimensionMismatchThrows) {
  const InverseWishartParams params(SpdMatrix::identity(2), 5.0);
  EXPECT_THROW(logpdf_inverse_wishart(SpdMatrix::identity(3), params), InvalidDimension);
}
