#include "dstsgnn/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dstsgnn/verify.hpp"

namespace dstsgnn {
namespace {

using verify::random_graph;
using verify::random_matrix;
using verify::random_orthonormal;
using verify::Rng;

TEST(NormalizedAdjacency, IdentityGraphIsIdentity) {
  const GraphSpec g(Matrix::Identity(5, 5));
  EXPECT_EQ(normalized_adjacency(g), Matrix::Identity(5, 5));
}

TEST(NormalizedAdjacency, AllOnesTwoNode) {
  const GraphSpec g(Matrix::Ones(2, 2));
  EXPECT_EQ(g.degree(), Vector::Constant(2, 2.0));
  EXPECT_TRUE(normalized_adjacency(g).isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));
}

TEST(NormalizedAdjacency, SpectrumInUnitInterval) {
  Rng rng(1);
  const GraphSpec g = random_graph(8, rng);
  const Matrix a = normalized_adjacency(g);
  EXPECT_EQ(a, a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  EXPECT_LE(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1.0 - 1e-12);
}

TEST(NormalizedAdjacency, ZeroDegreeRejected) {
  Matrix a = Matrix::Ones(3, 3);
  a.row(1).setZero();
  a.col(1).setZero();
  try {
    normalized_adjacency(GraphSpec(a));
    FAIL() << "expected ZeroDegree";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroDegree);
  }
}

TEST(GraphSpecTest, RejectsAsymmetricAndNegative) {
  Matrix a = Matrix::Ones(3, 3);
  a(0, 1) = 2.0;
  EXPECT_THROW(GraphSpec{a}, Error);
  Matrix b = Matrix::Ones(3, 3);
  b(0, 0) = -1.0;
  EXPECT_THROW(GraphSpec{b}, Error);
}

TEST(NormalizedLaplacian, ComplementsAdjacency) {
  Rng rng(2);
  const GraphSpec g = random_graph(6, rng);
  EXPECT_TRUE((normalized_laplacian(g) + normalized_adjacency(g)).isApprox(Matrix::Identity(6, 6)));
}

TEST(SymmetricEigen, SortedDescendingAndSignFixed) {
  Rng rng(3);
  Matrix s = random_matrix(7, 7, rng);
  s = (s + s.transpose()).eval();
  const SymmetricEigen e = symmetric_eigen(s);
  for (Eigen::Index i = 1; i < 7; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  for (Eigen::Index i = 0; i < 7; ++i) {
    Eigen::Index arg = 0;
    e.vectors.col(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(e.vectors(arg, i), 0.0);
  }
  EXPECT_TRUE((e.vectors * e.values.asDiagonal() * e.vectors.transpose()).isApprox(s, 1e-12));
}

TEST(StiefelBasisByEig, IdentityGraphTraceIsD) {
  const GraphSpec g(Matrix::Identity(6, 6));
  for (Eigen::Index d = 1; d <= 6; ++d) {
    const StiefelBasis f = stiefel_basis_by_eig(g, d);
    EXPECT_NEAR(rayleigh_trace(f.matrix(), normalized_adjacency(g)), static_cast<double>(d), 1e-12);
  }
}

TEST(StiefelBasisByEig, TwoNodeClosedForm) {
  const GraphSpec g(Matrix::Ones(2, 2));
  const StiefelBasis f = stiefel_basis_by_eig(g, 1);
  EXPECT_NEAR(std::abs(f.matrix()(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(std::abs(f.matrix()(1, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(rayleigh_trace(f.matrix(), normalized_adjacency(g)), 1.0, 1e-12);
  const SymmetricEigen e = symmetric_eigen(normalized_adjacency(g));
  EXPECT_NEAR(e.values(0), 1.0, 1e-12);
  EXPECT_NEAR(e.values(1), 0.0, 1e-12);
}

TEST(StiefelBasisByEig, TraceMatchesFullSpectrumTenNodes) {
  Rng rng(4);
  const GraphSpec g = random_graph(10, rng);
  const Matrix a = normalized_adjacency(g);
  const StiefelBasis f = stiefel_basis_by_eig(g, 4);
  // Full-spectrum oracle: brute-force sum of the four largest eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 10);
  std::sort(ev.rbegin(), ev.rend());
  EXPECT_NEAR(rayleigh_trace(f.matrix(), a), ev[0] + ev[1] + ev[2] + ev[3], 1e-8);
  EXPECT_LT(f.orthonormality_defect(), 1e-8);
}

TEST(StiefelBasisByEig, RayleighOptimalityAgainstRandomBases) {
  Rng rng(5);
  const GraphSpec g = random_graph(12, rng);
  const Matrix a = normalized_adjacency(g);
  const StiefelBasis f = stiefel_basis_by_eig(g, 5);
  const double best = rayleigh_trace(f.matrix(), a);
  for (int i = 0; i < 100; ++i) EXPECT_LE(rayleigh_trace(random_orthonormal(12, 5, rng), a), best + 1e-12);
}

TEST(StiefelBasisByEig, DimensionErrors) {
  const GraphSpec g(Matrix::Identity(3, 3));
  EXPECT_THROW(stiefel_basis_by_eig(g, 4), Error);
  EXPECT_THROW(stiefel_basis_by_eig(g, 0), Error);
}

TEST(StiefelBasisTest, RejectsNonOrthonormal) {
  EXPECT_THROW(StiefelBasis(Matrix::Ones(3, 2)), Error);
  EXPECT_THROW(StiefelBasis(Matrix::Identity(2, 3)), Error);
}

TEST(Sgft, CoordinateProjection) {
  Rng rng(6);
  const StiefelBasis f(Matrix::Identity(6, 3));
  const Matrix x = random_matrix(6, 4, rng);
  EXPECT_EQ(sgft(f, x), x.topRows(3));
  EXPECT_EQ(sgft(f, Matrix::Zero(6, 4)), Matrix::Zero(3, 4));
  EXPECT_THROW(sgft(f, Matrix::Zero(5, 4)), Error);
}

TEST(Sgft, RoundTripInSpectrum) {
  Rng rng(7);
  const StiefelBasis f(random_orthonormal(9, 4, rng));
  const Matrix z = random_matrix(4, 3, rng);
  EXPECT_LT((sgft(f, isgft(f, z)) - z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sgft, Linearity) {
  Rng rng(8);
  const StiefelBasis f(random_orthonormal(9, 4, rng));
  const Matrix x = random_matrix(9, 3, rng), y = random_matrix(9, 3, rng);
  const double a = 1.7, b = -0.3;
  EXPECT_LT((sgft(f, a * x + b * y) - (a * sgft(f, x) + b * sgft(f, y))).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Isgft, FullBasisInverts) {
  Rng rng(9);
  const StiefelBasis f(random_orthonormal(6, 6, rng));
  const Matrix x = random_matrix(6, 2, rng);
  EXPECT_LT((isgft(f, sgft(f, x)) - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(isgft(f, Matrix::Zero(6, 2)), Matrix::Zero(6, 2));
  EXPECT_THROW(isgft(f, Matrix::Zero(5, 2)), Error);
}

TEST(Isgft, TruncatedRoundTripIsSymmetricIdempotentProjection) {
  Rng rng(10);
  const Eigen::Index n = 8;
  const StiefelBasis f(random_orthonormal(n, 3, rng));
  // Materialize the linear map x -> isgft(sgft(x)) column by column.
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p.col(i) = isgft(f, sgft(f, Matrix::Identity(n, n).col(i)));
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(p.trace(), 3.0, 1e-12);
}

TEST(Sgsc, IdentityBasisIsHadamard) {
  Rng rng(11);
  const StiefelBasis f(Matrix::Identity(5, 5));
  const Matrix x = random_matrix(5, 2, rng), g = random_matrix(5, 2, rng);
  EXPECT_EQ(sgsc(f, x, g), x.cwiseProduct(g));
}

TEST(Sgsc, OnesSpectrumProjects) {
  Rng rng(12);
  const StiefelBasis f(random_orthonormal(7, 3, rng));
  const Matrix x = random_matrix(7, 2, rng);
  const Matrix g = isgft(f, Matrix::Ones(3, 2));  // F^T g = 1
  EXPECT_LT((sgsc(f, x, g) - f.matrix() * f.matrix().transpose() * x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sgsc, ShapeMismatch) {
  const StiefelBasis f(Matrix::Identity(4, 2));
  EXPECT_THROW(sgsc(f, Matrix::Zero(4, 2), Matrix::Zero(4, 3)), Error);
}

TEST(FilteredSpectralOracle, MatchesSgscEightNodes) {
  Rng rng(13);
  const GraphSpec g = random_graph(8, rng);
  const SymmetricEigen eig = symmetric_eigen(normalized_adjacency(g));
  const Matrix x = random_matrix(8, 1, rng), k = random_matrix(8, 1, rng);
  const StiefelBasis f = stiefel_basis_from_eigen(eig, 3);
  EXPECT_LT((sgsc(f, x, k) - filtered_spectral_oracle(eig, 3, x, k)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FilteredSpectralOracle, FullDimensionIsUnfilteredConvolution) {
  Rng rng(14);
  const GraphSpec g = random_graph(6, rng);
  const SymmetricEigen eig = symmetric_eigen(normalized_adjacency(g));
  const Matrix x = random_matrix(6, 1, rng), k = random_matrix(6, 1, rng);
  const Matrix& p = eig.vectors;
  const Matrix unfiltered = p * (p.transpose() * k).asDiagonal() * p.transpose() * x;
  EXPECT_LT((filtered_spectral_oracle(eig, 6, x, k) - unfiltered).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FilteredSpectralOracle, ZeroKernel) {
  Rng rng(15);
  const GraphSpec g = random_graph(6, rng);
  const Matrix x = random_matrix(6, 1, rng);
  EXPECT_EQ(filtered_spectral_oracle(g, 2, x, Matrix::Zero(6, 1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FilteredSpectralOracle, PropertyAcrossRandomGraphs) {
  const auto r = verify::theorem2_equivalence(99, 50);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(StiefelBasisByEig, PropertyAcrossRandomGraphs) {
  const auto r = verify::theorem1_optimality(98, 20, 100);
  EXPECT_TRUE(r.passed) << r.worst << " " << r.detail;
}

}  // namespace
}  // namespace dstsgnn
