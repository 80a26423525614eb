#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "braintf/graph.hpp"

#include <cmath>
#include <random>

using namespace braintf;

namespace {

// Direct summation of the Pearson correlation definition, independent of the
// Eigen-based implementation under test.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx += (x[i] - mx) * (x[i] - mx);
    dy += (y[i] - my) * (y[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

BrainGraph path3() {
  Matrix adj = Matrix::Zero(3, 3);
  adj(0, 1) = adj(1, 0) = 1.0;
  adj(1, 2) = adj(2, 1) = 1.0;
  BrainGraph g;
  g.adjacency = adj;
  g.n_nodes = 3;
  return g;
}

Matrix random_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = gauss(rng);
  return m;
}

}  // namespace

TEST_CASE("pearson_matrix: identical rows correlate at exactly 1") {
  Matrix series(2, 5);
  series << 0.3, -1.2, 4.0, 2.5, 0.0, 0.3, -1.2, 4.0, 2.5, 0.0;
  const Matrix corr = pearson_matrix(series);
  CHECK(corr(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(corr(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pearson_matrix: negated row correlates at exactly -1") {
  Matrix series(2, 4);
  series << 1.0, -2.0, 3.0, 0.5, -1.0, 2.0, -3.0, -0.5;
  const Matrix corr = pearson_matrix(series);
  CHECK(corr(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("pearson_matrix: matches direct-summation oracle") {
  Matrix series(2, 4);
  series << 1, 2, 3, 4, 1, 3, 2, 5;
  const Matrix corr = pearson_matrix(series);
  const double expected = pearson_oracle({1, 2, 3, 4}, {1, 3, 2, 5});
  CHECK(std::abs(corr(0, 1) - expected) <= 1e-12);
  CHECK(std::abs(corr(1, 0) - expected) <= 1e-12);

  // A larger random instance, every entry against the oracle.
  std::mt19937_64 rng(401);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix big(6, 30);
  for (Index i = 0; i < big.rows(); ++i)
    for (Index j = 0; j < big.cols(); ++j) big(i, j) = gauss(rng);
  const Matrix bc = pearson_matrix(big);
  for (Index i = 0; i < big.rows(); ++i)
    for (Index j = 0; j < big.rows(); ++j) {
      std::vector<double> xi(big.cols()), xj(big.cols());
      for (Index t = 0; t < big.cols(); ++t) {
        xi[std::size_t(t)] = big(i, t);
        xj[std::size_t(t)] = big(j, t);
      }
      CHECK(std::abs(bc(i, j) - pearson_oracle(xi, xj)) <= 1e-12);
    }
}

TEST_CASE("pearson_matrix: constant row is rejected naming the row") {
  Matrix series(2, 4);
  series << 1, 1, 1, 1, 0, 1, 2, 3;
  CHECK_THROWS_WITH_AS(pearson_matrix(series),
                       doctest::Contains("row 0"), data_error);
}

TEST_CASE("threshold_graph: density quota at N=116 yields 1334 edges") {
  // Strictly positive, distinct off-diagonal values so the quota binds.
  const Index n = 116;
  Matrix corr = Matrix::Identity(n, n);
  double v = 0.001;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      corr(i, j) = corr(j, i) = v;
      v += 1e-6;
    }
  const BrainGraph g = threshold_graph(corr, 0.2);
  CHECK(g.edge_count() == 1334);  // floor(0.2 * 116 * 115 / 2)
  CHECK(g.n_nodes == n);
}

TEST_CASE("threshold_graph: all-negative correlations give an empty graph") {
  Matrix corr = Matrix::Constant(6, 6, -0.5);
  corr.diagonal().setOnes();
  const BrainGraph g = threshold_graph(corr, 0.2);
  CHECK(g.edge_count() == 0);
  CHECK(g.adjacency.isZero(0.0));
}

TEST_CASE("threshold_graph: quota above the positive supply keeps all positives") {
  Matrix corr = Matrix::Constant(6, 6, -0.3);
  corr.diagonal().setOnes();
  corr(0, 1) = corr(1, 0) = 0.9;
  corr(2, 3) = corr(3, 2) = 0.5;
  corr(4, 5) = corr(5, 4) = 0.1;
  const BrainGraph g = threshold_graph(corr, 0.4);  // quota floor(0.4*15) = 6 > 3
  CHECK(g.edge_count() == 3);
  CHECK(g.adjacency(0, 1) == doctest::Approx(0.9));
  CHECK(g.adjacency(4, 5) == doctest::Approx(0.1));
}

TEST_CASE("threshold_graph: boundary ties break lexicographically and deterministically") {
  Matrix corr = Matrix::Identity(4, 4);
  // Four equal candidates, quota floor(0.35*6) = 2: (0,1) and (0,2) must win.
  corr(0, 1) = corr(1, 0) = 0.5;
  corr(0, 2) = corr(2, 0) = 0.5;
  corr(0, 3) = corr(3, 0) = 0.5;
  corr(1, 2) = corr(2, 1) = 0.5;
  const BrainGraph a = threshold_graph(corr, 0.35);
  const BrainGraph b = threshold_graph(corr, 0.35);
  CHECK(a.edge_count() == 2);
  CHECK(a.adjacency(0, 1) == doctest::Approx(0.5));
  CHECK(a.adjacency(0, 2) == doctest::Approx(0.5));
  CHECK(a.adjacency(0, 3) == 0.0);
  CHECK((a.adjacency - b.adjacency).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("threshold_graph: feature overload carries the time series through") {
  Matrix series(4, 8);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < series.rows(); ++i)
    for (Index j = 0; j < series.cols(); ++j) series(i, j) = gauss(rng);
  const BrainGraph g = threshold_graph(pearson_matrix(series), series, 0.5);
  CHECK((g.features_time - series).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian: path-3 matches the hand matrix") {
  const Matrix l = laplacian(path3());
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian: empty graph maps to the zero matrix") {
  BrainGraph g;
  g.adjacency = Matrix::Zero(5, 5);
  g.n_nodes = 5;
  CHECK(laplacian(g).isZero(0.0));
}

TEST_CASE("laplacian: rows sum to zero and quadratic form is PSD") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Matrix corr = Matrix::Identity(12, 12);
  for (Index i = 0; i < 12; ++i)
    for (Index j = i + 1; j < 12; ++j) corr(i, j) = corr(j, i) = unif(rng) - 0.4;
  const BrainGraph g = threshold_graph(corr, 0.3);
  const Matrix l = laplacian(g);
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int probe = 0; probe < 100; ++probe) {
    Vector x(12);
    for (Index i = 0; i < 12; ++i) x(i) = gauss(rng);
    CHECK(x.dot(l * x) >= -1e-10);
  }
}

TEST_CASE("eigendecompose: path-3 eigenvalues are 0, 1, 3") {
  const SpectralBasis basis = eigendecompose(laplacian(path3()));
  REQUIRE(basis.size() == 3);
  CHECK(std::abs(basis.eigenvalues(0) - 0.0) <= 1e-10);
  CHECK(std::abs(basis.eigenvalues(1) - 1.0) <= 1e-10);
  CHECK(std::abs(basis.eigenvalues(2) - 3.0) <= 1e-10);
}

TEST_CASE("eigendecompose: reconstruction and orthonormality on random graphs") {
  for (std::uint64_t seed : {3u, 14u, 159u}) {
    Matrix sym = random_symmetric(10, seed);
    sym = (sym + sym.transpose()).eval() / 2.0;
    const SpectralBasis basis = eigendecompose(sym);
    const Matrix recon = basis.eigenvectors *
                         basis.eigenvalues.asDiagonal() *
                         basis.eigenvectors.transpose();
    CHECK((recon - sym).cwiseAbs().maxCoeff() <= 1e-8);
    const Matrix gram = basis.eigenvectors.transpose() * basis.eigenvectors;
    CHECK((gram - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Index k = 1; k < basis.size(); ++k)
      CHECK(basis.eigenvalues(k) >= basis.eigenvalues(k - 1) - 1e-12);
  }
}

TEST_CASE("eigendecompose: zero matrix yields zero spectrum with exact reconstruction") {
  const SpectralBasis basis = eigendecompose(Matrix::Zero(4, 4));
  CHECK(basis.eigenvalues.cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix gram = basis.eigenvectors.transpose() * basis.eigenvectors;
  CHECK((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix recon = basis.eigenvectors * basis.eigenvalues.asDiagonal() *
                       basis.eigenvectors.transpose();
  CHECK(recon.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("eigendecompose: sign convention makes the result reproducible") {
  const Matrix sym = (random_symmetric(8, 77) + random_symmetric(8, 77).transpose()) / 2.0;
  const SpectralBasis a = eigendecompose(sym);
  const SpectralBasis b = eigendecompose(sym);
  CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
  for (Index k = 0; k < a.size(); ++k) {
    Index arg = 0;
    a.eigenvectors.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(a.eigenvectors(arg, k) > 0.0);
  }
}

TEST_CASE("eigendecompose: non-symmetric input is rejected") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 1.0;  // no matching (1,0) entry
  CHECK_THROWS_AS(eigendecompose(m), data_error);
}

TEST_CASE("Laplacian null space dimension equals the BFS component count") {
  // Two 4-cliques plus two isolated vertices: 4 components.
  Matrix adj = Matrix::Zero(10, 10);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j)
      if (i != j) {
        adj(i, j) = 1.0;
        adj(i + 4, j + 4) = 1.0;
      }
  CHECK(connected_components(adj) == 4);

  BrainGraph g;
  g.adjacency = adj;
  g.n_nodes = 10;
  const SpectralBasis basis = eigendecompose(laplacian(g));
  int null_dim = 0;
  for (Index k = 0; k < basis.size(); ++k)
    if (std::abs(basis.eigenvalues(k)) <= 1e-8) ++null_dim;
  CHECK(null_dim == 4);
}

TEST_CASE("connected graph: eigenvalue 0 is simple with a constant-sign eigenvector") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  Matrix adj = Matrix::Zero(7, 7);
  for (Index i = 0; i + 1 < 7; ++i) adj(i, i + 1) = adj(i + 1, i) = unif(rng);
  adj(0, 6) = adj(6, 0) = unif(rng);
  CHECK(connected_components(adj) == 1);

  BrainGraph g;
  g.adjacency = adj;
  g.n_nodes = 7;
  const SpectralBasis basis = eigendecompose(laplacian(g));
  CHECK(std::abs(basis.eigenvalues(0)) <= 1e-10);
  CHECK(basis.eigenvalues(1) > 1e-8);
  const Vector v0 = basis.eigenvectors.col(0);
  CHECK((v0.minCoeff() > 0.0 || v0.maxCoeff() < 0.0));
}
