#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "braintf/encoders.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace braintf;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

BrainGraph edgeless_graph(const Matrix& features) {
  BrainGraph g;
  g.n_nodes = features.rows();
  g.adjacency = Matrix::Zero(g.n_nodes, g.n_nodes);
  g.features_time = features;
  return g;
}

FilteredSpectrum plain_spectrum(const Matrix& coeff) {
  FilteredSpectrum xf;
  xf.coefficients = coeff;
  xf.retained_bands = {Band::low, Band::high};
  return xf;
}

}  // namespace

TEST_CASE("gcn_propagation: edgeless graph normalizes to the identity") {
  const BrainGraph g = edgeless_graph(Matrix::Zero(5, 2));
  CHECK((gcn_propagation(g) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff()
        <= 1e-14);
}

TEST_CASE("tgnn_forward: identity weight on an edgeless graph is the identity map") {
  Matrix x(4, 3);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  TgnnParams params;
  params.weights = {Matrix::Identity(3, 3)};
  const Representation out = tgnn_forward(edgeless_graph(x), params);
  CHECK((out.z - x).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(out.domain_tag == DomainTag::time);
}

TEST_CASE("tgnn_forward: two-node unit edge averages to 0.5 (hand oracle)") {
  Matrix x(2, 1);
  x << 1, 0;
  BrainGraph g = edgeless_graph(x);
  g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
  TgnnParams params;
  params.weights = {Matrix::Identity(1, 1)};
  const Representation out = tgnn_forward(g, params);
  // A~ = [[1,1],[1,1]], D~ = 2I, so D~^-1/2 A~ D~^-1/2 X = [0.5, 0.5]^T.
  CHECK(out.z(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out.z(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("tgnn_forward: two layers match a manual ReLU composition") {
  const Matrix x = random_matrix(6, 4, 10);
  BrainGraph g = edgeless_graph(x);
  g.adjacency(0, 1) = g.adjacency(1, 0) = 0.7;
  g.adjacency(2, 5) = g.adjacency(5, 2) = 0.3;
  TgnnParams params;
  params.weights = {random_matrix(4, 4, 11), random_matrix(4, 4, 12)};

  const Matrix prop = gcn_propagation(g);
  const Matrix hidden = (prop * x * params.weights[0]).cwiseMax(0.0);
  const Matrix expected = prop * hidden * params.weights[1];

  const Representation out = tgnn_forward(g, params);
  CHECK((out.z - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(hidden.minCoeff() >= 0.0);
}

TEST_CASE("fgo_forward: identity operators, zero biases, nonnegative input") {
  const Matrix x = random_matrix(5, 3, 20).cwiseAbs();
  FgnnParams params;
  params.operators = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  params.biases = {Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)};
  const Matrix out = fgo_forward(plain_spectrum(x), params);
  CHECK((out - 3.0 * x).cwiseAbs().maxCoeff() <= 1e-12);  // (P+1) * X with P=2
}

TEST_CASE("fgo_forward: depth zero with zero bias is plain ReLU") {
  const Matrix x = random_matrix(5, 3, 21);
  FgnnParams params;
  params.biases = {Vector::Zero(3)};
  const Matrix out = fgo_forward(plain_spectrum(x), params);
  CHECK((out - x.cwiseMax(0.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.minCoeff() >= 0.0);
}

TEST_CASE("fgo_forward: P=1 on a 4x3 input matches the brute-force recursion") {
  const Matrix x = random_matrix(4, 3, 22);
  FgnnParams params;
  params.operators = {random_matrix(3, 3, 23)};
  params.biases = {random_matrix(3, 1, 24).col(0), random_matrix(3, 1, 25).col(0)};

  // Direct evaluation of sum_p ReLU(X * S^{0:p} + 1 b_p^T), S^{0:0} = I.
  Matrix expected = Matrix::Zero(4, 3);
  Matrix chain = Matrix::Identity(3, 3);
  for (int p = 0; p <= 1; ++p) {
    if (p > 0) chain = chain * params.operators[std::size_t(p - 1)];
    Matrix term = x * chain;
    term.rowwise() += params.biases[std::size_t(p)].transpose();
    expected += term.cwiseMax(0.0);
  }

  const Matrix out = fgo_forward(plain_spectrum(x), params);
  CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fgnn_forward: zero spectrum and zero biases give row-constant output") {
  const Matrix adj_features = random_matrix(8, 4, 30);
  BrainGraph g = edgeless_graph(adj_features);
  for (Index i = 0; i + 1 < 8; ++i) g.adjacency(i, i + 1) = g.adjacency(i + 1, i) = 1.0;
  const SpectralBasis basis = eigendecompose(laplacian(g));
  const FilterBank bank = build_filter_bank(basis, 0.25, 0.25);

  auto [tgnn, fgnn] = init_params(8, 4, 4, 5, 2, 2);
  for (auto& b : fgnn.biases) b.setZero();

  SpectralFeatures spec;
  spec.coefficients = Matrix::Zero(8, 4);
  spec.basis_id = basis.id;
  const Representation out = fgnn_forward(spec, bank, basis, fgnn, {Band::low, Band::high}, 4);
  for (Index i = 1; i < 8; ++i)
    CHECK((out.z.row(i) - out.z.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(out.domain_tag == DomainTag::frequency);
}

TEST_CASE("fgnn_forward: identity-padded MLP reduces to (P+1) * U * ReLU(selected)") {
  BrainGraph g = edgeless_graph(Matrix::Zero(6, 6));
  for (Index i = 0; i + 1 < 6; ++i) g.adjacency(i, i + 1) = g.adjacency(i + 1, i) = 1.0;
  const SpectralBasis basis = eigendecompose(laplacian(g));
  const FilterBank bank = build_filter_bank(basis, 0.2, 0.2);

  const Index k = 6;
  FgnnParams fgnn;
  fgnn.operators = {Matrix::Identity(k, k)};
  fgnn.biases = {Vector::Zero(k), Vector::Zero(k)};
  // MLP y -> ReLU(y * I + large) * I - large: affine-identity on the range
  // reachable here, so the projection drops out of the composition.
  const double shift = 1e3;
  fgnn.mlp_w1 = Matrix::Identity(k, k);
  fgnn.mlp_b1 = Vector::Constant(k, shift);
  fgnn.mlp_w2 = Matrix::Identity(k, k);
  fgnn.mlp_b2 = Vector::Constant(k, -shift);

  SpectralFeatures spec;
  spec.coefficients = random_matrix(6, 6, 33);
  spec.basis_id = basis.id;

  const FilteredSpectrum sel =
      select_components(spec, bank, {Band::low, Band::high}, k);
  const Matrix expected = basis.eigenvectors * (2.0 * sel.coefficients.cwiseMax(0.0));

  const Representation out =
      fgnn_forward(spec, bank, basis, fgnn, {Band::low, Band::high}, k);
  CHECK((out.z - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("fgnn_forward: seeded instance matches a staged oracle") {
  BrainGraph g = edgeless_graph(Matrix::Zero(8, 5));
  for (Index i = 0; i + 1 < 8; ++i) g.adjacency(i, i + 1) = g.adjacency(i + 1, i) = 0.5;
  g.adjacency(0, 7) = g.adjacency(7, 0) = 0.25;
  const SpectralBasis basis = eigendecompose(laplacian(g));
  const FilterBank bank = build_filter_bank(basis, 0.2, 0.2);

  const Index k = 5;
  auto [tgnn, fgnn] = init_params(8, 5, k, 99, 2, 3);
  for (auto& b : fgnn.biases) b.setConstant(0.05);

  SpectralFeatures spec;
  spec.coefficients = random_matrix(8, 5, 34);
  spec.basis_id = basis.id;
  const std::set<Band> retained = {Band::low, Band::high};

  // Stage 1: band selection.
  const FilteredSpectrum sel = select_components(spec, bank, retained, k);
  // Stage 2: FGO stack via the brute-force recursion.
  Matrix z_fourier = Matrix::Zero(8, k);
  Matrix chain = Matrix::Identity(k, k);
  for (std::size_t p = 0; p < fgnn.biases.size(); ++p) {
    if (p > 0) chain = chain * fgnn.operators[p - 1];
    Matrix term = sel.coefficients * chain;
    term.rowwise() += fgnn.biases[p].transpose();
    z_fourier += term.cwiseMax(0.0);
  }
  // Stage 3: inverse transform, stage 4: row-wise MLP.
  const Matrix y = basis.eigenvectors * z_fourier;
  const Matrix hidden = (y * fgnn.mlp_w1).rowwise() + fgnn.mlp_b1.transpose();
  const Matrix expected =
      ((hidden.cwiseMax(0.0) * fgnn.mlp_w2).rowwise() + fgnn.mlp_b2.transpose());

  const Representation out = fgnn_forward(spec, bank, basis, fgnn, retained, k);
  CHECK((out.z - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("init_params: deterministic per seed, distinct across seeds, Glorot-bounded") {
  auto [t1, f1] = init_params(10, 6, 5, 7, 2, 3);
  auto [t2, f2] = init_params(10, 6, 5, 7, 2, 3);
  auto [t3, f3] = init_params(10, 6, 5, 8, 2, 3);

  REQUIRE(t1.weights.size() == 2);
  REQUIRE(f1.operators.size() == 3);
  REQUIRE(f1.biases.size() == 4);
  CHECK(f1.mlp_w1.rows() == 5);
  CHECK(f1.mlp_w1.cols() == 6);  // H = max(K, D)
  CHECK(f1.mlp_w2.cols() == 6);

  for (std::size_t l = 0; l < t1.weights.size(); ++l)
    CHECK((t1.weights[l] - t2.weights[l]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.mlp_w1 - f2.mlp_w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1.weights[0] - t3.weights[0]).cwiseAbs().maxCoeff() > 0.0);

  // All biases start at zero; weights respect the Glorot-uniform bound.
  for (const auto& b : f1.biases) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
  const auto bound = [](Index fan_in, Index fan_out) {
    return std::sqrt(6.0 / double(fan_in + fan_out));
  };
  for (const auto& w : t1.weights)
    CHECK(w.cwiseAbs().maxCoeff() <= bound(w.rows(), w.cols()) + 1e-15);
  for (const auto& s : f1.operators)
    CHECK(s.cwiseAbs().maxCoeff() <= bound(s.rows(), s.cols()) + 1e-15);
  CHECK(f1.mlp_w1.cwiseAbs().maxCoeff() <= bound(5, 6) + 1e-15);
  CHECK(f1.mlp_w2.cwiseAbs().maxCoeff() <= bound(6, 6) + 1e-15);
}

TEST_CASE("fuse: identical inputs pass through; opposite inputs cancel") {
  Representation zt{random_matrix(5, 3, 40), DomainTag::time};
  Representation zf{zt.z, DomainTag::frequency};
  CHECK((fuse(zt, zf).z - zt.z).cwiseAbs().maxCoeff() == 0.0);

  zf.z = -zt.z;
  CHECK(fuse(zt, zf).z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fuse: random pair equals the elementwise mean") {
  const Representation zt{random_matrix(4, 3, 41), DomainTag::time};
  const Representation zf{random_matrix(4, 3, 42), DomainTag::frequency};
  const Representation out = fuse(zt, zf);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(out.z(i, j) == doctest::Approx((zt.z(i, j) + zf.z(i, j)) / 2.0)
                               .epsilon(1e-15));
  CHECK(out.domain_tag == DomainTag::fused);
}

TEST_CASE("fuse: rejects mismatched tags and shapes") {
  const Representation zt{random_matrix(4, 3, 43), DomainTag::time};
  const Representation zf{random_matrix(4, 2, 44), DomainTag::frequency};
  CHECK_THROWS_AS(fuse(zt, zf), data_error);
  const Representation zt2{random_matrix(4, 3, 45), DomainTag::time};
  CHECK_THROWS_AS(fuse(zt, zt2), data_error);
}

TEST_CASE("checkpoint: save/load round-trips parameters and seed bit for bit") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() /
                        ("braintf-ckpt-" + std::to_string(std::random_device{}()) +
                         ".bin");
  auto [tgnn, fgnn] = init_params(9, 5, 4, 123, 2, 3);
  save_checkpoint(path, tgnn, fgnn, 123);

  std::uint64_t seed = 0;
  auto [t2, f2] = load_checkpoint(path, &seed);
  fs::remove(path);

  CHECK(seed == 123);
  REQUIRE(t2.weights.size() == tgnn.weights.size());
  for (std::size_t l = 0; l < tgnn.weights.size(); ++l)
    CHECK((t2.weights[l] - tgnn.weights[l]).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(f2.operators.size() == fgnn.operators.size());
  for (std::size_t p = 0; p < fgnn.operators.size(); ++p)
    CHECK((f2.operators[p] - fgnn.operators[p]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2.mlp_w1 - fgnn.mlp_w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2.mlp_w2 - fgnn.mlp_w2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2.mlp_b1 - fgnn.mlp_b1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2.mlp_b2 - fgnn.mlp_b2).cwiseAbs().maxCoeff() == 0.0);
}
