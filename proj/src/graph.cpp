#include "braintf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <queue>
#include <tuple>
#include <vector>

namespace braintf {

Index BrainGraph::edge_count() const {
  Index c = 0;
  for (Index i = 0; i < n_nodes; ++i)
    for (Index j = i + 1; j < n_nodes; ++j)
      if (adjacency(i, j) != 0.0) ++c;
  return c;
}

Matrix pearson_matrix(const Matrix& series) {
  const Index n = series.rows();
  const Index d = series.cols();
  if (d < 2) throw data_error("pearson_matrix: need at least 2 time points");

  Matrix centered = series;
  Vector norms(n);
  for (Index i = 0; i < n; ++i) {
    centered.row(i).array() -= series.row(i).mean();
    norms[i] = centered.row(i).norm();
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i]))
      throw data_error("pearson_matrix: row " + std::to_string(i) +
                       " has zero variance");
  }

  Matrix corr = centered * centered.transpose();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) corr(i, j) /= norms[i] * norms[j];
  // Clamp rounding spill and pin the exact-case values.
  corr = corr.cwiseMax(-1.0).cwiseMin(1.0);
  corr.diagonal().setOnes();
  return corr;
}

BrainGraph threshold_graph(const Matrix& corr, const Matrix& features_time,
                           double density) {
  const Index n = corr.rows();
  if (corr.cols() != n) throw data_error("threshold_graph: matrix not square");
  if (!(density > 0.0 && density <= 1.0))
    throw data_error("threshold_graph: density must be in (0, 1]");
  if (!corr.isApprox(corr.transpose(), 1e-10))
    throw data_error("threshold_graph: correlation matrix not symmetric");

  struct Cand {
    double w;
    Index i, j;
  };
  std::vector<Cand> cand;
  cand.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (corr(i, j) > 0.0) cand.push_back({corr(i, j), i, j});

  const auto quota =
      static_cast<std::size_t>(std::floor(density * double(n) * double(n - 1) / 2.0));
  std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
    if (a.w != b.w) return a.w > b.w;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  if (cand.size() > quota) cand.resize(quota);
  if (cand.empty())
    std::cerr << "braintf: warning: thresholded graph has no edges "
                 "(no positive correlations)\n";

  BrainGraph g;
  g.n_nodes = n;
  g.features_time = features_time;
  g.adjacency = Matrix::Zero(n, n);
  for (const Cand& c : cand) {
    g.adjacency(c.i, c.j) = c.w;
    g.adjacency(c.j, c.i) = c.w;
  }
  return g;
}

BrainGraph threshold_graph(const Matrix& corr, double density) {
  return threshold_graph(corr, Matrix::Zero(corr.rows(), 0), density);
}

Matrix laplacian(const BrainGraph& g) {
  Matrix l = -g.adjacency;
  l.diagonal() = g.adjacency.rowwise().sum();
  return l;
}

namespace {

// One cyclic Jacobi sweep; returns rotation count.
int jacobi_sweep(Matrix& a, Matrix& v, double threshold) {
  const Index n = a.rows();
  int rotations = 0;
  for (Index p = 0; p < n - 1; ++p) {
    for (Index q = p + 1; q < n; ++q) {
      const double apq = a(p, q);
      if (std::abs(apq) <= threshold) continue;
      ++rotations;
      Eigen::JacobiRotation<double> rot;
      rot.makeJacobi(a(p, p), apq, a(q, q));
      a.applyOnTheLeft(p, q, rot.transpose());
      a.applyOnTheRight(p, q, rot);
      v.applyOnTheRight(p, q, rot);
      a(p, q) = 0.0;
      a(q, p) = 0.0;
    }
  }
  return rotations;
}

double offdiag_norm(const Matrix& a) {
  double sum = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

std::uint64_t hash_doubles(const double* data, std::size_t count) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

SpectralBasis eigendecompose(const Matrix& sym) {
  const Index n = sym.rows();
  if (sym.cols() != n) throw data_error("eigendecompose: matrix not square");
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw data_error("eigendecompose: matrix not symmetric within 1e-10");

  Matrix a = sym;
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(1.0, sym.norm());
  const double tol = 1e-12 * scale;
  const double rot_threshold = tol / std::max<double>(1, n);

  bool converged = offdiag_norm(a) <= tol;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    jacobi_sweep(a, v, rot_threshold);
    converged = offdiag_norm(a) <= tol;
  }
  if (!converged)
    throw numeric_error("eigendecompose: Jacobi failed to converge in 100 sweeps");

  // Sort ascending, dragging eigenvector columns along.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index i, Index j) {
    if (a(i, i) != a(j, j)) return a(i, i) < a(j, j);
    return i < j;
  });

  SpectralBasis basis;
  basis.eigenvalues.resize(n);
  basis.eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    basis.eigenvalues[k] = a(order[static_cast<std::size_t>(k)],
                             order[static_cast<std::size_t>(k)]);
    basis.eigenvectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }

  // Sign convention: largest-magnitude entry per column positive, first such
  // entry on ties.
  for (Index k = 0; k < n; ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      const double m = std::abs(basis.eigenvectors(i, k));
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    if (basis.eigenvectors(arg, k) < 0.0) basis.eigenvectors.col(k) *= -1.0;
  }

  basis.column_sum = basis.eigenvectors.rowwise().sum();
  basis.id = hash_doubles(basis.eigenvalues.data(),
                          static_cast<std::size_t>(n)) ^
             hash_doubles(basis.eigenvectors.data(),
                          static_cast<std::size_t>(n * n));
  return basis;
}

int connected_components(const Matrix& adjacency) {
  const Index n = adjacency.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  int components = 0;
  for (Index start = 0; start < n; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    std::queue<Index> frontier;
    frontier.push(start);
    seen[static_cast<std::size_t>(start)] = true;
    while (!frontier.empty()) {
      const Index u = frontier.front();
      frontier.pop();
      for (Index w = 0; w < n; ++w) {
        if (adjacency(u, w) != 0.0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          frontier.push(w);
        }
      }
    }
  }
  return components;
}

}  // namespace braintf
