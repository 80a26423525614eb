#pragma once

#include "braintf/types.hpp"

namespace braintf {

/// Functional-connectivity graph of one subject: correlation-weighted
/// adjacency plus the time-domain node features it was built from.
struct BrainGraph {
  Matrix adjacency;      // N x N, symmetric, nonnegative, zero diagonal
  Matrix features_time;  // N x D, row i = signal of node i
  Index n_nodes = 0;

  Index edge_count() const;
};

/// Eigendecomposition of a graph Laplacian. Eigenvalues ascend; column k of
/// `eigenvectors` pairs with `eigenvalues[k]`. Sign convention: in each
/// column the entry of largest magnitude (lowest index on ties) is positive.
struct SpectralBasis {
  Vector eigenvalues;   // N, nondecreasing, >= -eps
  Matrix eigenvectors;  // N x N, orthonormal columns
  Vector column_sum;    // eigenvectors.rowwise().sum(), cached for fast IGFT
  std::uint64_t id = 0;

  Index size() const { return eigenvalues.size(); }
};

/// Pearson correlation matrix of the rows of `series`. Throws data_error if
/// a row has (numerically) zero variance, naming the offending row.
Matrix pearson_matrix(const Matrix& series);

/// Keeps the floor(density * N(N-1)/2) largest strictly positive
/// off-diagonal correlations as undirected edges; negative correlations are
/// dropped. Ties at the quota boundary break by lexicographic (i, j).
BrainGraph threshold_graph(const Matrix& corr, const Matrix& features_time,
                           double density = 0.2);

/// Convenience overload for callers that only need the topology.
BrainGraph threshold_graph(const Matrix& corr, double density = 0.2);

/// Combinatorial Laplacian L = D - A.
Matrix laplacian(const BrainGraph& g);

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
/// symmetric within 1e-10. Off-diagonal Frobenius tolerance 1e-12 (relative
/// to the input scale), at most 100 sweeps.
SpectralBasis eigendecompose(const Matrix& sym);

/// Number of connected components of the adjacency (BFS). Used as the
/// independent oracle for the Laplacian null-space dimension.
int connected_components(const Matrix& adjacency);

}  // namespace braintf
