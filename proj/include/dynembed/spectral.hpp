#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "dynembed/sparse_matrix.hpp"

namespace dynembed {

/// Eigenvalues with unit eigenvectors stored as columns.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Rows are nodes, columns are embedding dimensions.
using Embedding = Eigen::MatrixXd;

enum class EigenMethod {
  /// Dense for n <= dense_max_n, subspace iteration otherwise.
  Auto,
  Dense,
  Power,
};

struct EigenOptions {
  EigenMethod method = EigenMethod::Auto;
  Index dense_max_n = 2000;
  /// Residual target ||Mv - lv|| <= tol * max(1, |l|).
  double tol = 1e-10;
  int max_iter = 20000;
  int restarts = 5;
  std::uint64_t seed = 0;
};

/// k algebraically largest eigenpairs of symmetric `m`, descending.
///
/// The power path runs block subspace iteration on M + sI (s a Gershgorin
/// bound, so the shifted matrix is positive semi-definite) with a
/// Rayleigh-Ritz step each sweep. A stalled block is restarted from a fresh
/// random start up to `restarts` times, then ConvergenceError carries the
/// residuals.
/// Eigenvectors follow the sign convention of apply_sign_convention.
EigenPairs top_k_eigs(const SparseMatrix& m, Index k, const EigenOptions& opts = {});

/// k smallest eigenpairs of symmetric positive semi-definite `m`, ascending,
/// via top_k_eigs on lambda_max I - M.
EigenPairs bottom_k_eigs(const SparseMatrix& m, Index k, const EigenOptions& opts = {});

/// Flip each column so its entry of largest magnitude (first on ties) is positive.
void apply_sign_convention(Eigen::MatrixXd& vectors);

/// Row i = (mu_1 v_1i, ..., mu_d v_di) over the d algebraically largest
/// eigenpairs of symmetric `a`.
Embedding adjacency_embedding(const SparseMatrix& a, Index d, const EigenOptions& opts = {});

/// Row j = (v_1j / sqrt(l_1), ..., v_dj / sqrt(l_d)) over the d smallest
/// nonzero eigenvalues of the Laplacian `l`. Eigenvalues below
/// 1e-9 * lambda_max count as kernel modes. Throws InvalidArgument when
/// d > n - c, c the number of connected components.
Embedding resistance_embedding(const SparseMatrix& l, Index d, const EigenOptions& opts = {});

/// Dense Moore-Penrose pseudoinverse of a symmetric matrix from its full
/// eigendecomposition (same kernel threshold as resistance_embedding).
/// Throws InvalidArgument for n > 2000.
Eigen::MatrixXd symmetric_pseudoinverse(const SparseMatrix& m);

/// r_xy = L+_xx + L+_yy - 2 L+_xy.
double effective_resistance(const SparseMatrix& l, Index x, Index y);

/// vol(G) * r_xy with vol(G) = trace(L) (= 2|E| for unit weights).
double commute_time(const SparseMatrix& l, Index x, Index y);

}  // namespace dynembed
