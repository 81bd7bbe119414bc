#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dynembed/sparse_matrix.hpp"

namespace dynembed {

/// Sparse 3-way tensor in coordinate form, entries sorted by (t, i, j).
/// For dynamic networks dims are (n, n, tau) and slice t is snapshot t.
class SparseTensor3 {
 public:
  struct Entry {
    Index i = 0;
    Index j = 0;
    Index t = 0;
    double value = 0.0;
  };

  SparseTensor3() = default;
  /// Sums duplicates, drops zeros; throws on out-of-range coordinates.
  SparseTensor3(std::array<Index, 3> dims, std::vector<Entry> entries);

  /// Stacks equally sized square slices along the third mode.
  static SparseTensor3 from_snapshots(std::span<const SparseMatrix> slices);

  const std::array<Index, 3>& dims() const noexcept { return dims_; }
  Index dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode)); }
  Index nnz() const noexcept { return static_cast<Index>(entries_.size()); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Entries of slice t are entries()[slice_begin(t) .. slice_begin(t + 1)).
  Index slice_begin(Index t) const { return slice_offsets_.at(static_cast<std::size_t>(t)); }
  SparseMatrix slice(Index t) const;

  double frobenius_norm() const;
  /// Slice t multiplied by factors[t].
  SparseTensor3 scale_slices(std::span<const double> factors) const;

 private:
  std::array<Index, 3> dims_{0, 0, 0};
  std::vector<Entry> entries_;
  std::vector<Index> slice_offsets_{0};
};

/// Factor matrices (A: n1 x r, B: n2 x r, C: n3 x r).
using Factors = std::array<Eigen::MatrixXd, 3>;

enum class Mode : int { A = 0, B = 1, C = 2 };

/// Matricized tensor times Khatri-Rao product for `mode`, computed from the
/// nonzeros only. Mode A: M(i,:) = sum z_ijt (B(j,:) .* C(t,:)).
Eigen::MatrixXd mttkrp(const SparseTensor3& z, const Factors& factors, Mode mode);

/// Sum of lambda_r a_r (x) b_r (x) c_r with unit-norm factor columns,
/// lambdas non-negative and sorted non-increasing.
struct CPModel {
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  /// Relative reconstruction error ||Z - Zhat|| / ||Z|| (0 for a zero tensor).
  double fit = 0.0;
  /// Fit after each accepted sweep.
  std::vector<double> fit_history;
  int sweeps = 0;
  bool converged = false;

  Index rank() const noexcept { return lambdas.size(); }
  /// Dense reconstruction of slice t.
  Eigen::MatrixXd reconstruct_slice(Index t) const;
};

/// Components `indices` of `model` in the given order (fit fields are
/// carried over unchanged).
CPModel select_components(const CPModel& model, std::span<const Index> indices);

enum class AlsInit { Spectral, Random, Provided };
enum class Orthogonality { None, NodeFactor };

struct AlsConfig {
  Index rank = 1;
  int max_sweeps = 500;
  /// Stop once |fit_k - fit_{k-1}| < rel_tol.
  double rel_tol = 1e-10;
  /// Spectral: for symmetric slices, leading eigenvectors (by |eigenvalue|)
  /// of the time-summed slice for A and B; otherwise the leading left
  /// singular vectors of the mode-1 and mode-2 unfoldings. C holds the
  /// per-slice bilinear forms a_q' Z_t b_q.
  /// Falls back to Random when rank > n, the first two modes differ, or
  /// n exceeds spectral_init_max_n.
  AlsInit init = AlsInit::Spectral;
  Orthogonality orthogonality = Orthogonality::None;
  std::uint64_t seed = 0;
  /// Used when init == Provided.
  std::optional<Factors> initial_factors;
  Index spectral_init_max_n = 2500;
};

/// CP decomposition by alternating least squares. Factor columns are
/// normalized every sweep with the norms absorbed into lambda. Gram matrices
/// with condition estimate above 1e12 get a 1e-10 * trace / r ridge.
/// Throws NumericalError on NaN, InvalidArgument on a bad config.
CPModel cp_als(const SparseTensor3& z, const AlsConfig& cfg);

/// CP decomposition with orthonormal columns in the node factor B. The B
/// update is the orthogonal Procrustes solution (polar factor of the mode-B
/// MTTKRP); sweeps that would increase the residual are damped or rejected,
/// so the accepted fit history is non-increasing. Requires rank <= n2.
CPModel ocp_als(const SparseTensor3& z, AlsConfig cfg);

struct ReconstructionError {
  double value = 0.0;
  /// False when ||Z|| = 0 and `value` is the absolute error.
  bool relative = true;
};

/// ||Z - Zhat|| / ||Z||, optionally in the weighted norm that scales slice t
/// of both tensors by sqrt(weights[t]).
ReconstructionError reconstruct_error(const SparseTensor3& z, const CPModel& model,
                                      std::optional<std::span<const double>> weights = std::nullopt);

}  // namespace dynembed
