#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace dynembed {

using Index = std::int64_t;

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Compressed sparse row matrix with value semantics.
///
/// Construction always compacts: duplicate coordinates are summed and exact
/// zeros are dropped, so `nnz()` counts stored nonzeros only.
class SparseMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);
  explicit SparseMatrix(Storage storage);

  /// Throws InvalidArgument on out-of-range coordinates or non-finite values.
  static SparseMatrix from_triplets(Index rows, Index cols, std::span<const Triplet> entries);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(const Eigen::VectorXd& values);
  static SparseMatrix from_dense(const Eigen::MatrixXd& dense);

  Index rows() const noexcept { return storage_.rows(); }
  Index cols() const noexcept { return storage_.cols(); }
  Index nnz() const noexcept { return storage_.nonZeros(); }
  bool is_square() const noexcept { return rows() == cols(); }

  double coeff(Index i, Index j) const;
  std::vector<Triplet> triplets() const;
  Eigen::MatrixXd to_dense() const;
  const Storage& storage() const noexcept { return storage_; }

  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd col_sums() const;
  Eigen::VectorXd diagonal_values() const;
  double max_abs() const;
  double frobenius_norm() const;
  double min_value() const;

  SparseMatrix transpose() const;
  /// 0.5 * (A + A^T), bitwise symmetric.
  SparseMatrix symmetrized() const;
  /// max |a_ij - a_ji| <= tol.
  bool is_symmetric(double tol = 0.0) const;

  /// Calls f(row, col, value) for every stored entry in row-major order.
  template <typename F>
  void for_each(F&& f) const {
    for (Index i = 0; i < storage_.outerSize(); ++i)
      for (Storage::InnerIterator it(storage_, i); it; ++it) f(it.row(), it.col(), it.value());
  }

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd operator*(const Eigen::MatrixXd& x) const;
  friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator*(double s, const SparseMatrix& a);

  /// Exact structural and numerical equality.
  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

 private:
  Storage storage_;
};

/// D * A * D for a diagonal D given as a vector.
SparseMatrix scale_rows_cols(const SparseMatrix& a, const Eigen::VectorXd& left,
                             const Eigen::VectorXd& right);

}  // namespace dynembed
