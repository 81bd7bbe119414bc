#include "dynembed/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynembed/error.hpp"

namespace dynembed {

namespace {

void compact(SparseMatrix::Storage& s) {
  s.prune(0.0, 0.0);
  s.makeCompressed();
}

}  // namespace

SparseMatrix::SparseMatrix(Index rows, Index cols) : storage_(rows, cols) {
  if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix dimension");
  storage_.makeCompressed();
}

SparseMatrix::SparseMatrix(Storage storage) : storage_(std::move(storage)) { compact(storage_); }

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::span<const Triplet> entries) {
  if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix dimension");
  std::vector<Eigen::Triplet<double, std::int64_t>> trips;
  trips.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw InvalidArgument("triplet (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                            ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    if (!std::isfinite(e.value)) throw InvalidArgument("non-finite matrix entry");
    trips.emplace_back(e.row, e.col, e.value);
  }
  Storage s(rows, cols);
  s.setFromTriplets(trips.begin(), trips.end());
  return SparseMatrix(std::move(s));
}

SparseMatrix SparseMatrix::identity(Index n) {
  Storage s(n, n);
  s.setIdentity();
  return SparseMatrix(std::move(s));
}

SparseMatrix SparseMatrix::diagonal(const Eigen::VectorXd& values) {
  std::vector<Triplet> t;
  t.reserve(values.size());
  for (Index i = 0; i < values.size(); ++i) t.push_back({i, i, values[i]});
  return from_triplets(values.size(), values.size(), t);
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& dense) {
  std::vector<Triplet> t;
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) t.push_back({i, j, dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), t);
}

double SparseMatrix::coeff(Index i, Index j) const {
  if (i < 0 || i >= rows() || j < 0 || j >= cols()) throw InvalidArgument("coefficient index out of range");
  return storage_.coeff(i, j);
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(nnz()));
  for_each([&](Index i, Index j, double v) { out.push_back({i, j, v}); });
  return out;
}

Eigen::MatrixXd SparseMatrix::to_dense() const { return Eigen::MatrixXd(storage_); }

Eigen::VectorXd SparseMatrix::row_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(rows());
  for_each([&](Index i, Index, double v) { s[i] += v; });
  return s;
}

Eigen::VectorXd SparseMatrix::col_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(cols());
  for_each([&](Index, Index j, double v) { s[j] += v; });
  return s;
}

Eigen::VectorXd SparseMatrix::diagonal_values() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(std::min(rows(), cols()));
  for_each([&](Index i, Index j, double v) {
    if (i == j) d[i] = v;
  });
  return d;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for_each([&](Index, Index, double v) { m = std::max(m, std::abs(v)); });
  return m;
}

double SparseMatrix::frobenius_norm() const {
  double s = 0.0;
  for_each([&](Index, Index, double v) { s += v * v; });
  return std::sqrt(s);
}

double SparseMatrix::min_value() const {
  double m = 0.0;
  for_each([&](Index, Index, double v) { m = std::min(m, v); });
  return m;
}

SparseMatrix SparseMatrix::transpose() const { return SparseMatrix(Storage(storage_.transpose())); }

SparseMatrix SparseMatrix::symmetrized() const {
  if (!is_square()) throw InvalidArgument("symmetrized() needs a square matrix");
  Storage t(storage_.transpose());
  Storage s = (storage_ + t) * 0.5;
  return SparseMatrix(std::move(s));
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (!is_square()) return false;
  Storage t(storage_.transpose());
  Storage diff = storage_ - t;
  for (Index i = 0; i < diff.outerSize(); ++i)
    for (Storage::InnerIterator it(diff, i); it; ++it)
      if (!(std::abs(it.value()) <= tol)) return false;
  return true;
}

Eigen::VectorXd SparseMatrix::operator*(const Eigen::VectorXd& x) const {
  if (x.size() != cols()) throw InvalidArgument("matrix-vector shape mismatch");
  return storage_ * x;
}

Eigen::MatrixXd SparseMatrix::operator*(const Eigen::MatrixXd& x) const {
  if (x.rows() != cols()) throw InvalidArgument("matrix-matrix shape mismatch");
  return storage_ * x;
}

SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("sparse product shape mismatch");
  return SparseMatrix(SparseMatrix::Storage(a.storage_ * b.storage_));
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("sparse sum shape mismatch");
  return SparseMatrix(SparseMatrix::Storage(a.storage_ + b.storage_));
}

SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("sparse difference shape mismatch");
  return SparseMatrix(SparseMatrix::Storage(a.storage_ - b.storage_));
}

SparseMatrix operator*(double s, const SparseMatrix& a) {
  return SparseMatrix(SparseMatrix::Storage(a.storage_ * s));
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.triplets() == b.triplets();
}

SparseMatrix scale_rows_cols(const SparseMatrix& a, const Eigen::VectorXd& left,
                             const Eigen::VectorXd& right) {
  if (left.size() != a.rows() || right.size() != a.cols()) throw InvalidArgument("scaling vector size mismatch");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  a.for_each([&](Index i, Index j, double v) { t.push_back({i, j, v * (left[i] * right[j])}); });
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

}  // namespace dynembed
