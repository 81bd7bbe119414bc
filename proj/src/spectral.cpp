#include "dynembed/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"
#include "dynembed/graph.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

namespace {

constexpr double kKernelThreshold = 1e-9;
constexpr Index kDenseGuard = 2000;

void require_symmetric(const SparseMatrix& m, const char* who) {
  if (!m.is_square()) throw InvalidArgument(std::string(who) + ": matrix is not square");
  if (!m.is_symmetric(1e-12 * std::max(1.0, m.max_abs())))
    throw InvalidArgument(std::string(who) + ": matrix is not symmetric");
}

void require_k(Index k, Index n, const char* who) {
  if (k < 1 || k > n)
    throw InvalidArgument(std::string(who) + ": k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
}

bool use_dense(Index n, const EigenOptions& opts) {
  switch (opts.method) {
    case EigenMethod::Dense:
      return true;
    case EigenMethod::Power:
      return false;
    case EigenMethod::Auto:
      break;
  }
  return n <= opts.dense_max_n;
}

// Ascending full spectrum.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense_eigs(const SparseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_dense());
  if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver failed");
  return es;
}

EigenPairs power_top_k(const SparseMatrix& m, Index k, const EigenOptions& opts) {
  const Index n = m.rows();
  const Index b = std::min(n, k + std::max<Index>(k, 8));
  Eigen::VectorXd abs_row_sums = Eigen::VectorXd::Zero(n);
  m.for_each([&](Index i, Index, double v) { abs_row_sums[i] += std::abs(v); });
  const double shift = n > 0 ? abs_row_sums.maxCoeff() : 0.0;
  Rng rng(derive_seed(opts.seed, "eigensolver"));
  std::vector<double> residuals(static_cast<std::size_t>(k), 0.0);

  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    if (attempt > 0) spdlog::debug("subspace iteration: restart {}", attempt);
    Eigen::MatrixXd x(n, b);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < b; ++j) x(i, j) = 2.0 * uniform01(rng) - 1.0;
    x = Eigen::HouseholderQR<Eigen::MatrixXd>(x).householderQ() * Eigen::MatrixXd::Identity(n, b);
    Eigen::MatrixXd mx = m * x;
    for (int it = 0; it < opts.max_iter; ++it) {
      const Eigen::MatrixXd y = mx + shift * x;
      const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() * Eigen::MatrixXd::Identity(n, b);
      const Eigen::MatrixXd mq = m * q;
      Eigen::MatrixXd h = q.transpose() * mq;
      h = 0.5 * (h + h.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolver failed");
      const Eigen::MatrixXd v = es.eigenvectors().rowwise().reverse();
      const Eigen::VectorXd theta = es.eigenvalues().reverse();
      x = q * v;
      mx = mq * v;
      bool done = true;
      for (Index p = 0; p < k; ++p) {
        const double r = (mx.col(p) - theta[p] * x.col(p)).norm();
        residuals[static_cast<std::size_t>(p)] = r;
        done = done && r <= opts.tol * std::max(1.0, std::abs(theta[p]));
      }
      if (done) return {theta.head(k), x.leftCols(k)};
    }
  }
  throw ConvergenceError("subspace iteration did not converge", residuals);
}

}  // namespace

void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Index k = 0; k < vectors.cols(); ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, k));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, k) < 0.0) vectors.col(k) *= -1.0;
  }
}

EigenPairs top_k_eigs(const SparseMatrix& m, Index k, const EigenOptions& opts) {
  require_symmetric(m, "top_k_eigs");
  const Index n = m.rows();
  require_k(k, n, "top_k_eigs");
  EigenPairs out;
  if (use_dense(n, opts)) {
    const auto es = dense_eigs(m);
    out.values = es.eigenvalues().tail(k).reverse();
    out.vectors = es.eigenvectors().rightCols(k).rowwise().reverse();
  } else {
    out = power_top_k(m, k, opts);
  }
  apply_sign_convention(out.vectors);
  return out;
}

EigenPairs bottom_k_eigs(const SparseMatrix& m, Index k, const EigenOptions& opts) {
  require_symmetric(m, "bottom_k_eigs");
  const Index n = m.rows();
  require_k(k, n, "bottom_k_eigs");
  EigenPairs out;
  if (use_dense(n, opts)) {
    const auto es = dense_eigs(m);
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
  } else {
    const double lambda_max = top_k_eigs(m, 1, opts).values[0];
    const SparseMatrix shifted = lambda_max * SparseMatrix::identity(n) - m;
    EigenOptions inner = opts;
    inner.tol = opts.tol * std::max(1.0, std::abs(lambda_max));
    const EigenPairs top = power_top_k(shifted, k, inner);
    out.values = lambda_max - top.values.array();
    out.vectors = top.vectors;
  }
  apply_sign_convention(out.vectors);
  return out;
}

Embedding adjacency_embedding(const SparseMatrix& a, Index d, const EigenOptions& opts) {
  const EigenPairs eig = top_k_eigs(a, d, opts);
  return eig.vectors * eig.values.asDiagonal();
}

Embedding resistance_embedding(const SparseMatrix& l, Index d, const EigenOptions& opts) {
  require_symmetric(l, "resistance_embedding");
  const Index n = l.rows();
  const Index c = count_components(l);
  if (d < 1 || d > n - c)
    throw InvalidArgument("resistance embedding: d=" + std::to_string(d) + " exceeds n - c = " +
                          std::to_string(n - c) + " (" + std::to_string(c) + " connected components)");
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double lambda_max = 0.0;
  if (use_dense(n, opts)) {
    const auto es = dense_eigs(l);
    values = es.eigenvalues();
    vectors = es.eigenvectors();
    lambda_max = values[n - 1];
  } else {
    const EigenPairs eig = bottom_k_eigs(l, c + d, opts);
    values = eig.values;
    vectors = eig.vectors;
    lambda_max = top_k_eigs(l, 1, opts).values[0];
  }
  const double cutoff = kKernelThreshold * lambda_max;
  Index first = 0;
  while (first < values.size() && values[first] < cutoff) ++first;
  if (first + d > values.size())
    throw InvalidArgument("resistance embedding: only " + std::to_string(values.size() - first) +
                          " nonzero eigenvalues available, d=" + std::to_string(d));
  Eigen::MatrixXd v = vectors.middleCols(first, d);
  apply_sign_convention(v);
  const Eigen::VectorXd scale = values.segment(first, d).cwiseSqrt().cwiseInverse();
  return v * scale.asDiagonal();
}

Eigen::MatrixXd symmetric_pseudoinverse(const SparseMatrix& m) {
  require_symmetric(m, "symmetric_pseudoinverse");
  const Index n = m.rows();
  if (n > kDenseGuard)
    throw InvalidArgument("dense pseudoinverse limited to n <= " + std::to_string(kDenseGuard) + ", got " +
                          std::to_string(n));
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const auto es = dense_eigs(m);
  const double cutoff = kKernelThreshold * es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (std::abs(es.eigenvalues()[i]) > cutoff) inv[i] = 1.0 / es.eigenvalues()[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double effective_resistance(const SparseMatrix& l, Index x, Index y) {
  if (x < 0 || y < 0 || x >= l.rows() || y >= l.rows()) throw InvalidArgument("node index out of range");
  if (x == y) return 0.0;
  const Eigen::MatrixXd p = symmetric_pseudoinverse(l);
  return p(x, x) + p(y, y) - 2.0 * p(x, y);
}

double commute_time(const SparseMatrix& l, Index x, Index y) {
  return l.diagonal_values().sum() * effective_resistance(l, x, y);
}

}  // namespace dynembed
