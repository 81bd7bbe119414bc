#include <doctest.h>

#include "dynembed/error.hpp"
#include "dynembed/spectral.hpp"
#include "oracles.hpp"

using namespace dynembed;

namespace {

EigenOptions power() {
  EigenOptions o;
  o.method = EigenMethod::Power;
  o.tol = 1e-12;
  o.max_iter = 200000;
  return o;
}

SparseMatrix path(Index n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return SparseMatrix::from_dense(a);
}

SparseMatrix complete(Index n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(n, n);
  a.diagonal().setZero();
  return SparseMatrix::from_dense(a);
}

}  // namespace

TEST_CASE("top_k_eigs small cases") {
  for (auto opts : {EigenOptions{}, power()}) {
    const auto id = top_k_eigs(SparseMatrix::identity(3), 2, opts);
    CHECK(id.values[0] == doctest::Approx(1.0));
    CHECK(id.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(id.vectors.col(0).dot(id.vectors.col(1))) < 1e-8);

    const auto p2 = top_k_eigs(path(2), 2, opts);
    CHECK(p2.values[0] == doctest::Approx(1.0));
    CHECK(p2.values[1] == doctest::Approx(-1.0));
    CHECK(std::abs(std::abs(p2.vectors(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-8);
    CHECK(p2.vectors(0, 1) * p2.vectors(1, 1) < 0.0);
  }
}

TEST_CASE("top_k_eigs matches the dense oracle") {
  auto g = oracle::rng(20);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd m(8, 8);
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = std::normal_distribution<double>(0.0, 1.0)(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (auto opts : {EigenOptions{}, power()}) {
      opts.seed = static_cast<std::uint64_t>(trial);
      const auto got = top_k_eigs(SparseMatrix::from_dense(m), 8, opts);
      for (Index k = 0; k < 8; ++k) {
        CHECK(std::abs(got.values[k] - es.eigenvalues()[7 - k]) < 1e-8);
        CHECK((m * got.vectors.col(k) - got.values[k] * got.vectors.col(k)).norm() < 1e-6);
      }
    }
  }
}

TEST_CASE("power path on a larger sparse graph") {
  auto g = oracle::rng(21);
  const Eigen::MatrixXd a = oracle::random_graph(g, 60, 0.08, true);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  auto opts = power();
  const auto got = top_k_eigs(SparseMatrix::from_dense(a), 4, opts);
  for (Index k = 0; k < 4; ++k) CHECK(std::abs(got.values[k] - es.eigenvalues()[59 - k]) < 1e-7);
}

TEST_CASE("sign convention") {
  Eigen::MatrixXd v(3, 2);
  v << 0.1, 0.5, -0.9, -0.5, 0.2, 0.1;
  apply_sign_convention(v);
  CHECK(v(1, 0) == doctest::Approx(0.9));
  CHECK(v(0, 1) == doctest::Approx(0.5));  // tie: first entry
}

TEST_CASE("bottom_k_eigs of Laplacians") {
  const auto p3 = laplacian(path(3));
  for (auto opts : {EigenOptions{}, power()}) {
    const auto one = bottom_k_eigs(p3, 1, opts);
    CHECK(std::abs(one.values[0]) < 1e-8);
    CHECK((one.vectors.col(0).cwiseAbs().array() - 1.0 / std::sqrt(3.0)).abs().maxCoeff() < 1e-6);
    const auto all = bottom_k_eigs(p3, 3, opts);
    CHECK(all.values[0] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(all.values[1] == doctest::Approx(1.0));
    CHECK(all.values[2] == doctest::Approx(3.0));
  }
  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(4, 4);
  two(0, 1) = two(1, 0) = two(2, 3) = two(3, 2) = 1.0;
  const auto b = bottom_k_eigs(laplacian(SparseMatrix::from_dense(two)), 2);
  CHECK(std::abs(b.values[0]) < 1e-10);
  CHECK(std::abs(b.values[1]) < 1e-10);
}

TEST_CASE("adjacency embedding") {
  const auto k3 = adjacency_embedding(complete(3), 1);
  CHECK((k3.col(0).array() - 2.0 / std::sqrt(3.0)).abs().maxCoeff() < 1e-10);
  CHECK(adjacency_embedding(SparseMatrix(4, 4), 2).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(4, 4);
  two(0, 1) = two(1, 0) = two(2, 3) = two(3, 2) = 1.0;
  const auto e = adjacency_embedding(SparseMatrix::from_dense(two), 2);
  CHECK((e.row(0) - e.row(1)).norm() < 1e-10);
  CHECK((e.row(2) - e.row(3)).norm() < 1e-10);
  CHECK((e.row(0) - e.row(2)).norm() > 0.5);
  // unit eigenvalues: row inner products form the projector onto the top eigenspace
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(4, 4);
  proj.topLeftCorner(2, 2).setConstant(0.5);
  proj.bottomRightCorner(2, 2).setConstant(0.5);
  CHECK(((e * e.transpose()) - proj).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("resistance embedding and effective resistance") {
  const auto p2 = laplacian(path(2));
  const auto f2 = resistance_embedding(p2, 1);
  CHECK((f2.row(0) - f2.row(1)).squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto p3 = laplacian(path(3));
  const auto f3 = resistance_embedding(p3, 2);
  CHECK((f3.row(0) - f3.row(2)).squaredNorm() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(effective_resistance(p3, 0, 2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(effective_resistance(p3, 1, 1) == 0.0);
  CHECK(effective_resistance(p2, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  const auto k3 = laplacian(complete(3));
  const auto fk = resistance_embedding(k3, 2);
  for (Index i = 0; i < 3; ++i)
    for (Index j = i + 1; j < 3; ++j) CHECK((fk.row(i) - fk.row(j)).squaredNorm() == doctest::Approx(2.0 / 3.0));
  CHECK(commute_time(p3, 0, 2) == doctest::Approx(8.0));
  CHECK_THROWS_AS(resistance_embedding(p3, 3), InvalidArgument);
}

TEST_CASE("pseudoinverse matches the oracle on random graphs") {
  auto g = oracle::rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd a = oracle::random_graph(g, 10, 0.25, trial % 3 != 0, true);
    const auto l = laplacian(SparseMatrix::from_dense(a));
    const Eigen::MatrixXd want = oracle::pinv(oracle::dense_laplacian(a));
    CHECK((symmetric_pseudoinverse(l) - want).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("resistance embedding distance equals the pseudoinverse form for every d") {
  auto g = oracle::rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 6 + trial;
    const Eigen::MatrixXd a = oracle::random_graph(g, n, 0.3, true, true);
    const auto l = laplacian(SparseMatrix::from_dense(a));
    for (Index d = 1; d < n; ++d) {
      const auto f = resistance_embedding(l, d);
      // S = sum over the d used modes of v v^T / l
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::dense_laplacian(a));
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
      for (Index k = 1; k <= d; ++k)
        s += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / es.eigenvalues()[k];
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          CHECK(std::abs(s(i, i) + s(j, j) - 2.0 * s(i, j) - (f.row(i) - f.row(j)).squaredNorm()) < 1e-9);
    }
  }
}
