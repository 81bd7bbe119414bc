#include <doctest.h>

#include <numeric>

#include "dynembed/error.hpp"
#include "dynembed/tensor.hpp"
#include "oracles.hpp"

using namespace dynembed;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& g, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = std::normal_distribution<double>(0.0, 1.0)(g);
  return m;
}

Eigen::MatrixXd orthonormal(std::mt19937_64& g, Index rows, Index cols) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(g, rows, cols));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

oracle::Dense3 random_sparse_dense(std::mt19937_64& g, Index n1, Index n2, Index n3, double density) {
  oracle::Dense3 d(static_cast<std::size_t>(n3), Eigen::MatrixXd::Zero(n1, n2));
  for (auto& s : d)
    for (Index i = 0; i < n1; ++i)
      for (Index j = 0; j < n2; ++j)
        if (oracle::unit(g) < density) s(i, j) = std::normal_distribution<double>(0.0, 1.0)(g);
  return d;
}

Eigen::MatrixXd normalized_columns(Eigen::MatrixXd m) {
  for (Index r = 0; r < m.cols(); ++r) m.col(r).normalize();
  return m;
}

}  // namespace

TEST_CASE("sparse tensor construction") {
  SparseTensor3 z({2, 2, 2}, {{0, 1, 1, 2.0}, {0, 1, 1, 1.0}, {1, 0, 0, 0.0}, {1, 1, 0, 5.0}});
  CHECK(z.nnz() == 2);
  CHECK(z.entries()[0].t == 0);
  CHECK(z.slice(1).coeff(0, 1) == 3.0);
  CHECK(z.slice_begin(1) == 1);
  CHECK(z.frobenius_norm() == doctest::Approx(std::sqrt(34.0)));
  CHECK_THROWS_AS(SparseTensor3({2, 2, 2}, {{0, 2, 0, 1.0}}), InvalidArgument);
  const std::vector<double> f{2.0, 0.5};
  const auto s = z.scale_slices(f);
  CHECK(s.slice(0).coeff(1, 1) == 10.0);
  CHECK(s.slice(1).coeff(0, 1) == 1.5);

  std::vector<SparseMatrix> slices(3, SparseMatrix(4, 4));
  const auto zero = SparseTensor3::from_snapshots(slices);
  CHECK(zero.nnz() == 0);
  CHECK(zero.dims() == std::array<Index, 3>{4, 4, 3});
}

TEST_CASE("mttkrp matches the dense unfolding oracle") {
  auto g = oracle::rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = random_sparse_dense(g, 4 + trial % 3, 5, 3, 0.4);
    const auto z = oracle::to_sparse(d);
    Factors f{random_matrix(g, z.dim(0), 3), random_matrix(g, 5, 3), random_matrix(g, 3, 3)};
    for (int m = 0; m < 3; ++m) {
      const Eigen::MatrixXd got = mttkrp(z, f, static_cast<Mode>(m));
      const Eigen::MatrixXd want = oracle::mttkrp(d, f, m);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  const auto zero = oracle::to_sparse({Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3)});
  Factors f{Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(2, 2)};
  CHECK(mttkrp(zero, f, Mode::A).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cp_als recovers an exact rank-2 tensor") {
  auto g = oracle::rng(11);
  const Eigen::Vector2d l(3.0, 1.0);
  const auto d = oracle::cp_dense(l, orthonormal(g, 6, 2), orthonormal(g, 6, 2), orthonormal(g, 4, 2));
  AlsConfig cfg;
  cfg.rank = 2;
  cfg.rel_tol = 1e-14;
  const auto model = cp_als(oracle::to_sparse(d), cfg);
  CHECK(model.fit < 1e-6);
  CHECK(model.lambdas[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(model.lambdas[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cp_als model invariants") {
  auto g = oracle::rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_sparse_dense(g, 7, 7, 4, 0.5);
    AlsConfig cfg;
    cfg.rank = 3;
    cfg.max_sweeps = 50;
    cfg.init = trial % 2 ? AlsInit::Random : AlsInit::Spectral;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto z = oracle::to_sparse(d);
    const auto model = cp_als(z, cfg);
    for (const auto* m : {&model.a, &model.b, &model.c})
      for (Index r = 0; r < 3; ++r) CHECK(std::abs(m->col(r).norm() - 1.0) < 1e-10);
    for (Index r = 0; r < 3; ++r) CHECK(model.lambdas[r] >= 0.0);
    for (Index r = 1; r < 3; ++r) CHECK(model.lambdas[r - 1] >= model.lambdas[r]);
    const double direct =
        oracle::diff_norm(d, oracle::cp_dense(model.lambdas, model.a, model.b, model.c)) / oracle::frob(d);
    CHECK(model.fit == doctest::Approx(direct).epsilon(1e-8));
    CHECK(reconstruct_error(z, model).value == doctest::Approx(direct).epsilon(1e-8));
    CHECK(model.fit_history.size() == static_cast<std::size_t>(model.sweeps));
    // reconstruct_slice agrees with the dense sum
    const auto dense = oracle::cp_dense(model.lambdas, model.a, model.b, model.c);
    CHECK((model.reconstruct_slice(2) - dense[2]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cp_als follows the textbook ALS oracle") {
  auto g = oracle::rng(13);
  const auto d = random_sparse_dense(g, 5, 5, 3, 0.7);
  Factors start{normalized_columns(random_matrix(g, 5, 2)), normalized_columns(random_matrix(g, 5, 2)),
                normalized_columns(random_matrix(g, 3, 2))};
  AlsConfig cfg;
  cfg.rank = 2;
  cfg.init = AlsInit::Provided;
  cfg.initial_factors = start;
  cfg.max_sweeps = 5;
  cfg.rel_tol = 1e-300;
  const auto model = cp_als(oracle::to_sparse(d), cfg);
  CHECK(model.sweeps == 5);
  CHECK(model.fit == doctest::Approx(oracle::reference_als(d, start, 5)).epsilon(1e-8));
}

TEST_CASE("cp_als constant-slice limit") {
  Eigen::Matrix4d a;
  a << 2, 1, 0, 0, 1, 3, 1, 0, 0, 1, -1, 1, 0, 0, 1, 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(a);
  Eigen::Vector4d mags = es.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + 4, std::greater<>());
  const int tau = 5;
  const auto z = oracle::to_sparse(oracle::Dense3(tau, a));
  AlsConfig cfg;
  cfg.rank = 4;
  const auto model = cp_als(z, cfg);
  for (Index r = 0; r < 4; ++r) {
    CHECK(model.lambdas[r] == doctest::Approx(std::sqrt(tau) * mags[r]).epsilon(1e-6));
    const Eigen::VectorXd c = model.c.col(r).cwiseAbs();
    CHECK((c.array() - 1.0 / std::sqrt(tau)).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("zero tensor decomposes to zero") {
  const auto z = oracle::to_sparse(oracle::Dense3(2, Eigen::MatrixXd::Zero(3, 3)));
  AlsConfig cfg;
  const auto model = cp_als(z, cfg);
  CHECK(model.lambdas[0] == 0.0);
  CHECK(model.fit == 0.0);
  const auto err = reconstruct_error(z, model);
  CHECK(err.value == 0.0);
  CHECK_FALSE(err.relative);
}

TEST_CASE("als config validation") {
  const auto z = oracle::to_sparse(oracle::Dense3(2, Eigen::MatrixXd::Identity(3, 3)));
  AlsConfig cfg;
  cfg.rank = 0;
  CHECK_THROWS_AS(cp_als(z, cfg), InvalidArgument);
  cfg.rank = 4;
  CHECK_THROWS_AS(ocp_als(z, cfg), InvalidArgument);
  cfg.rank = 1;
  cfg.max_sweeps = 0;
  CHECK_THROWS_AS(cp_als(z, cfg), InvalidArgument);
  cfg.max_sweeps = 10;
  cfg.init = AlsInit::Provided;
  CHECK_THROWS_AS(cp_als(z, cfg), InvalidArgument);
}

TEST_CASE("ocp_als keeps B orthonormal and never increases the fit") {
  auto g = oracle::rng(14);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 5 + trial;
    const auto d = random_sparse_dense(g, n, n, 3 + trial % 3, 0.5);
    AlsConfig cfg;
    cfg.rank = 3;
    cfg.max_sweeps = 100;
    cfg.init = trial % 2 ? AlsInit::Random : AlsInit::Spectral;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto model = ocp_als(oracle::to_sparse(d), cfg);
    const Eigen::MatrixXd btb = model.b.transpose() * model.b;
    CHECK((btb - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    for (std::size_t k = 1; k < model.fit_history.size(); ++k)
      CHECK(model.fit_history[k] <= model.fit_history[k - 1] + 1e-12);
  }
}

TEST_CASE("ocp_als constant-slice limit gives eigenvectors") {
  Eigen::Matrix3d a;
  a << 3, 1, 0, 1, 2, 0.5, 0, 0.5, -2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a);
  const auto z = oracle::to_sparse(oracle::Dense3(4, a));
  AlsConfig cfg;
  cfg.rank = 3;
  const auto model = ocp_als(z, cfg);
  CHECK(model.fit < 1e-8);
  for (Index r = 0; r < 3; ++r) {
    double best = 0.0;
    for (Index q = 0; q < 3; ++q) best = std::max(best, std::abs(model.b.col(r).dot(es.eigenvectors().col(q))));
    CHECK(best == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("weighted reconstruction error") {
  auto g = oracle::rng(15);
  const auto d = random_sparse_dense(g, 3, 3, 2, 0.8);
  const auto z = oracle::to_sparse(d);
  AlsConfig cfg;
  cfg.rank = 1;
  const auto model = cp_als(z, cfg);
  const std::vector<double> ones{1.0, 1.0};
  CHECK(reconstruct_error(z, model, ones).value == doctest::Approx(reconstruct_error(z, model).value).epsilon(1e-14));

  const std::vector<double> w{1.0, 0.25};
  oracle::Dense3 scaled = d;
  auto approx = oracle::cp_dense(model.lambdas, model.a, model.b, model.c);
  for (std::size_t t = 0; t < 2; ++t) {
    scaled[t] *= std::sqrt(w[t]);
    approx[t] *= std::sqrt(w[t]);
  }
  const double want = oracle::diff_norm(scaled, approx) / oracle::frob(scaled);
  CHECK(std::abs(reconstruct_error(z, model, w).value - want) < 1e-12);

  // the exact decomposition has zero error
  CPModel exact;
  exact.lambdas = Eigen::VectorXd::Constant(1, 2.0);
  exact.a = Eigen::Vector3d(1, 0, 0);
  exact.b = Eigen::Vector3d(0, 1, 0);
  exact.c = Eigen::Vector2d(0.6, 0.8);
  const auto ze = oracle::to_sparse(oracle::cp_dense(exact.lambdas, exact.a, exact.b, exact.c));
  CHECK(reconstruct_error(ze, exact).value < 1e-12);
}

TEST_CASE("select_components reorders") {
  CPModel m;
  m.lambdas = Eigen::Vector3d(3, 2, 1);
  m.a = m.b = Eigen::Matrix3d::Identity();
  m.c = Eigen::MatrixXd::Identity(3, 3);
  m.fit = 0.5;
  const std::vector<Index> idx{2, 0};
  const auto s = select_components(m, idx);
  CHECK(s.rank() == 2);
  CHECK(s.lambdas[0] == 1.0);
  CHECK(s.a(2, 0) == 1.0);
  CHECK(s.fit == 0.5);
}
