#include <doctest.h>

#include "dynembed/dyn_embed.hpp"
#include "dynembed/error.hpp"
#include "dynembed/synth.hpp"
#include "oracles.hpp"

using namespace dynembed;

namespace {

DynamicNetwork constant_network(const Eigen::MatrixXd& a, Index tau) {
  std::vector<Snapshot> snaps;
  for (Index t = 0; t < tau; ++t) snaps.push_back(Snapshot::from_matrix(SparseMatrix::from_dense(a), false));
  std::vector<NodeLabel> labels;
  for (Index i = 0; i < a.rows(); ++i) labels.push_back("v" + std::to_string(i));
  return DynamicNetwork(labels, snaps, false);
}

}  // namespace

TEST_CASE("temporal weights") {
  const auto u = make_weights({}, 4);
  CHECK(u.values == Eigen::VectorXd::Ones(4));
  const auto e = make_weights({WeightScheme::Exponential, std::log(2.0), {}}, 3);
  CHECK(e.values[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(e.values[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.values[2] == 1.0);
  const auto gw = make_weights({WeightScheme::Gaussian, 8.0, {}}, 9);
  for (Index t = 1; t <= 9; ++t)
    CHECK(gw.values[t - 1] == doctest::Approx(std::exp(-double((9 - t) * (9 - t)) / 128.0)).epsilon(1e-15));
  CHECK(gw.values.maxCoeff() == 1.0);
  const auto x = make_weights({WeightScheme::Explicit, 0.0, {1.0, 4.0, 2.0}}, 3);
  CHECK(x.values[1] == 1.0);
  CHECK(x.values[0] == 0.25);
  CHECK_THROWS_AS(make_weights({WeightScheme::Gaussian, 0.0, {}}, 3), InvalidArgument);
  CHECK_THROWS_AS(make_weights({WeightScheme::Exponential, -1.0, {}}, 3), InvalidArgument);
  CHECK_THROWS_AS(make_weights({WeightScheme::Explicit, 0.0, {1.0}}, 3), InvalidArgument);
  CHECK_THROWS_AS(make_weights({WeightScheme::Explicit, 0.0, {0.0, 0.0}}, 2), InvalidArgument);
  CHECK(parse_weight_scheme(to_string(WeightScheme::Gaussian)) == WeightScheme::Gaussian);
}

TEST_CASE("preconditioning recurrence") {
  std::vector<Snapshot> snaps{Snapshot(2, {}, false), Snapshot(2, {{0, 1, 4.0}}, false)};
  DynamicNetwork net({"a", "b"}, snaps, false);
  const auto out = precondition(net, make_weights({WeightScheme::Explicit, 0.0, {0.5, 1.0}}, 2));
  CHECK(adjacency_matrix(out.snapshot(0)).coeff(0, 1) == 2.0);
  CHECK(adjacency_matrix(out.snapshot(1)).coeff(0, 1) == 4.0);

  const auto same = precondition(net, make_weights({}, 2));
  for (Index t = 0; t < 2; ++t) CHECK(adjacency_matrix(same.snapshot(t)) == adjacency_matrix(net.snapshot(t)));

  // a link of constant weight in every slice keeps its weight for any weights
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 2) = a(2, 0) = 1.5;
  const auto c = precondition(constant_network(a, 4), make_weights({WeightScheme::Gaussian, 1.0, {}}, 4));
  for (Index t = 0; t < 4; ++t) CHECK(adjacency_matrix(c.snapshot(t)).coeff(0, 2) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("constant-slice embedding matches the adjacency embedding") {
  Eigen::MatrixXd a(4, 4);
  a << 0, 2, 1, 0, 2, 0, 0.5, 1, 1, 0.5, 0, 3, 0, 1, 3, 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Index tau = 5;
  DynEmbedConfig cfg;
  cfg.d = 2;
  cfg.decomposition_rank = 4;
  const auto r = dynacpd_embed(constant_network(a, tau), cfg);
  std::vector<Index> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(),
            [&](Index x, Index y) { return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]); });
  for (Index j = 0; j < 2; ++j) {
    const double mu = es.eigenvalues()[order[static_cast<std::size_t>(j)]];
    const Eigen::VectorXd v = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    // sigma = sqrt(sqrt(tau) |mu|) * <1, c> with c = +-1/sqrt(tau)
    CHECK(std::abs(r.sigma[j]) == doctest::Approx(std::pow(double(tau), 0.75) * std::sqrt(std::abs(mu))).epsilon(1e-6));
    CHECK(std::abs(r.embedding.col(j).normalized().dot(v)) == doctest::Approx(1.0).epsilon(1e-8));
  }
  // column norms are |sigma|
  for (Index j = 0; j < 2; ++j) CHECK(std::abs(r.embedding.col(j).norm() - std::abs(r.sigma[j])) < 1e-9);
}

TEST_CASE("selection and OCPD properties") {
  SbmParams p;
  p.n = 30;
  p.tau = 4;
  p.seed = 7;
  const auto net = generate_dynamic_sbm(p).network;
  DynEmbedConfig cfg;
  cfg.d = 4;
  cfg.als.max_sweeps = 100;
  const auto r = dynacpd_embed(net, cfg);
  CHECK(r.model.rank() == 8);
  CHECK(r.embedding.rows() == 30);
  CHECK(r.embedding.cols() == 4);
  for (Index j = 1; j < 4; ++j) CHECK(std::abs(r.sigma[j - 1]) >= std::abs(r.sigma[j]));
  double smallest_selected = std::abs(r.sigma[3]);
  for (Index i = 0; i < r.model.rank(); ++i)
    if (std::find(r.selected.begin(), r.selected.end(), i) == r.selected.end())
      CHECK(std::abs(r.sigma_all[i]) <= smallest_selected);
  for (Index i = 0; i < r.model.rank(); ++i)
    CHECK(r.sigma_all[i] == doctest::Approx(std::sqrt(r.model.lambdas[i]) * r.model.c.col(i).sum()).epsilon(1e-12));

  const auto o = dynaocpd_embed(net, cfg);
  const Eigen::MatrixXd gram = o.embedding.transpose() * o.embedding;
  Eigen::MatrixXd want = o.sigma.cwiseAbs2().asDiagonal();
  CHECK((gram - want).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, want.maxCoeff()));

  cfg.d = 31;
  CHECK_THROWS_AS(dynacpd_embed(net, cfg), InvalidArgument);
  cfg.d = 0;
  CHECK_THROWS_AS(dynacpd_embed(net, cfg), InvalidArgument);
}

TEST_CASE("single slice reduces to a scaled spectral embedding") {
  Eigen::MatrixXd a(3, 3);
  a << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  DynEmbedConfig cfg;
  cfg.d = 1;
  cfg.decomposition_rank = 3;
  const auto r = dynacpd_embed(constant_network(a, 1), cfg);
  Index top = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&top);
  CHECK(std::abs(r.embedding.col(0).normalized().dot(es.eigenvectors().col(top))) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("block structure separates in the embedding") {
  SbmParams p;
  p.drift = 0.0;
  p.seed = 3;
  const auto s = generate_dynamic_sbm(p);
  DynEmbedConfig cfg;
  cfg.d = 8;
  const auto r = dynacpd_embed(s.network, cfg);
  double within = 0, cross = 0;
  long nw = 0, nc = 0;
  const auto& block = s.membership.back();
  for (Index i = 0; i < p.n; ++i)
    for (Index j = i + 1; j < p.n; ++j) {
      const double dist = (r.embedding.row(i) - r.embedding.row(j)).norm();
      if (block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)]) {
        within += dist;
        ++nw;
      } else {
        cross += dist;
        ++nc;
      }
    }
  CHECK(within / nw < cross / nc);
}

TEST_CASE("katz variant and fraction") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = a(2, 3) = a(3, 2) = 1.0;
  const auto net = constant_network(a, 3);
  const auto slices = slice_matrices(net, AdjacencyVariant::Katz, 0.2);
  CHECK((slices[0].to_dense() - oracle::katz(a, 0.2)).cwiseAbs().maxCoeff() < 1e-12);
  DynEmbedConfig cfg;
  cfg.d = 2;
  cfg.adjacency = AdjacencyVariant::Katz;
  cfg.katz_fraction = 0.5;
  const auto r = dynacpd_embed(net, cfg);
  CHECK(r.katz_omega == doctest::Approx(0.5 * katz_omega_limit(SparseMatrix::from_dense(a))));
  cfg.katz_fraction = 1.0;
  CHECK_THROWS_AS(dynacpd_embed(net, cfg), InvalidArgument);
  cfg.katz_fraction.reset();
  cfg.katz_omega = 10.0;
  CHECK_THROWS_AS(dynacpd_embed(net, cfg), KatzBoundError);
}

TEST_CASE("convolution and baselines") {
  std::vector<SparseMatrix> slices{SparseMatrix::from_triplets(3, 3, std::vector<Triplet>{{0, 1, 1.0}}),
                                   SparseMatrix::from_triplets(3, 3, std::vector<Triplet>{{1, 2, 1.0}})};
  const auto c = convolve_snapshots(slices, make_weights({}, 2));
  CHECK(c.coeff(0, 1) == 0.5);
  CHECK(c.coeff(1, 2) == 0.5);
  const auto last = convolve_snapshots(slices, make_weights({WeightScheme::Explicit, 0.0, {0.0, 1.0}}, 2));
  CHECK(last == slices[1]);
  const std::vector<SparseMatrix> same{slices[0], slices[0]};
  CHECK(convolve_snapshots(same, make_weights({}, 2)) == slices[0]);

  SbmParams p;
  p.n = 20;
  p.tau = 3;
  const auto net = generate_dynamic_sbm(p).network;
  const auto adj = baseline_embedding(net, Baseline::AdjLast, 4);
  const auto want = adjacency_embedding(adjacency_matrix(net.snapshot(2)), 4);
  CHECK((adj - want).cwiseAbs().maxCoeff() < 1e-10);
  const auto res = baseline_embedding(net, Baseline::ResWt, 4);
  CHECK(res.rows() == 20);
  CHECK(res.cols() == 4);

  // disconnected graph: resistance dimensions beyond n - c are zero
  std::vector<Snapshot> snaps{Snapshot(4, {{0, 1, 1.0}}, false)};
  DynamicNetwork tiny({"a", "b", "c", "d"}, snaps, false);
  const auto pad = baseline_embedding(tiny, Baseline::ResLast, 2);
  CHECK(pad.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(pad(0, 0) - pad(1, 0)) == doctest::Approx(1.0));
}
