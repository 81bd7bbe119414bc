#include <doctest.h>

#include <set>

#include "dynembed/error.hpp"
#include "dynembed/linkpred.hpp"
#include "oracles.hpp"

using namespace dynembed;

TEST_CASE("separation metrics") {
  Eigen::MatrixXd e(3, 2);
  e << 1, 0, 0, 1, 1, 0;
  CHECK(hadamard_separation(e, 0, 1) == 0.0);
  CHECK(l2_separation(e, 0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(l2_separation(e, 0, 2) == 0.0);
  CHECK(hadamard_separation(e, 0, 2) == 1.0);
  for (double theta : {0.1, 1.0, 2.5}) {
    Eigen::MatrixXd u(2, 2);
    u << 1, 0, std::cos(theta), std::sin(theta);
    CHECK(l2_separation(u, 0, 1) == doctest::Approx(2.0 * std::sin(theta / 2.0)).epsilon(1e-14));
  }
  auto g = oracle::rng(30);
  Eigen::MatrixXd r(5, 4);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) r(i, j) = oracle::unit(g) - 0.5;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) {
      const double l2 = l2_separation(r, i, j);
      CHECK(l2 * l2 == doctest::Approx(r.row(i).squaredNorm() + r.row(j).squaredNorm() - 2.0 * hadamard_separation(r, i, j)).epsilon(1e-12));
    }
  CHECK(parse_separation("l2") == Separation::L2);
  CHECK(parse_separation(to_string(Separation::Hadamard)) == Separation::Hadamard);
}

TEST_CASE("training sample") {
  const Eigen::MatrixXd emb = Eigen::MatrixXd::Identity(3, 3);
  const auto p2 = SparseMatrix::from_triplets(3, 3, std::vector<Triplet>{{0, 1, 1.0}, {1, 0, 1.0}});
  const auto s = sample_training_set(p2, false, emb, Separation::L2, 1, 5);
  CHECK(s.pairs.size() == 2);
  CHECK(s.pairs[0] == std::pair<Index, Index>{0, 1});
  CHECK(s.labels[0] == 1);
  CHECK(s.labels[1] == -1);
  CHECK((s.pairs[1] == std::pair<Index, Index>{0, 2} || s.pairs[1] == std::pair<Index, Index>{1, 2}));
  CHECK(s.separations[0] == doctest::Approx(std::sqrt(2.0)));

  Eigen::MatrixXd k3 = Eigen::MatrixXd::Ones(3, 3);
  k3.diagonal().setZero();
  CHECK_THROWS_AS(sample_training_set(SparseMatrix::from_dense(k3), false, emb, Separation::L2, 3, 0), InvalidArgument);

  auto g = oracle::rng(31);
  const auto a = SparseMatrix::from_dense(oracle::random_graph(g, 40, 0.1, false));
  const Eigen::MatrixXd e40 = Eigen::MatrixXd::Random(40, 3);
  const auto s1 = sample_training_set(a, false, e40, Separation::Hadamard, 20, 9);
  const auto s2 = sample_training_set(a, false, e40, Separation::Hadamard, 20, 9);
  CHECK(s1.pairs == s2.pairs);
  CHECK(s1.separations == s2.separations);
  std::set<std::pair<Index, Index>> seen(s1.pairs.begin(), s1.pairs.end());
  CHECK(seen.size() == 40);
  for (std::size_t k = 0; k < s1.pairs.size(); ++k) {
    const auto [i, j] = s1.pairs[k];
    CHECK(i < j);
    CHECK((a.coeff(i, j) != 0.0) == (s1.labels[k] == 1));
  }

  // directed: pairs are ordered and (i, j) is a link only if a_ij != 0
  const auto d = SparseMatrix::from_triplets(4, 4, std::vector<Triplet>{{0, 1, 1.0}, {2, 3, 1.0}});
  const auto sd = sample_training_set(d, true, Eigen::MatrixXd::Identity(4, 4), Separation::L2, 2, 1);
  for (std::size_t k = 0; k < sd.pairs.size(); ++k)
    CHECK((d.coeff(sd.pairs[k].first, sd.pairs[k].second) != 0.0) == (sd.labels[k] == 1));
}

TEST_CASE("AUC and AP oracles") {
  const std::vector<double> s{0.9, 0.8, 0.3};
  const std::vector<int> y{1, -1, 1};
  CHECK(auc_roc(s, y) == 0.5);
  CHECK(average_precision(s, y) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  const std::vector<double> perfect{1, 0, 1, 0};
  const std::vector<int> py{1, -1, 1, -1};
  CHECK(auc_roc(perfect, py) == 1.0);
  CHECK(average_precision(perfect, py) == 1.0);
  const std::vector<double> reversed{0, 1, 0, 1};
  CHECK(auc_roc(reversed, py) == 0.0);

  auto g = oracle::rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(oracle::unit(g) * 100);
    std::vector<double> sc(static_cast<std::size_t>(n));
    std::vector<int> lab(static_cast<std::size_t>(n));
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      sc[static_cast<std::size_t>(i)] = std::floor(oracle::unit(g) * 10.0) / 10.0;  // many ties
      lab[static_cast<std::size_t>(i)] = oracle::unit(g) < 0.4 ? 1 : -1;
      pos |= lab[static_cast<std::size_t>(i)] == 1;
      neg |= lab[static_cast<std::size_t>(i)] == -1;
    }
    if (!pos || !neg) continue;
    CHECK(auc_roc(sc, lab) == oracle::brute_auc(sc, lab));
    CHECK(std::abs(average_precision(sc, lab) - oracle::brute_ap(sc, lab)) < 1e-12);
  }
}

TEST_CASE("L1 logistic fit") {
  std::vector<double> x{0.1, 0.2, 0.3, 1.1, 1.2, 1.3};
  std::vector<int> y{1, 1, 1, -1, -1, -1};
  const auto m = fit_logistic_l1_full(x, y);
  const double base = logistic_l1_loss(m.w, m.c, x, y);
  for (double dw : {-0.05, 0.05})
    for (double dc : {-0.05, 0.0, 0.05}) CHECK(logistic_l1_loss(m.w + dw, m.c + dc, x, y) >= base - 1e-9);
  CHECK(m.w < 0.0);  // short separation means link

  const std::vector<double> flat(10, 2.0);
  std::vector<int> fy{1, 1, 1, 1, 1, 1, 1, -1, -1, -1};
  const auto f = fit_logistic_l1_full(flat, fy);
  CHECK(f.w == 0.0);
  CHECK(f.c == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-8));

  // separable sample: out-of-fold AUC is 1
  EdgeSample sep;
  for (int i = 0; i < 40; ++i) {
    sep.pairs.push_back({i, i + 1});
    sep.labels.push_back(i < 20 ? 1 : -1);
    sep.separations.push_back(i < 20 ? 0.1 * i : 5.0 + 0.1 * i);
  }
  const auto cv = cross_validate_logistic(sep, 5, 1);
  CHECK(cv.model.cv_auc == 1.0);
  CHECK(auc_roc(cv.out_of_fold, sep.labels) == 1.0);

  // labels independent of the feature
  auto g = oracle::rng(33);
  EdgeSample noise;
  for (int i = 0; i < 1000; ++i) {
    noise.pairs.push_back({i, i + 1});
    noise.labels.push_back(i % 2 ? 1 : -1);
    noise.separations.push_back(oracle::unit(g));
  }
  const auto ncv = cross_validate_logistic(noise, 5, 2);
  CHECK(std::abs(ncv.model.cv_auc - 0.5) < 0.1);
  const auto probs = predict_scores(ncv.model, noise.separations);
  for (double p : probs) CHECK((p > 0.0 && p < 1.0));
}
