#include "dynembed/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

std::string to_string(Separation s) { return s == Separation::L2 ? "l2" : "hadamard"; }

Separation parse_separation(const std::string& name) {
  if (name == "l2") return Separation::L2;
  if (name == "hadamard") return Separation::Hadamard;
  throw InvalidArgument("unknown separation metric '" + name + "'");
}

namespace {

void check_pair(const Embedding& emb, Index i, Index j) {
  if (i < 0 || j < 0 || i >= emb.rows() || j >= emb.rows()) throw InvalidArgument("node index out of range");
}

}  // namespace

double hadamard_separation(const Embedding& emb, Index i, Index j) {
  check_pair(emb, i, j);
  return emb.row(i).dot(emb.row(j));
}

double l2_separation(const Embedding& emb, Index i, Index j) {
  check_pair(emb, i, j);
  return (emb.row(i) - emb.row(j)).norm();
}

double separation(const Embedding& emb, Index i, Index j, Separation metric) {
  return metric == Separation::L2 ? l2_separation(emb, i, j) : hadamard_separation(emb, i, j);
}

EdgeSample sample_training_set(const SparseMatrix& target, bool directed, const Embedding& emb, Separation metric,
                               Index n_pos, std::uint64_t seed) {
  const Index n = target.rows();
  if (!target.is_square()) throw InvalidArgument("target slice is not square");
  if (emb.rows() != n) throw InvalidArgument("embedding rows do not match the target slice");
  if (n_pos < 1) throw InvalidArgument("n_pos must be >= 1");

  std::vector<std::pair<Index, Index>> links;
  std::unordered_set<std::uint64_t> link_keys;
  auto key = [n](Index i, Index j) { return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + j; };
  target.for_each([&](Index i, Index j, double) {
    if (i == j) return;
    if (!directed && i > j) std::swap(i, j);
    if (link_keys.insert(key(i, j)).second) links.emplace_back(i, j);
  });
  std::sort(links.begin(), links.end());
  const auto total_pairs = directed ? n * (n - 1) : n * (n - 1) / 2;
  const auto non_links = total_pairs - static_cast<Index>(links.size());
  if (static_cast<Index>(links.size()) < n_pos)
    throw InvalidArgument("target slice has " + std::to_string(links.size()) + " links, " + std::to_string(n_pos) +
                          " requested");
  if (non_links < n_pos)
    throw InvalidArgument("target slice has " + std::to_string(non_links) + " non-links, " + std::to_string(n_pos) +
                          " requested");

  Rng rng(derive_seed(seed, "sampler"));
  EdgeSample sample;
  for (Index k = 0; k < n_pos; ++k) {
    const auto pick = k + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(links.size() - k)));
    std::swap(links[static_cast<std::size_t>(k)], links[static_cast<std::size_t>(pick)]);
    sample.pairs.push_back(links[static_cast<std::size_t>(k)]);
    sample.labels.push_back(+1);
  }

  if (non_links < 4 * n_pos) {
    // Dense target: enumerate the complement and draw without replacement.
    std::vector<std::pair<Index, Index>> pool;
    for (Index i = 0; i < n; ++i)
      for (Index j = directed ? 0 : i + 1; j < n; ++j)
        if (i != j && !link_keys.count(key(i, j))) pool.emplace_back(i, j);
    for (Index k = 0; k < n_pos; ++k) {
      const auto pick = k + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(pool.size() - k)));
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
      sample.pairs.push_back(pool[static_cast<std::size_t>(k)]);
      sample.labels.push_back(-1);
    }
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (static_cast<Index>(taken.size()) < n_pos) {
      Index i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      Index j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      if (i == j) continue;
      if (!directed && i > j) std::swap(i, j);
      if (link_keys.count(key(i, j)) || !taken.insert(key(i, j)).second) continue;
      sample.pairs.emplace_back(i, j);
      sample.labels.push_back(-1);
    }
  }
  sample.separations.reserve(sample.pairs.size());
  for (const auto& [i, j] : sample.pairs) sample.separations.push_back(separation(emb, i, j, metric));
  return sample;
}

namespace {

constexpr double kLossScale = 10.0;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_xy(std::span<const double> x, std::span<const int> y) {
  if (x.size() != y.size()) throw InvalidArgument("features and labels differ in length");
  bool pos = false, neg = false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) throw InvalidArgument("non-finite feature");
    (y[k] > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw InvalidArgument("logistic fit needs both classes");
}

double data_loss(double w, double c, std::span<const double> x, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double yk = y[k] > 0 ? 1.0 : -1.0;
    s += softplus(-yk * (x[k] * w + c));
  }
  return s;
}

// argmin_c data_loss(w, c) by safeguarded Newton.
double optimal_intercept(double w, double c, std::span<const double> x, std::span<const int> y) {
  double f = data_loss(w, c, x, y);
  for (int it = 0; it < 200; ++it) {
    double g = 0.0, h = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double yk = y[k] > 0 ? 1.0 : -1.0;
      const double m = x[k] * w + c;
      g += -yk * sigmoid(-yk * m);
      const double p = sigmoid(m);
      h += p * (1.0 - p);
    }
    if (std::abs(g) <= 1e-13 * static_cast<double>(x.size())) break;
    double step = h > 0.0 ? -g / h : -g;
    step = std::clamp(step, -10.0, 10.0);
    double next = c + step, fn = data_loss(w, next, x, y);
    int halvings = 0;
    while (fn > f && halvings < 60) {
      step *= 0.5;
      next = c + step;
      fn = data_loss(w, next, x, y);
      ++halvings;
    }
    if (fn > f) break;
    const bool tiny = std::abs(next - c) <= 1e-15 * (1.0 + std::abs(c));
    c = next;
    f = fn;
    if (tiny) break;
  }
  return c;
}

}  // namespace

double logistic_l1_loss(double w, double c, std::span<const double> x, std::span<const int> y) {
  if (x.size() != y.size()) throw InvalidArgument("features and labels differ in length");
  return std::abs(w) + kLossScale * data_loss(w, c, x, y);
}

LogisticModel fit_logistic_l1_full(std::span<const double> x, std::span<const int> y) {
  check_xy(x, y);
  double npos = 0.0;
  for (int v : y) npos += v > 0 ? 1.0 : 0.0;
  const double nneg = static_cast<double>(y.size()) - npos;
  const double c0 = std::log(npos / nneg);

  // Subgradient of the smooth part in w at (0, c0).
  double g0 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double yk = y[k] > 0 ? 1.0 : -1.0;
    g0 += -yk * x[k] * sigmoid(-yk * c0);
  }
  g0 *= kLossScale;
  LogisticModel best{0.0, c0, 0.0};
  if (std::abs(g0) <= 1.0) return best;

  const double s = g0 > 0.0 ? -1.0 : 1.0;
  double c_warm = c0;
  auto profile = [&](double u, double* c_out) {
    const double c = optimal_intercept(s * u, c_warm, x, y);
    if (c_out) *c_out = c;
    return u + kLossScale * data_loss(s * u, c, x, y);
  };

  double mean_abs = 0.0;
  for (double v : x) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(x.size());
  double u_prev = 0.0, u_cur = 1.0 / (mean_abs + 1e-300);
  double f_prev = profile(0.0, nullptr), f_cur = profile(u_cur, &c_warm);
  double u_lo = 0.0;
  while (f_cur < f_prev && u_cur < 1e300) {
    u_lo = u_prev;
    u_prev = u_cur;
    f_prev = f_cur;
    u_cur *= 2.0;
    f_cur = profile(u_cur, &c_warm);
  }
  double lo = u_lo, hi = u_cur;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double m1 = hi - inv_phi * (hi - lo), m2 = lo + inv_phi * (hi - lo);
  double f1 = profile(m1, nullptr), f2 = profile(m2, nullptr);
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * (1.0 + hi); ++it) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = profile(m1, nullptr);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = profile(m2, nullptr);
    }
  }
  double c_star = c0;
  const double u_star = 0.5 * (lo + hi);
  const double f_star = profile(u_star, &c_star);
  if (f_star < logistic_l1_loss(0.0, c0, x, y)) best = {s * u_star, c_star, 0.0};
  return best;
}

CrossValidation cross_validate_logistic(const EdgeSample& sample, int folds, std::uint64_t seed) {
  const auto& x = sample.separations;
  const auto& y = sample.labels;
  check_xy(x, y);
  std::vector<std::size_t> pos, neg;
  for (std::size_t k = 0; k < y.size(); ++k) (y[k] > 0 ? pos : neg).push_back(k);
  folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(folds, 0)),
                                                 std::min(pos.size(), neg.size())));
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 samples of each class");

  Rng rng(derive_seed(seed, "cv-folds"));
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[uniform_index(rng, k)]);
  };
  shuffle(pos);
  shuffle(neg);
  std::vector<int> fold_of(y.size());
  for (std::size_t k = 0; k < pos.size(); ++k) fold_of[pos[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  for (std::size_t k = 0; k < neg.size(); ++k) fold_of[neg[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));

  CrossValidation cv;
  cv.out_of_fold.assign(y.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<double> xtr, xte;
    std::vector<int> ytr, yte;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (fold_of[k] == f) {
        xte.push_back(x[k]);
        yte.push_back(y[k]);
        idx.push_back(k);
      } else {
        xtr.push_back(x[k]);
        ytr.push_back(y[k]);
      }
    }
    const LogisticModel m = fit_logistic_l1_full(xtr, ytr);
    const auto p = predict_scores(m, xte);
    for (std::size_t q = 0; q < idx.size(); ++q) cv.out_of_fold[idx[q]] = p[q];
    cv.fold_auc.push_back(auc_roc(p, yte));
  }
  cv.model = fit_logistic_l1_full(x, y);
  cv.model.cv_auc = std::accumulate(cv.fold_auc.begin(), cv.fold_auc.end(), 0.0) / static_cast<double>(folds);
  return cv;
}

LogisticModel fit_logistic_l1(const EdgeSample& sample, int folds, std::uint64_t seed) {
  return cross_validate_logistic(sample, folds, seed).model;
}

std::vector<double> predict_scores(const LogisticModel& model, std::span<const double> separations) {
  std::vector<double> out;
  out.reserve(separations.size());
  for (double s : separations) out.push_back(sigmoid(s * model.w + model.c));
  return out;
}

namespace {

// Indices sorted by score; throws on length mismatch or NaN.
std::vector<std::size_t> order_by_score(std::span<const double> scores, std::span<const int> labels,
                                        bool descending) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw InvalidArgument("NaN score");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  const auto order = order_by_score(scores, labels, false);
  std::int64_t npos = 0, nneg = 0, two_rank_sum = 0;
  for (std::size_t a = 0; a < order.size();) {
    std::size_t b = a;
    while (b + 1 < order.size() && scores[order[b + 1]] == scores[order[a]]) ++b;
    // Average rank of the tie group (1-based) is (a + b + 2) / 2.
    for (std::size_t q = a; q <= b; ++q) {
      if (labels[order[q]] > 0) {
        ++npos;
        two_rank_sum += static_cast<std::int64_t>(a + b + 2);
      } else {
        ++nneg;
      }
    }
    a = b + 1;
  }
  if (npos == 0 || nneg == 0) throw InvalidArgument("AUC needs both classes");
  const std::int64_t two_u = two_rank_sum - npos * (npos + 1);
  return static_cast<double>(two_u) / (2.0 * static_cast<double>(npos) * static_cast<double>(nneg));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  const auto order = order_by_score(scores, labels, true);
  std::int64_t npos = 0;
  for (int l : labels) npos += l > 0 ? 1 : 0;
  if (npos == 0) throw InvalidArgument("average precision needs a positive label");
  std::int64_t tp = 0, seen = 0;
  double ap = 0.0;
  for (std::size_t a = 0; a < order.size();) {
    std::size_t b = a;
    std::int64_t group_tp = 0;
    while (true) {
      group_tp += labels[order[b]] > 0 ? 1 : 0;
      if (b + 1 < order.size() && scores[order[b + 1]] == scores[order[a]])
        ++b;
      else
        break;
    }
    tp += group_tp;
    seen += static_cast<std::int64_t>(b - a + 1);
    if (group_tp > 0)
      ap += (static_cast<double>(group_tp) / static_cast<double>(npos)) *
            (static_cast<double>(tp) / static_cast<double>(seen));
    a = b + 1;
  }
  return ap;
}

}  // namespace dynembed
