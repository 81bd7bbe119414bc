#include "dynembed/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

namespace {

void check_state(const ClusterState& s) {
  if (s.k() < 1) throw InvalidArgument("cluster state has no centroids");
  if (s.counts.size() != s.k()) throw InvalidArgument("cluster state counts do not match centroids");
}

Index count_distinct_rows(const Eigen::MatrixXd& points) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(points.cols()));
    for (Index j = 0; j < points.cols(); ++j) r[static_cast<std::size_t>(j)] = points(i, j);
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<Index>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

double assign_all(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<Index>& out) {
  double objective = 0.0;
  out.resize(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out[static_cast<std::size_t>(i)] = best;
    objective += best_d;
  }
  return objective;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, Index k, int max_iter, std::uint64_t seed, double alpha) {
  const Index n = points.rows();
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (!points.allFinite()) throw InvalidArgument("non-finite point coordinates");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("decay alpha must lie in [0, 1]");
  const Index distinct = count_distinct_rows(points);
  if (k > distinct)
    throw InvalidArgument("k=" + std::to_string(k) + " exceeds the " + std::to_string(distinct) + " distinct points");

  // k-means++ seeding.
  Rng rng(derive_seed(seed, "kmeans"));
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    double target = uniform01(rng) * total;
    Index pick = -1;
    for (Index i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
  }

  KMeansResult result;
  std::vector<Index> assignment;
  assign_all(points, centroids, assignment);
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
      counts[assignment[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Index c = 0; c < k; ++c)
      if (counts[c] > 0.0) centroids.row(c) = sums.row(c) / counts[c];
    std::vector<Index> next;
    result.objective.push_back(assign_all(points, centroids, next));
    result.iterations = it;
    const bool stable = next == assignment;
    assignment = std::move(next);
    if (stable) break;
  }
  result.state.centroids = centroids;
  result.state.counts = Eigen::VectorXd::Zero(k);
  for (Index c : assignment) result.state.counts[c] += 1.0;
  result.state.alpha = alpha;
  result.assignment = std::move(assignment);
  spdlog::debug("kmeans: k={} converged after {} iterations", k, result.iterations);
  return result;
}

ClusterState streaming_update(const ClusterState& state, Index cluster, const Eigen::MatrixXd& new_points) {
  check_state(state);
  if (cluster < 0 || cluster >= state.k()) throw InvalidArgument("cluster id out of range");
  if (new_points.rows() < 1) throw InvalidArgument("streaming update needs at least one point");
  if (new_points.cols() != state.dim()) throw InvalidArgument("point dimension does not match centroids");
  const double mass = state.alpha * state.counts[cluster] + static_cast<double>(new_points.rows());
  if (!(mass > 0.0)) throw InvalidArgument("decayed cluster mass is zero");
  ClusterState out = state;
  const Eigen::RowVectorXd sum = new_points.colwise().sum();
  out.centroids.row(cluster) = (state.alpha * state.counts[cluster] * state.centroids.row(cluster) + sum) / mass;
  out.counts[cluster] = mass;
  return out;
}

std::vector<Index> nearest_centroid(const ClusterState& state, const Eigen::MatrixXd& points) {
  check_state(state);
  if (points.cols() != state.dim()) throw InvalidArgument("point dimension does not match centroids");
  std::vector<Index> out;
  assign_all(points, state.centroids, out);
  return out;
}

ClusterState absorb(const ClusterState& state, const Eigen::MatrixXd& points) {
  const auto assignment = nearest_centroid(state, points);
  ClusterState out = state;
  for (Index c = 0; c < state.k(); ++c) {
    std::vector<Index> rows;
    for (Index i = 0; i < points.rows(); ++i)
      if (assignment[static_cast<std::size_t>(i)] == c) rows.push_back(i);
    if (rows.empty()) continue;
    Eigen::MatrixXd batch(static_cast<Index>(rows.size()), points.cols());
    for (std::size_t q = 0; q < rows.size(); ++q) batch.row(static_cast<Index>(q)) = points.row(rows[q]);
    out = streaming_update(out, c, batch);
  }
  return out;
}

std::vector<double> anomaly_scores(const ClusterState& state, const Eigen::MatrixXd& points) {
  check_state(state);
  if (points.cols() != state.dim()) throw InvalidArgument("point dimension does not match centroids");
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < state.k(); ++c) best = std::min(best, (points.row(i) - state.centroids.row(c)).norm());
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<bool> classify_anomalies(std::span<const double> scores, double threshold) {
  std::vector<bool> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s > threshold);
  return out;
}

double score_quantile(std::span<const double> scores, double q) {
  if (scores.empty()) throw InvalidArgument("no scores");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile must lie in [0, 1]");
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

}  // namespace dynembed
