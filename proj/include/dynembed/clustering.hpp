#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dynembed/sparse_matrix.hpp"

namespace dynembed {

/// k centroids (rows) with decayed member masses.
struct ClusterState {
  Eigen::MatrixXd centroids;
  Eigen::VectorXd counts;
  double alpha = 0.5;

  Index k() const noexcept { return centroids.rows(); }
  Index dim() const noexcept { return centroids.cols(); }
};

struct KMeansResult {
  ClusterState state;
  std::vector<Index> assignment;
  /// Sum of squared distances to the assigned centroid after each iteration.
  std::vector<double> objective;
  int iterations = 0;
};

/// Lloyd iteration from k-means++ seeding on the rows of `points`. Stops once
/// assignments are stable or after max_iter iterations. Empty clusters keep
/// their previous centroid. Throws InvalidArgument when k exceeds the number
/// of distinct points.
KMeansResult kmeans(const Eigen::MatrixXd& points, Index k, int max_iter = 300, std::uint64_t seed = 0,
                    double alpha = 0.5);

/// c = (alpha c0 m0 + sum v') / (alpha m0 + m'); the mass becomes alpha m0 + m'.
ClusterState streaming_update(const ClusterState& state, Index cluster, const Eigen::MatrixXd& new_points);

/// Index of the nearest centroid for every row of `points` (first on ties).
std::vector<Index> nearest_centroid(const ClusterState& state, const Eigen::MatrixXd& points);

/// Assigns every row of `points` to its nearest centroid, then applies one
/// streaming_update per receiving cluster.
ClusterState absorb(const ClusterState& state, const Eigen::MatrixXd& points);

/// Distance from every row of `points` to the closest centroid.
std::vector<double> anomaly_scores(const ClusterState& state, const Eigen::MatrixXd& points);

/// score > threshold.
std::vector<bool> classify_anomalies(std::span<const double> scores, double threshold);

/// Linear-interpolated quantile (q in [0, 1]) of `scores`; the default
/// anomaly threshold is quantile 0.95 of the training scores.
double score_quantile(std::span<const double> scores, double q = 0.95);

}  // namespace dynembed
