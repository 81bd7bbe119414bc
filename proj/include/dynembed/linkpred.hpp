#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynembed/spectral.hpp"
#include "dynembed/sparse_matrix.hpp"

namespace dynembed {

enum class Separation { L2, Hadamard };

std::string to_string(Separation s);
Separation parse_separation(const std::string& name);

/// <v_i, v_j>
double hadamard_separation(const Embedding& emb, Index i, Index j);
/// ||v_i - v_j||
double l2_separation(const Embedding& emb, Index i, Index j);
double separation(const Embedding& emb, Index i, Index j, Separation metric);

/// Balanced link / non-link sample. Labels are +1 (link) and -1.
struct EdgeSample {
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<int> labels;
  std::vector<double> separations;
};

/// n_pos links of `target` drawn uniformly without replacement plus n_pos
/// distinct non-links by rejection sampling. Self pairs are excluded; for
/// undirected targets pairs are unordered and reported as (min, max).
/// Throws InvalidArgument when either class has fewer than n_pos candidates.
EdgeSample sample_training_set(const SparseMatrix& target, bool directed, const Embedding& emb, Separation metric,
                               Index n_pos, std::uint64_t seed);

/// Objective |w| + 10 sum_e log(1 + exp(-y_e (x_e w + c))).
double logistic_l1_loss(double w, double c, std::span<const double> x, std::span<const int> y);

struct LogisticModel {
  double w = 0.0;
  double c = 0.0;
  /// Mean held-out AUC over the cross-validation folds.
  double cv_auc = 0.0;
};

/// Exact minimizer of logistic_l1_loss for a scalar feature. w = 0 is taken
/// when the subgradient condition holds there; otherwise golden-section
/// search over w on the correct half-line with c optimized by Newton's
/// method for each w. Throws InvalidArgument unless both classes occur.
LogisticModel fit_logistic_l1_full(std::span<const double> x, std::span<const int> y);

struct CrossValidation {
  LogisticModel model;
  /// Held-out probability of every sample, from the fold that excluded it.
  std::vector<double> out_of_fold;
  std::vector<double> fold_auc;
};

/// Stratified k-fold cross-validation followed by a refit on all data.
/// folds is clamped to the size of the smaller class (>= 2 required).
CrossValidation cross_validate_logistic(const EdgeSample& sample, int folds = 5, std::uint64_t seed = 0);

/// Convenience wrapper returning the refit model with cv_auc filled in.
LogisticModel fit_logistic_l1(const EdgeSample& sample, int folds = 5, std::uint64_t seed = 0);

std::vector<double> predict_scores(const LogisticModel& model, std::span<const double> separations);

/// Mann-Whitney AUC with 1/2 credit for ties. Throws unless both classes occur.
/// Labels are positive when > 0.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

/// Step-interpolated area under the precision-recall curve, evaluated at every
/// distinct score threshold. Throws unless a positive is present.
double average_precision(std::span<const double> scores, std::span<const int> labels);

}  // namespace dynembed
