#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynembed/graph.hpp"
#include "dynembed/spectral.hpp"
#include "dynembed/tensor.hpp"

namespace dynembed {

enum class WeightScheme { Uniform, Exponential, Gaussian, Explicit };

/// How to build temporal weights once tau is known.
struct WeightSpec {
  WeightScheme scheme = WeightScheme::Uniform;
  /// alpha for Exponential, sigma for Gaussian.
  double parameter = 0.0;
  /// Values for Explicit (length tau).
  std::vector<double> values;
};

/// Temporal weights w_1..w_tau, normalized so max w_t = 1.
struct TemporalWeights {
  WeightSpec spec;
  Eigen::VectorXd values;
};

/// Uniform: w_t = 1. Exponential: exp(-alpha |tau - t|). Gaussian:
/// exp(-(tau - t)^2 / (2 sigma^2)). Explicit: values / max(values).
/// Throws InvalidArgument for alpha, sigma <= 0, negative or all-zero
/// explicit values, or a length mismatch.
TemporalWeights make_weights(const WeightSpec& spec, Index tau);

std::string to_string(WeightScheme scheme);
WeightScheme parse_weight_scheme(const std::string& name);

/// Backward recurrence G_tau' = w_tau G_tau, G_t' = w_t G_t + (1 - w_t) G_{t+1}'
/// on the link weights.
DynamicNetwork precondition(const DynamicNetwork& net, const TemporalWeights& w);

enum class Decomposition { CPD, OCPD };
enum class AdjacencyVariant { Raw, Symmetrized, Katz };

std::string to_string(Decomposition d);
std::string to_string(AdjacencyVariant v);
AdjacencyVariant parse_adjacency_variant(const std::string& name);

/// Per-slice matrices of `net` under the given adjacency variant.
std::vector<SparseMatrix> slice_matrices(const DynamicNetwork& net, AdjacencyVariant variant, double katz_omega = 0.0,
                                         const StationaryOptions& stationary = {});

struct DynEmbedConfig {
  Index d = 16;
  WeightSpec pre_weights;
  /// Defaults to pre_weights.
  std::optional<WeightSpec> post_weights;
  Decomposition decomposition = Decomposition::CPD;
  AdjacencyVariant adjacency = AdjacencyVariant::Raw;
  double katz_omega = 0.0;
  /// When set, omega = katz_fraction * min_t katz_omega_limit(slice t),
  /// overriding katz_omega.
  std::optional<double> katz_fraction;
  StationaryOptions stationary;
  /// rank is overridden by decomposition_rank (default min(2d, n)).
  AlsConfig als;
  std::optional<Index> decomposition_rank;
};

struct DynEmbedResult {
  Embedding embedding;
  /// Full decomposition before selection.
  CPModel model;
  /// sigma_i = sqrt(lambda_i) <w_hat, c_i> for every component of `model`.
  Eigen::VectorXd sigma_all;
  /// Indices into `model` of the selected components, by |sigma| descending.
  std::vector<Index> selected;
  /// sigma of the selected components (signed).
  Eigen::VectorXd sigma;
  Eigen::VectorXd pre_weights;
  Eigen::VectorXd post_weights;
  /// Katz parameter actually used (0 unless the Katz variant is selected).
  double katz_omega = 0.0;
};

/// sqrt(lambda_i) <w_hat, c_i> per component.
Eigen::VectorXd weighted_modes(const CPModel& model, const Eigen::VectorXd& post_weights);

/// Precondition, build slices, decompose at rank min(2d, n), keep the d
/// components of largest |sigma|; column j of the embedding is sigma_j b_j.
DynEmbedResult dyn_embed(const DynamicNetwork& net, const DynEmbedConfig& cfg);
DynEmbedResult dynacpd_embed(const DynamicNetwork& net, DynEmbedConfig cfg);
DynEmbedResult dynaocpd_embed(const DynamicNetwork& net, DynEmbedConfig cfg);

/// sum_t w_t M_t / sum_t w_t.
SparseMatrix convolve_snapshots(std::span<const SparseMatrix> slices, const TemporalWeights& w);

enum class Baseline { AdjLast, ResLast, AdjWt, ResWt };

std::string to_string(Baseline b);

/// Static baselines: adjacency / resistance embedding of the last slice or of
/// the Gaussian-convolved slices (sigma = gaussian_sigma). Directed slices are
/// symmetrized as (A + A^T) / 2. Resistance embeddings that need more
/// dimensions than the graph has nonzero Laplacian eigenvalues are padded
/// with zero columns.
Embedding baseline_embedding(const DynamicNetwork& net, Baseline baseline, Index d, double gaussian_sigma = 8.0,
                             const EigenOptions& opts = {});

}  // namespace dynembed
