#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynembed/clustering.hpp"
#include "dynembed/dyn_embed.hpp"
#include "dynembed/linkpred.hpp"

namespace dynembed {

enum class Method { DynACPD, DynAOCPD, AdjLast, ResLast, AdjWt, ResWt };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Everything one command needs. Documented sweep values are
/// d in {8, 16, 32, 64, 128} and Gaussian sigma in {8, 16, 32}; any d >= 1 works.
struct RunConfig {
  std::vector<std::string> datasets;
  bool directed = false;
  Method method = Method::DynACPD;
  Index d = 16;
  std::vector<Separation> metrics{Separation::L2, Separation::Hadamard};
  WeightSpec pre_weights;
  std::optional<WeightSpec> post_weights;
  AdjacencyVariant adjacency = AdjacencyVariant::Raw;
  double katz_omega = 0.0;
  /// Katz parameter as a fraction of the admissible bound (overrides katz_omega).
  std::optional<double> katz_fraction;
  bool teleport = false;
  double teleport_epsilon = 1e-3;
  /// Gaussian sigma of the convolved baselines.
  double baseline_sigma = 8.0;
  /// Scale every embedding row to unit length (zero rows stay zero).
  bool normalize = false;
  int max_sweeps = 500;
  double rel_tol = 1e-10;
  AlsInit init = AlsInit::Spectral;
  std::uint64_t seed = 0;
  /// Positive links sampled from the held-out slice; 0 takes every link.
  Index n_pos = 0;
  int folds = 5;
  Index k = 2;
  double alpha = 0.5;
  std::optional<double> threshold;
  double threshold_quantile = 0.95;
  std::string out_dir = "out";
  /// Zero all timing fields so repeated runs are byte-identical.
  bool reference_mode = false;
};

/// Full effective configuration, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

DynEmbedConfig dyn_embed_config(const RunConfig& cfg);

struct EmbeddingRun {
  Embedding embedding;
  /// Method-specific details (fit, sigma, selected components, ...).
  nlohmann::json details;
  /// Set for the tensor methods.
  std::optional<DynEmbedResult> tensor;
  double timing_ms = 0.0;
};

EmbeddingRun compute_embedding(const DynamicNetwork& net, const RunConfig& cfg);

struct LinkPredRecord {
  std::string method;
  Separation metric = Separation::L2;
  Index d = 0;
  double ap = 0.0;
  double auc = 0.0;
  std::uint64_t seed = 0;
  double timing_ms = 0.0;
  CrossValidation cv;
  EdgeSample sample;
};

/// Embeds slices 1..tau-1, samples links / non-links of slice tau, and
/// reports AP and AUC of the out-of-fold classifier probabilities, one record
/// per metric. Throws InvalidArgument when tau < 2.
std::vector<LinkPredRecord> run_link_prediction(const DynamicNetwork& net, const RunConfig& cfg,
                                                nlohmann::json* embedding_details = nullptr);

nlohmann::json to_json(const LinkPredRecord& r, bool reference_mode);

struct ClusterRun {
  KMeansResult kmeans;
  std::vector<double> scores;
  double threshold = 0.0;
  std::vector<bool> anomalous;
};

/// k-means on the embedding rows, anomaly scores against the centroids, and
/// the threshold (cfg.threshold or the cfg.threshold_quantile score quantile).
ClusterRun run_clustering(const Embedding& emb, const RunConfig& cfg);

}  // namespace dynembed
