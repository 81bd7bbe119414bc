#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynembed/sparse_matrix.hpp"

namespace dynembed {

using NodeLabel = std::string;

struct Edge {
  Index src = 0;
  Index dst = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One time slice over a fixed node set.
///
/// Edges are canonical: sorted by (src, dst), duplicates summed, exact-zero
/// weights dropped. Undirected snapshots store both orientations with equal
/// weight; a self-loop is stored once.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(Index node_count, std::vector<Edge> edges, bool directed);

  /// Every stored nonzero of `m` becomes one edge; `m` is taken verbatim
  /// (an undirected flag is only recorded, no mirroring is applied).
  static Snapshot from_matrix(const SparseMatrix& m, bool directed);

  Index node_count() const noexcept { return node_count_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool directed() const noexcept { return directed_; }
  double total_weight() const;

 private:
  Index node_count_ = 0;
  std::vector<Edge> edges_;
  bool directed_ = false;
};

/// An ordered sequence of snapshots over a common labelled node set. Index t
/// (0-based) is time t+1; the last snapshot is the most recent.
class DynamicNetwork {
 public:
  DynamicNetwork(std::vector<NodeLabel> labels, std::vector<Snapshot> snapshots, bool directed);

  Index node_count() const noexcept { return static_cast<Index>(labels_.size()); }
  Index time_steps() const noexcept { return static_cast<Index>(snapshots_.size()); }
  bool directed() const noexcept { return directed_; }
  const std::vector<NodeLabel>& labels() const noexcept { return labels_; }
  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
  const Snapshot& snapshot(Index t) const { return snapshots_.at(static_cast<std::size_t>(t)); }

  /// Index of a label, or nullopt.
  std::optional<Index> index_of(const NodeLabel& label) const;

  /// Network restricted to snapshots [first, last).
  DynamicNetwork slice(Index first, Index last) const;

  /// Free-form provenance (source file, original time range, ...).
  std::map<std::string, std::string> metadata;

 private:
  std::vector<NodeLabel> labels_;
  std::vector<Snapshot> snapshots_;
  bool directed_ = false;
  std::map<NodeLabel, Index> index_;
};

struct LabeledEdge {
  NodeLabel src;
  NodeLabel dst;
  double weight = 1.0;
};

/// A snapshot as read from disk: explicitly declared nodes plus edges. Nodes
/// that only appear in edges are added implicitly.
struct RawSnapshot {
  std::vector<NodeLabel> nodes;
  std::vector<LabeledEdge> edges;
};

/// Pad every snapshot to the union label set. Labels are indexed in order of
/// first appearance (declared nodes of a snapshot before its edges). Throws
/// InvalidArgument naming the label when one snapshot declares it twice.
DynamicNetwork align_snapshots(std::span<const RawSnapshot> raw, bool directed);

enum class DegreeDirection { Out, In };

SparseMatrix adjacency_matrix(const Snapshot& s);
SparseMatrix degree_matrix(const SparseMatrix& a, DegreeDirection direction);

/// L = D_out - A. Throws InvalidArgument on negative weights.
SparseMatrix laplacian(const SparseMatrix& a);

/// I - D^{-1/2} A D^{-1/2} using out-degrees, with (D^{-1/2})_vv = 0 for
/// isolated v. An isolated node therefore keeps 1 on the diagonal and zeros
/// elsewhere in its row and column.
SparseMatrix normalized_laplacian(const SparseMatrix& a);

/// P_ij = w_ij / sum_k w_ik. Rows without outgoing weight stay zero.
SparseMatrix transition_matrix(const SparseMatrix& a);

struct StationaryOptions {
  double tol = 1e-12;
  int max_iter = 200000;
  /// When true, a reducible chain is regularized with
  /// P' = (1 - eps) P + eps J / n instead of being rejected.
  bool teleport = false;
  double teleport_epsilon = 1e-3;
};

/// Stationary vector of the random walk on `a`, normalized so that
/// sum(phi) equals the total link weight.
///
/// Computed by lazy Perron-Frobenius iteration phi <- (phi + phi P) / 2,
/// which has the same fixed point as phi P = phi but also converges on
/// periodic chains. When the support splits into closed classes without
/// links between them (e.g. a disconnected undirected graph) each class is
/// normalized to its own weight, which gives phi = degree on every
/// undirected graph. Isolated nodes get phi = 0.
///
/// Throws ReducibleChainError when links run between distinct strongly
/// connected classes and teleport is off, ConvergenceError (carrying the
/// final relative residual) when max_iter is exhausted.
Eigen::VectorXd stationary_vector(const SparseMatrix& a, const StationaryOptions& opts = {});

/// 1/2 (Phi P + P^T Phi). Equals `a` on undirected input.
SparseMatrix symmetrized_adjacency(const SparseMatrix& a, const StationaryOptions& opts = {});

/// Phi - 1/2 (Phi P + P^T Phi), or its normalized form
/// I - Phi^{-1/2} (1/2 (Phi P + P^T Phi)) Phi^{-1/2} (zero convention for phi_v = 0).
/// Reduces to laplacian / normalized_laplacian on undirected input.
SparseMatrix symmetric_directed_laplacian(const SparseMatrix& a, bool normalized,
                                          const StationaryOptions& opts = {});

/// Power-iteration estimate of ||A||_2 (exact spectral radius for symmetric A,
/// an upper bound on rho(A) otherwise).
double estimate_spectral_radius(const SparseMatrix& a, int iterations = 100, double rel_tol = 1e-8);

/// Upper bound on the spectral radius of a connected, unweighted, undirected
/// graph in terms of the minimum degree, link count and node count. Returns
/// nullopt when `a` is not such a graph.
std::optional<double> hong_spectral_radius_bound(const SparseMatrix& a);

/// Largest admissible Katz parameter (exclusive): max(0.99 / rho_hat, 1 / hong)
/// where the second term only applies to connected unweighted undirected input.
double katz_omega_limit(const SparseMatrix& a);

enum class KatzMethod { Auto, Series, Solve };

struct KatzOptions {
  KatzMethod method = KatzMethod::Auto;
  int max_terms = 50;
  /// Relative tail tolerance used by Auto to decide whether the truncated
  /// series is accurate enough.
  double tol = 1e-13;
  /// Auto picks the series when nnz(A) * max_terms is below this.
  double series_work_limit = 5e6;
};

/// Katz kernel A_w = sum_{l>=1} w^{l-1} A^l = (1/w)((I - wA)^{-1} - I).
/// w = 0 returns A exactly. Throws KatzBoundError when w >= katz_omega_limit.
SparseMatrix katz_adjacency(const SparseMatrix& a, double omega, const KatzOptions& opts = {});

/// First `terms` terms of the Katz series, no bound checks.
SparseMatrix katz_series(const SparseMatrix& a, double omega, int terms);

/// Katz kernel via the sparse LU solve (I - wA) X = A, no bound checks.
SparseMatrix katz_solve(const SparseMatrix& a, double omega);

/// Number of weakly connected components of the support of `a`
/// (isolated nodes count as components).
Index count_components(const SparseMatrix& a);

/// Component id per node, ids dense in [0, count).
std::vector<Index> component_labels(const SparseMatrix& a);

}  // namespace dynembed
