#pragma once

#include <cstdint>
#include <vector>

#include "dynembed/graph.hpp"

namespace dynembed {

/// Dynamic stochastic block model.
struct SbmParams {
  Index n = 100;
  Index tau = 8;
  Index blocks = 2;
  double p_in = 0.2;
  double p_out = 0.01;
  /// Fraction of nodes that move to another block before each slice after
  /// the first (rounded to the nearest count).
  double drift = 0.05;
  /// Probability that a pair keeps its link state from the previous slice
  /// when its same-block / cross-block relation did not change; otherwise
  /// the pair is redrawn. 0 draws every slice independently.
  double persistence = 0.0;
  /// Nodes (the last `anomalies` indices) that ignore the block structure
  /// and link to every other node with probability p_in in every slice.
  Index anomalies = 0;
  bool directed = false;
  std::uint64_t seed = 0;
};

struct SyntheticNetwork {
  DynamicNetwork network;
  /// membership[t][i] is the block of node i in slice t.
  std::vector<std::vector<Index>> membership;
  std::vector<Index> anomalous_nodes;
};

/// Node labels are "n0", "n1", ...; all randomness derives from params.seed.
/// Throws InvalidArgument for probabilities outside [0, 1], drift outside
/// [0, 1], blocks outside [1, n] or anomalies outside [0, n).
SyntheticNetwork generate_dynamic_sbm(const SbmParams& params);

/// Erdos-Renyi slices with link probability p, redrawn independently in
/// every slice (an SBM with one block and no persistence).
SyntheticNetwork generate_dynamic_er(Index n, Index tau, double p, std::uint64_t seed, bool directed = false);

/// Link density of the SBM: expected links per slice / number of node pairs,
/// for equal-sized blocks.
double sbm_density(const SbmParams& params);

}  // namespace dynembed
