#include "dynembed/synth.hpp"

#include <cmath>
#include <string>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

SyntheticNetwork generate_dynamic_sbm(const SbmParams& params) {
  const Index n = params.n;
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (params.tau < 1) throw InvalidArgument("tau must be >= 1");
  if (params.blocks < 1 || params.blocks > n) throw InvalidArgument("blocks must lie in [1, n]");
  if (params.anomalies < 0 || params.anomalies >= n) throw InvalidArgument("anomalies must lie in [0, n)");
  check_probability(params.p_in, "p_in");
  check_probability(params.p_out, "p_out");
  check_probability(params.drift, "drift");
  check_probability(params.persistence, "persistence");

  Rng rng(derive_seed(params.seed, "synth-sbm"));
  const Index regular = n - params.anomalies;
  std::vector<Index> block(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) block[static_cast<std::size_t>(i)] = i * params.blocks / n;
  std::vector<std::vector<Index>> membership;
  std::vector<Index> anomalous;
  for (Index i = regular; i < n; ++i) anomalous.push_back(i);
  auto is_anomalous = [&](Index i) { return i >= regular; };

  // Pair relation: 0 cross-block, 1 same-block, 2 involves an anomalous node.
  auto relation = [&](Index i, Index j) -> char {
    if (is_anomalous(i) || is_anomalous(j)) return 2;
    return block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)] ? 1 : 0;
  };
  auto probability = [&](char rel) { return rel == 0 ? params.p_out : params.p_in; };

  const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<char> prev_link(nn, 0), prev_rel(nn, 0);
  const auto moves = static_cast<Index>(std::llround(params.drift * static_cast<double>(n)));
  std::vector<Snapshot> snapshots;
  snapshots.reserve(static_cast<std::size_t>(params.tau));

  for (Index t = 0; t < params.tau; ++t) {
    if (t > 0 && params.blocks > 1 && regular > 0) {
      std::vector<Index> pool(static_cast<std::size_t>(regular));
      for (Index i = 0; i < regular; ++i) pool[static_cast<std::size_t>(i)] = i;
      const Index m = std::min(moves, regular);
      for (Index k = 0; k < m; ++k) {
        const auto pick = k + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(regular - k)));
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
        const Index v = pool[static_cast<std::size_t>(k)];
        const auto shift = 1 + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(params.blocks - 1)));
        block[static_cast<std::size_t>(v)] = (block[static_cast<std::size_t>(v)] + shift) % params.blocks;
      }
    }
    membership.push_back(block);

    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
      for (Index j = params.directed ? 0 : i + 1; j < n; ++j) {
        if (i == j) continue;
        const auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
        const char rel = relation(i, j);
        bool link;
        if (t > 0 && rel == prev_rel[idx] && uniform01(rng) < params.persistence)
          link = prev_link[idx] != 0;
        else
          link = uniform01(rng) < probability(rel);
        prev_link[idx] = link ? 1 : 0;
        prev_rel[idx] = rel;
        if (link) edges.push_back({i, j, 1.0});
      }
    }
    snapshots.emplace_back(n, std::move(edges), params.directed);
  }

  std::vector<NodeLabel> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels.push_back("n" + std::to_string(i));
  SyntheticNetwork out{DynamicNetwork(std::move(labels), std::move(snapshots), params.directed),
                       std::move(membership), std::move(anomalous)};
  out.network.metadata["generator"] = "dynamic-sbm";
  out.network.metadata["seed"] = std::to_string(params.seed);
  return out;
}

SyntheticNetwork generate_dynamic_er(Index n, Index tau, double p, std::uint64_t seed, bool directed) {
  SbmParams params;
  params.n = n;
  params.tau = tau;
  params.blocks = 1;
  params.p_in = p;
  params.p_out = p;
  params.drift = 0.0;
  params.persistence = 0.0;
  params.directed = directed;
  params.seed = seed;
  auto out = generate_dynamic_sbm(params);
  out.network.metadata["generator"] = "dynamic-er";
  return out;
}

double sbm_density(const SbmParams& params) {
  const double n = static_cast<double>(params.n);
  const double s = n / static_cast<double>(params.blocks);
  const double total = n * (n - 1.0) / 2.0;
  const double within = static_cast<double>(params.blocks) * s * (s - 1.0) / 2.0;
  return (params.p_in * within + params.p_out * (total - within)) / total;
}

}  // namespace dynembed
