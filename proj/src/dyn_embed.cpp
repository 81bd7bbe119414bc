#include "dynembed/dyn_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"

namespace dynembed {

TemporalWeights make_weights(const WeightSpec& spec, Index tau) {
  if (tau < 1) throw InvalidArgument("temporal weights need tau >= 1");
  TemporalWeights w{spec, Eigen::VectorXd(tau)};
  const double last = static_cast<double>(tau);
  switch (spec.scheme) {
    case WeightScheme::Uniform:
      w.values.setOnes();
      break;
    case WeightScheme::Exponential:
      if (!(spec.parameter > 0.0) || !std::isfinite(spec.parameter))
        throw InvalidArgument("exponential weights need alpha > 0");
      for (Index t = 0; t < tau; ++t) w.values[t] = std::exp(-spec.parameter * (last - static_cast<double>(t + 1)));
      break;
    case WeightScheme::Gaussian:
      if (!(spec.parameter > 0.0) || !std::isfinite(spec.parameter))
        throw InvalidArgument("gaussian weights need sigma > 0");
      for (Index t = 0; t < tau; ++t) {
        const double gap = last - static_cast<double>(t + 1);
        w.values[t] = std::exp(-gap * gap / (2.0 * spec.parameter * spec.parameter));
      }
      break;
    case WeightScheme::Explicit: {
      if (static_cast<Index>(spec.values.size()) != tau)
        throw InvalidArgument("explicit weights have length " + std::to_string(spec.values.size()) + ", expected " +
                              std::to_string(tau));
      double mx = 0.0;
      for (double v : spec.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("explicit weights must be finite and >= 0");
        mx = std::max(mx, v);
      }
      if (mx == 0.0) throw InvalidArgument("explicit weights are all zero");
      for (Index t = 0; t < tau; ++t) w.values[t] = spec.values[static_cast<std::size_t>(t)] / mx;
      break;
    }
  }
  return w;
}

std::string to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::Uniform:
      return "uniform";
    case WeightScheme::Exponential:
      return "exponential";
    case WeightScheme::Gaussian:
      return "gaussian";
    case WeightScheme::Explicit:
      return "explicit";
  }
  return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
  if (name == "uniform") return WeightScheme::Uniform;
  if (name == "exponential") return WeightScheme::Exponential;
  if (name == "gaussian") return WeightScheme::Gaussian;
  if (name == "explicit") return WeightScheme::Explicit;
  throw InvalidArgument("unknown weight scheme '" + name + "'");
}

DynamicNetwork precondition(const DynamicNetwork& net, const TemporalWeights& w) {
  const Index tau = net.time_steps();
  if (w.values.size() != tau)
    throw InvalidArgument("weights have length " + std::to_string(w.values.size()) + ", network has " +
                          std::to_string(tau) + " slices");
  std::vector<SparseMatrix> out(static_cast<std::size_t>(tau));
  out[static_cast<std::size_t>(tau - 1)] = w.values[tau - 1] * adjacency_matrix(net.snapshot(tau - 1));
  for (Index t = tau - 2; t >= 0; --t) {
    const double wt = w.values[t];
    out[static_cast<std::size_t>(t)] =
        wt * adjacency_matrix(net.snapshot(t)) + (1.0 - wt) * out[static_cast<std::size_t>(t + 1)];
  }
  std::vector<Snapshot> snaps;
  snaps.reserve(out.size());
  for (const auto& m : out) snaps.push_back(Snapshot::from_matrix(m, net.directed()));
  DynamicNetwork result(net.labels(), std::move(snaps), net.directed());
  result.metadata = net.metadata;
  return result;
}

std::string to_string(Decomposition d) { return d == Decomposition::CPD ? "cpd" : "ocpd"; }

std::string to_string(AdjacencyVariant v) {
  switch (v) {
    case AdjacencyVariant::Raw:
      return "raw";
    case AdjacencyVariant::Symmetrized:
      return "symmetrized";
    case AdjacencyVariant::Katz:
      return "katz";
  }
  return "?";
}

AdjacencyVariant parse_adjacency_variant(const std::string& name) {
  if (name == "raw") return AdjacencyVariant::Raw;
  if (name == "symmetrized") return AdjacencyVariant::Symmetrized;
  if (name == "katz") return AdjacencyVariant::Katz;
  throw InvalidArgument("unknown adjacency variant '" + name + "'");
}

std::vector<SparseMatrix> slice_matrices(const DynamicNetwork& net, AdjacencyVariant variant, double katz_omega,
                                         const StationaryOptions& stationary) {
  std::vector<SparseMatrix> out;
  out.reserve(static_cast<std::size_t>(net.time_steps()));
  for (const auto& s : net.snapshots()) {
    const SparseMatrix a = adjacency_matrix(s);
    switch (variant) {
      case AdjacencyVariant::Raw:
        out.push_back(a);
        break;
      case AdjacencyVariant::Symmetrized:
        out.push_back(symmetrized_adjacency(a, stationary));
        break;
      case AdjacencyVariant::Katz:
        out.push_back(katz_adjacency(a, katz_omega));
        break;
    }
  }
  return out;
}

Eigen::VectorXd weighted_modes(const CPModel& model, const Eigen::VectorXd& post_weights) {
  if (post_weights.size() != model.c.rows()) throw InvalidArgument("post weights do not match the time mode");
  Eigen::VectorXd sigma(model.rank());
  for (Index i = 0; i < model.rank(); ++i)
    sigma[i] = std::sqrt(std::max(0.0, model.lambdas[i])) * post_weights.dot(model.c.col(i));
  return sigma;
}

DynEmbedResult dyn_embed(const DynamicNetwork& net, const DynEmbedConfig& cfg) {
  const Index n = net.node_count();
  const Index tau = net.time_steps();
  if (cfg.d < 1) throw InvalidArgument("embedding dimension must be >= 1");
  const Index rank = cfg.decomposition_rank.value_or(std::min<Index>(2 * cfg.d, n));
  if (cfg.d > rank)
    throw InvalidArgument("d=" + std::to_string(cfg.d) + " exceeds decomposition rank " + std::to_string(rank));

  DynEmbedResult result;
  const TemporalWeights pre = make_weights(cfg.pre_weights, tau);
  const TemporalWeights post = make_weights(cfg.post_weights.value_or(cfg.pre_weights), tau);
  result.pre_weights = pre.values;
  result.post_weights = post.values;

  const DynamicNetwork conditioned = precondition(net, pre);
  double omega = cfg.katz_omega;
  if (cfg.adjacency == AdjacencyVariant::Katz && cfg.katz_fraction) {
    const double f = *cfg.katz_fraction;
    if (!(f >= 0.0 && f < 1.0)) throw InvalidArgument("katz fraction must lie in [0, 1)");
    double limit = std::numeric_limits<double>::infinity();
    for (const auto& s : conditioned.snapshots()) {
      const SparseMatrix a = adjacency_matrix(s);
      if (a.nnz() > 0) limit = std::min(limit, katz_omega_limit(a));
    }
    omega = std::isfinite(limit) ? f * limit : 0.0;
  }
  if (cfg.adjacency == AdjacencyVariant::Katz) result.katz_omega = omega;
  const auto slices = slice_matrices(conditioned, cfg.adjacency, omega, cfg.stationary);
  const SparseTensor3 z = SparseTensor3::from_snapshots(slices);

  AlsConfig als = cfg.als;
  als.rank = rank;
  result.model = cfg.decomposition == Decomposition::CPD ? cp_als(z, als) : ocp_als(z, als);
  spdlog::info("{} rank {}: fit {:.6f} after {} sweeps", to_string(cfg.decomposition), rank, result.model.fit,
               result.model.sweeps);

  result.sigma_all = weighted_modes(result.model, post.values);
  std::vector<Index> order(static_cast<std::size_t>(rank));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(result.sigma_all[a]) > std::abs(result.sigma_all[b]);
  });
  result.selected.assign(order.begin(), order.begin() + cfg.d);
  result.sigma.resize(cfg.d);
  result.embedding.resize(n, cfg.d);
  for (Index j = 0; j < cfg.d; ++j) {
    const Index src = result.selected[static_cast<std::size_t>(j)];
    result.sigma[j] = result.sigma_all[src];
    result.embedding.col(j) = result.sigma[j] * result.model.b.col(src);
  }
  return result;
}

DynEmbedResult dynacpd_embed(const DynamicNetwork& net, DynEmbedConfig cfg) {
  cfg.decomposition = Decomposition::CPD;
  return dyn_embed(net, cfg);
}

DynEmbedResult dynaocpd_embed(const DynamicNetwork& net, DynEmbedConfig cfg) {
  cfg.decomposition = Decomposition::OCPD;
  return dyn_embed(net, cfg);
}

SparseMatrix convolve_snapshots(std::span<const SparseMatrix> slices, const TemporalWeights& w) {
  if (slices.empty()) throw InvalidArgument("no slices to convolve");
  if (static_cast<Index>(slices.size()) != w.values.size())
    throw InvalidArgument("weights do not match the number of slices");
  const double total = w.values.sum();
  if (!(total > 0.0)) throw InvalidArgument("convolution weights sum to zero");
  SparseMatrix acc(slices.front().rows(), slices.front().cols());
  for (std::size_t t = 0; t < slices.size(); ++t) {
    const double wt = w.values[static_cast<Index>(t)];
    if (wt != 0.0) acc = acc + wt * slices[t];
  }
  return (1.0 / total) * acc;
}

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::AdjLast:
      return "adj_last";
    case Baseline::ResLast:
      return "res_last";
    case Baseline::AdjWt:
      return "adj_wt";
    case Baseline::ResWt:
      return "res_wt";
  }
  return "?";
}

Embedding baseline_embedding(const DynamicNetwork& net, Baseline baseline, Index d, double gaussian_sigma,
                             const EigenOptions& opts) {
  const Index n = net.node_count();
  if (d < 1 || d > n) throw InvalidArgument("baseline embedding needs 1 <= d <= n");
  std::vector<SparseMatrix> slices;
  for (const auto& s : net.snapshots()) {
    SparseMatrix a = adjacency_matrix(s);
    slices.push_back(net.directed() ? a.symmetrized() : a);
  }
  SparseMatrix a;
  if (baseline == Baseline::AdjLast || baseline == Baseline::ResLast) {
    a = slices.back();
  } else {
    const auto w = make_weights({WeightScheme::Gaussian, gaussian_sigma, {}}, net.time_steps());
    a = convolve_snapshots(slices, w);
  }
  if (baseline == Baseline::AdjLast || baseline == Baseline::AdjWt) return adjacency_embedding(a, d, opts);

  const SparseMatrix l = laplacian(a);
  const Index available = n - count_components(l);
  Embedding out = Embedding::Zero(n, d);
  const Index used = std::min(d, available);
  if (used < d)
    spdlog::warn("{}: only {} nonzero Laplacian modes, padding {} columns with zeros", to_string(baseline), available,
                 d - used);
  if (used > 0) out.leftCols(used) = resistance_embedding(l, used, opts);
  return out;
}

}  // namespace dynembed
