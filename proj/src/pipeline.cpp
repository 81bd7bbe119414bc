#include "dynembed/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

std::string to_string(Method m) {
  switch (m) {
    case Method::DynACPD:
      return "dynacpd";
    case Method::DynAOCPD:
      return "dynaocpd";
    case Method::AdjLast:
      return "adj_last";
    case Method::ResLast:
      return "res_last";
    case Method::AdjWt:
      return "adj_wt";
    case Method::ResWt:
      return "res_wt";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::DynACPD, Method::DynAOCPD, Method::AdjLast, Method::ResLast, Method::AdjWt, Method::ResWt})
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown method '" + name + "'");
}

namespace {

nlohmann::json weights_json(const WeightSpec& w) {
  nlohmann::json j{{"scheme", to_string(w.scheme)}, {"parameter", w.parameter}};
  if (w.scheme == WeightScheme::Explicit) j["values"] = w.values;
  return j;
}

std::string init_name(AlsInit init) {
  switch (init) {
    case AlsInit::Spectral:
      return "spectral";
    case AlsInit::Random:
      return "random";
    case AlsInit::Provided:
      return "provided";
  }
  return "?";
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json metrics = nlohmann::json::array();
  for (auto m : cfg.metrics) metrics.push_back(to_string(m));
  return {
      {"datasets", cfg.datasets},
      {"directed", cfg.directed},
      {"method", to_string(cfg.method)},
      {"d", cfg.d},
      {"metrics", metrics},
      {"pre_weights", weights_json(cfg.pre_weights)},
      {"post_weights", weights_json(cfg.post_weights.value_or(cfg.pre_weights))},
      {"adjacency", to_string(cfg.adjacency)},
      {"katz_omega", cfg.katz_omega},
      {"katz_fraction", cfg.katz_fraction ? nlohmann::json(*cfg.katz_fraction) : nlohmann::json(nullptr)},
      {"teleport", cfg.teleport},
      {"teleport_epsilon", cfg.teleport_epsilon},
      {"baseline_sigma", cfg.baseline_sigma},
      {"normalize", cfg.normalize},
      {"max_sweeps", cfg.max_sweeps},
      {"rel_tol", cfg.rel_tol},
      {"init", init_name(cfg.init)},
      {"seed", cfg.seed},
      {"n_pos", cfg.n_pos},
      {"folds", cfg.folds},
      {"k", cfg.k},
      {"alpha", cfg.alpha},
      {"threshold", cfg.threshold ? nlohmann::json(*cfg.threshold) : nlohmann::json(nullptr)},
      {"threshold_quantile", cfg.threshold_quantile},
      {"out_dir", cfg.out_dir},
      {"reference_mode", cfg.reference_mode},
  };
}

DynEmbedConfig dyn_embed_config(const RunConfig& cfg) {
  DynEmbedConfig c;
  c.d = cfg.d;
  c.pre_weights = cfg.pre_weights;
  c.post_weights = cfg.post_weights;
  c.decomposition = cfg.method == Method::DynAOCPD ? Decomposition::OCPD : Decomposition::CPD;
  c.adjacency = cfg.adjacency;
  c.katz_omega = cfg.katz_omega;
  c.katz_fraction = cfg.katz_fraction;
  c.stationary.teleport = cfg.teleport;
  c.stationary.teleport_epsilon = cfg.teleport_epsilon;
  c.als.max_sweeps = cfg.max_sweeps;
  c.als.rel_tol = cfg.rel_tol;
  c.als.init = cfg.init;
  c.als.seed = derive_seed(cfg.seed, "als");
  return c;
}

EmbeddingRun compute_embedding(const DynamicNetwork& net, const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  EmbeddingRun run;
  run.details["method"] = to_string(cfg.method);
  run.details["nodes"] = net.node_count();
  run.details["time_steps"] = net.time_steps();
  if (cfg.method == Method::DynACPD || cfg.method == Method::DynAOCPD) {
    DynEmbedResult r = dyn_embed(net, dyn_embed_config(cfg));
    run.embedding = r.embedding;
    run.details["rank"] = r.model.rank();
    run.details["fit"] = r.model.fit;
    run.details["sweeps"] = r.model.sweeps;
    run.details["converged"] = r.model.converged;
    run.details["lambdas"] = std::vector<double>(r.model.lambdas.begin(), r.model.lambdas.end());
    run.details["selected"] = r.selected;
    run.details["sigma"] = std::vector<double>(r.sigma.begin(), r.sigma.end());
    run.details["pre_weights"] = std::vector<double>(r.pre_weights.begin(), r.pre_weights.end());
    run.details["post_weights"] = std::vector<double>(r.post_weights.begin(), r.post_weights.end());
    if (cfg.adjacency == AdjacencyVariant::Katz) run.details["katz_omega"] = r.katz_omega;
    run.tensor = std::move(r);
  } else {
    Baseline b = Baseline::AdjLast;
    if (cfg.method == Method::ResLast) b = Baseline::ResLast;
    if (cfg.method == Method::AdjWt) b = Baseline::AdjWt;
    if (cfg.method == Method::ResWt) b = Baseline::ResWt;
    EigenOptions opts;
    opts.seed = derive_seed(cfg.seed, "eigensolver");
    run.embedding = baseline_embedding(net, b, cfg.d, cfg.baseline_sigma, opts);
  }
  if (cfg.normalize) {
    for (Index i = 0; i < run.embedding.rows(); ++i) {
      const double nrm = run.embedding.row(i).norm();
      if (nrm > 0.0) run.embedding.row(i) /= nrm;
    }
  }
  run.timing_ms = cfg.reference_mode ? 0.0 : elapsed_ms(start);
  return run;
}

std::vector<LinkPredRecord> run_link_prediction(const DynamicNetwork& net, const RunConfig& cfg,
                                                nlohmann::json* embedding_details) {
  const Index tau = net.time_steps();
  if (tau < 2) throw InvalidArgument("link prediction needs at least 2 snapshots (one is held out), got " +
                                     std::to_string(tau));
  const auto start = std::chrono::steady_clock::now();
  const DynamicNetwork train = net.slice(0, tau - 1);
  const EmbeddingRun emb = compute_embedding(train, cfg);
  if (embedding_details) *embedding_details = emb.details;
  const double embed_ms = elapsed_ms(start);

  const SparseMatrix target = adjacency_matrix(net.snapshot(tau - 1));
  Index n_pos = cfg.n_pos;
  if (n_pos == 0) {
    Index links = 0;
    target.for_each([&](Index i, Index j, double) {
      if (i != j && (net.directed() || i < j)) ++links;
    });
    const Index n = net.node_count();
    const Index pairs = net.directed() ? n * (n - 1) : n * (n - 1) / 2;
    n_pos = std::min(links, pairs - links);
  }

  std::vector<LinkPredRecord> out;
  for (Separation metric : cfg.metrics) {
    const auto eval_start = std::chrono::steady_clock::now();
    LinkPredRecord r;
    r.method = to_string(cfg.method);
    r.metric = metric;
    r.d = cfg.d;
    r.seed = cfg.seed;
    r.sample = sample_training_set(target, net.directed(), emb.embedding, metric, n_pos, cfg.seed);
    r.cv = cross_validate_logistic(r.sample, cfg.folds, derive_seed(cfg.seed, "cv"));
    r.auc = auc_roc(r.cv.out_of_fold, r.sample.labels);
    r.ap = average_precision(r.cv.out_of_fold, r.sample.labels);
    r.timing_ms = cfg.reference_mode ? 0.0 : embed_ms + elapsed_ms(eval_start);
    spdlog::info("{} {} d={}: AP {:.4f} AUC {:.4f}", r.method, to_string(metric), r.d, r.ap, r.auc);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json to_json(const LinkPredRecord& r, bool reference_mode) {
  return {
      {"method", r.method},
      {"metric", to_string(r.metric)},
      {"d", r.d},
      {"AP", r.ap},
      {"AUC", r.auc},
      {"cv_auc", r.cv.model.cv_auc},
      {"w", r.cv.model.w},
      {"c", r.cv.model.c},
      {"samples", r.sample.labels.size()},
      {"seed", r.seed},
      {"timing_ms", reference_mode ? 0.0 : r.timing_ms},
  };
}

ClusterRun run_clustering(const Embedding& emb, const RunConfig& cfg) {
  ClusterRun run;
  run.kmeans = kmeans(emb, cfg.k, 300, derive_seed(cfg.seed, "kmeans"), cfg.alpha);
  run.scores = anomaly_scores(run.kmeans.state, emb);
  run.threshold = cfg.threshold.value_or(score_quantile(run.scores, cfg.threshold_quantile));
  run.anomalous = classify_anomalies(run.scores, run.threshold);
  return run;
}

}  // namespace dynembed
