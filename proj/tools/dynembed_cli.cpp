// dynembed command line: embed, linkpred, cluster, anomaly, synth.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"
#include "dynembed/io.hpp"
#include "dynembed/pipeline.hpp"
#include "dynembed/synth.hpp"

namespace fs = std::filesystem;
using namespace dynembed;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;
constexpr int kExitOther = 1;

struct Options {
  std::vector<std::string> data;
  bool directed = false;
  std::string method = "dynacpd";
  Index d = 16;
  std::vector<std::string> metrics{"l2", "hadamard"};
  std::string pre_scheme = "uniform";
  double pre_param = 0.0;
  std::vector<double> pre_values;
  std::string post_scheme;
  double post_param = 0.0;
  std::vector<double> post_values;
  std::string adjacency = "raw";
  double katz_omega = 0.0;
  std::optional<double> katz_fraction;
  bool teleport = false;
  double teleport_epsilon = 1e-3;
  double baseline_sigma = 8.0;
  bool normalize = false;
  int max_sweeps = 500;
  double rel_tol = 1e-10;
  std::string init = "spectral";
  std::uint64_t seed = 0;
  Index n_pos = 0;
  int folds = 5;
  Index k = 2;
  double alpha = 0.5;
  std::optional<double> threshold;
  double threshold_quantile = 0.95;
  std::string out = "out";
  bool reference_mode = false;
  bool scores = false;
  std::string embedding;
  SbmParams sbm;
};

WeightSpec weight_spec(const std::string& scheme, double param, const std::vector<double>& values) {
  return {parse_weight_scheme(scheme), param, values};
}

AlsInit parse_init(const std::string& name) {
  if (name == "spectral") return AlsInit::Spectral;
  if (name == "random") return AlsInit::Random;
  throw InvalidArgument("unknown ALS init '" + name + "' (expected spectral or random)");
}

RunConfig run_config(const Options& o) {
  RunConfig c;
  c.datasets = o.data;
  c.directed = o.directed;
  c.method = parse_method(o.method);
  if (o.d < 1) throw InvalidArgument("d must be >= 1");
  c.d = o.d;
  c.metrics.clear();
  for (const auto& m : o.metrics) c.metrics.push_back(parse_separation(m));
  if (c.metrics.empty()) throw InvalidArgument("at least one metric is required");
  c.pre_weights = weight_spec(o.pre_scheme, o.pre_param, o.pre_values);
  if (!o.post_scheme.empty()) c.post_weights = weight_spec(o.post_scheme, o.post_param, o.post_values);
  c.adjacency = parse_adjacency_variant(o.adjacency);
  c.katz_omega = o.katz_omega;
  c.katz_fraction = o.katz_fraction;
  c.teleport = o.teleport;
  c.teleport_epsilon = o.teleport_epsilon;
  c.baseline_sigma = o.baseline_sigma;
  c.normalize = o.normalize;
  c.max_sweeps = o.max_sweeps;
  c.rel_tol = o.rel_tol;
  c.init = parse_init(o.init);
  c.seed = o.seed;
  c.n_pos = o.n_pos;
  if (o.folds < 2) throw InvalidArgument("folds must be >= 2");
  c.folds = o.folds;
  c.k = o.k;
  c.alpha = o.alpha;
  c.threshold = o.threshold;
  c.threshold_quantile = o.threshold_quantile;
  c.out_dir = o.out;
  c.reference_mode = o.reference_mode;
  return c;
}

DynamicNetwork load(const RunConfig& cfg) {
  if (cfg.datasets.empty()) throw InvalidArgument("no dataset given (use --data FILE)");
  std::vector<fs::path> files(cfg.datasets.begin(), cfg.datasets.end());
  DynamicNetwork net = load_edge_lists(files, cfg.directed);
  spdlog::info("loaded {} nodes, {} snapshots", net.node_count(), net.time_steps());
  return net;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create '" + cfg.out_dir + "': " + ec.message());
}

nlohmann::json manifest(const std::string& command, const RunConfig& cfg, const DynamicNetwork* net) {
  nlohmann::json m{{"command", command}, {"config", to_json(cfg)}};
  if (net) {
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [key, value] : net->metadata) meta[key] = value;
    m["dataset"] = {{"nodes", net->node_count()}, {"time_steps", net->time_steps()}, {"directed", net->directed()},
                    {"metadata", meta}};
  }
  return m;
}

void write_embedding(const fs::path& path, const Embedding& emb, const std::vector<NodeLabel>& labels) {
  auto out = open_out(path);
  write_embedding_csv(out, emb, labels);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

int cmd_embed(const RunConfig& cfg) {
  const DynamicNetwork net = load(cfg);
  prepare_out(cfg);
  const EmbeddingRun run = compute_embedding(net, cfg);
  const fs::path dir(cfg.out_dir);
  write_embedding(dir / "embedding.csv", run.embedding, net.labels());
  nlohmann::json m = manifest("embed", cfg, &net);
  m["embedding"] = run.details;
  m["timing_ms"] = run.timing_ms;
  if (run.tensor) {
    save_model(run.tensor->model, dir / "model", to_json(cfg));
    m["model_dir"] = "model";
  }
  write_json_file(dir / "manifest.json", m);
  return 0;
}

int cmd_linkpred(const RunConfig& cfg, bool dump_scores) {
  const DynamicNetwork net = load(cfg);
  prepare_out(cfg);
  nlohmann::json details;
  const auto records = run_link_prediction(net, cfg, &details);
  const fs::path dir(cfg.out_dir);
  nlohmann::json report = nlohmann::json::array();
  for (const auto& r : records) {
    report.push_back(to_json(r, cfg.reference_mode));
    if (dump_scores) {
      auto out = open_out(dir / ("scores_" + to_string(r.metric) + ".csv"));
      out << "i,j,separation,probability,label\n";
      for (std::size_t s = 0; s < r.sample.labels.size(); ++s) {
        const auto& [i, j] = r.sample.pairs[s];
        out << net.labels()[static_cast<std::size_t>(i)] << ',' << net.labels()[static_cast<std::size_t>(j)] << ','
            << format_double(r.sample.separations[s]) << ',' << format_double(r.cv.out_of_fold[s]) << ','
            << r.sample.labels[s] << '\n';
      }
    }
  }
  write_json_file(dir / "report.json", report);
  nlohmann::json m = manifest("linkpred", cfg, &net);
  m["embedding"] = details;
  m["held_out_slice"] = net.time_steps();
  write_json_file(dir / "manifest.json", m);
  for (const auto& r : records)
    std::cout << r.method << ' ' << to_string(r.metric) << " d=" << r.d << " AP=" << format_double(r.ap)
              << " AUC=" << format_double(r.auc) << '\n';
  return 0;
}

int cmd_cluster(const RunConfig& cfg, const std::string& embedding_path, const std::string& command) {
  Embedding emb;
  std::vector<NodeLabel> labels;
  nlohmann::json m;
  prepare_out(cfg);
  const fs::path dir(cfg.out_dir);
  if (!embedding_path.empty()) {
    std::ifstream in(embedding_path);
    if (!in) throw IoError("cannot open '" + embedding_path + "'");
    emb = read_embedding_csv(in, &labels);
    m = manifest(command, cfg, nullptr);
    m["embedding_file"] = embedding_path;
  } else {
    const DynamicNetwork net = load(cfg);
    const EmbeddingRun run = compute_embedding(net, cfg);
    emb = run.embedding;
    labels = net.labels();
    write_embedding(dir / "embedding.csv", emb, labels);
    m = manifest(command, cfg, &net);
    m["embedding"] = run.details;
  }
  const ClusterRun run = run_clustering(emb, cfg);
  {
    auto out = open_out(dir / (command == "cluster" ? "clusters.csv" : "anomalies.csv"));
    out << "node,cluster,score,anomalous\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
      out << labels[i] << ',' << run.kmeans.assignment[i] << ',' << format_double(run.scores[i]) << ','
          << (run.anomalous[i] ? 1 : 0) << '\n';
  }
  m["kmeans"] = {{"objective", run.kmeans.objective},
                 {"iterations", run.kmeans.iterations},
                 {"counts", run.kmeans.state.counts}};
  m["threshold"] = run.threshold;
  Index flagged = 0;
  for (bool a : run.anomalous) flagged += a ? 1 : 0;
  m["anomalous_count"] = flagged;
  write_json_file(dir / "manifest.json", m);
  return 0;
}

int cmd_synth(const Options& o) {
  SbmParams p = o.sbm;
  p.directed = o.directed;
  p.seed = o.seed;
  const SyntheticNetwork s = generate_dynamic_sbm(p);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create '" + o.out + "': " + ec.message());
  const fs::path dir(o.out);
  {
    auto out = open_out(dir / "edges.txt");
    write_edge_list(out, s.network);
  }
  {
    auto out = open_out(dir / "membership.csv");
    out << "node,t,block\n";
    for (std::size_t t = 0; t < s.membership.size(); ++t)
      for (std::size_t i = 0; i < s.membership[t].size(); ++i)
        out << s.network.labels()[i] << ',' << t + 1 << ',' << s.membership[t][i] << '\n';
  }
  nlohmann::json anomalous = nlohmann::json::array();
  for (Index i : s.anomalous_nodes) anomalous.push_back(s.network.labels()[static_cast<std::size_t>(i)]);
  nlohmann::json m{{"command", "synth"},
                   {"params",
                    {{"n", p.n},
                     {"tau", p.tau},
                     {"blocks", p.blocks},
                     {"p_in", p.p_in},
                     {"p_out", p.p_out},
                     {"drift", p.drift},
                     {"persistence", p.persistence},
                     {"anomalies", p.anomalies},
                     {"directed", p.directed},
                     {"seed", p.seed}}},
                   {"anomalous_nodes", anomalous},
                   {"files", {"edges.txt", "membership.csv"}}};
  write_json_file(dir / "manifest.json", m);
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dynembed");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DYNEMBED_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options o;
  CLI::App app{"Embed dynamic networks with CP / orthogonal CP tensor decompositions and evaluate the embeddings."};
  app.name("dynembed");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat `key = value` file; command-line flags override it");

  const std::string g_data = "Data";
  const std::string g_embed = "Embedding";
  const std::string g_eval = "Evaluation";
  const std::string g_synth = "Synthetic SBM";

  app.add_option("--data,--dataset", o.data, "Edge-list file(s) `t src dst [w]`")->group(g_data);
  app.add_flag("--directed", o.directed, "Treat edges as directed")->group(g_data);
  app.add_option("--out,--out-dir,--out_dir", o.out, "Output directory")->capture_default_str()->group(g_data);
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str()->group(g_data);
  app.add_flag("--reference-mode,--reference_mode", o.reference_mode, "Zero timing fields for byte-identical output")
      ->group(g_data);

  auto embed_opt = [&](auto&& add) { add->group(g_embed); };
  embed_opt(app.add_option("--method", o.method, "dynacpd | dynaocpd | adj_last | res_last | adj_wt | res_wt")
                ->capture_default_str());
  embed_opt(app.add_option("--d,-d", o.d, "Embedding dimension (sweep values 8,16,32,64,128)")->capture_default_str());
  embed_opt(app.add_option("--pre-weights,--pre_weights", o.pre_scheme, "uniform | exponential | gaussian | explicit")
                ->capture_default_str());
  embed_opt(app.add_option("--pre-param,--pre_param", o.pre_param, "alpha (exponential) or sigma (gaussian)")
                ->capture_default_str());
  embed_opt(app.add_option("--pre-values,--pre_values", o.pre_values, "Explicit pre-weights, one per slice"));
  embed_opt(app.add_option("--post-weights,--post_weights", o.post_scheme, "Post-weight scheme (default: pre)"));
  embed_opt(app.add_option("--post-param,--post_param", o.post_param, "Post-weight parameter")->capture_default_str());
  embed_opt(app.add_option("--post-values,--post_values", o.post_values, "Explicit post-weights"));
  embed_opt(app.add_option("--adjacency", o.adjacency, "raw | symmetrized | katz")->capture_default_str());
  embed_opt(app.add_option("--katz-omega,--katz_omega", o.katz_omega, "Katz parameter omega")->capture_default_str());
  embed_opt(app.add_option("--katz-fraction,--katz_fraction", o.katz_fraction,
                           "Katz omega as a fraction of the admissible bound"));
  embed_opt(app.add_flag("--teleport", o.teleport, "Teleport-regularize reducible directed chains"));
  embed_opt(app.add_option("--teleport-epsilon,--teleport_epsilon", o.teleport_epsilon, "Teleport probability")
                ->capture_default_str());
  embed_opt(app.add_option("--baseline-sigma,--baseline_sigma", o.baseline_sigma, "Gaussian sigma for adj_wt/res_wt")
                ->capture_default_str());
  embed_opt(app.add_flag("--normalize", o.normalize, "Scale embedding rows to unit length"));
  embed_opt(app.add_option("--max-sweeps,--max_sweeps", o.max_sweeps, "ALS sweep limit")->capture_default_str());
  embed_opt(app.add_option("--rel-tol,--rel_tol", o.rel_tol, "ALS relative fit tolerance")->capture_default_str());
  embed_opt(app.add_option("--init", o.init, "spectral | random")->capture_default_str());

  auto eval_opt = [&](auto&& add) { add->group(g_eval); };
  eval_opt(app.add_option("--metric,--metrics", o.metrics, "l2 and/or hadamard")->capture_default_str());
  eval_opt(app.add_option("--n-pos,--n_pos", o.n_pos, "Positive links sampled (0: all)")->capture_default_str());
  eval_opt(app.add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str());
  eval_opt(app.add_flag("--scores", o.scores, "Also write scores_<metric>.csv"));
  eval_opt(app.add_option("--k", o.k, "Number of clusters")->capture_default_str());
  eval_opt(app.add_option("--alpha", o.alpha, "Streaming centroid decay")->capture_default_str());
  eval_opt(app.add_option("--threshold", o.threshold, "Anomaly threshold (default: score quantile)"));
  eval_opt(app.add_option("--threshold-quantile,--threshold_quantile", o.threshold_quantile,
                          "Score quantile used when no threshold is given")
               ->capture_default_str());
  eval_opt(app.add_option("--embedding", o.embedding, "Use an existing embedding CSV instead of computing one"));

  auto synth_opt = [&](auto&& add) { add->group(g_synth); };
  synth_opt(app.add_option("--n", o.sbm.n, "Nodes")->capture_default_str());
  synth_opt(app.add_option("--tau", o.sbm.tau, "Snapshots")->capture_default_str());
  synth_opt(app.add_option("--blocks", o.sbm.blocks, "Blocks")->capture_default_str());
  synth_opt(app.add_option("--p-in,--p_in", o.sbm.p_in, "Within-block link probability")->capture_default_str());
  synth_opt(app.add_option("--p-out,--p_out", o.sbm.p_out, "Cross-block link probability")->capture_default_str());
  synth_opt(app.add_option("--drift", o.sbm.drift, "Fraction of nodes changing block per slice")
                ->capture_default_str());
  synth_opt(app.add_option("--persistence", o.sbm.persistence, "Probability a pair keeps its previous link state")
                ->capture_default_str());
  synth_opt(app.add_option("--anomalies", o.sbm.anomalies, "Off-structure nodes appended")->capture_default_str());

  auto* embed = app.add_subcommand("embed", "Write embedding.csv and manifest.json");
  auto* linkpred = app.add_subcommand("linkpred", "Hold out the last slice and report AP/AUC");
  auto* cluster = app.add_subcommand("cluster", "k-means on the embedding; clusters.csv");
  auto* anomaly = app.add_subcommand("anomaly", "Distance-to-centroid anomaly scores; anomalies.csv");
  auto* synth = app.add_subcommand("synth", "Generate a dynamic stochastic block model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    const RunConfig cfg = run_config(o);
    if (embed->parsed()) return cmd_embed(cfg);
    if (linkpred->parsed()) return cmd_linkpred(cfg, o.scores);
    if (cluster->parsed()) return cmd_cluster(cfg, o.embedding, "cluster");
    if (anomaly->parsed()) return cmd_cluster(cfg, o.embedding, "anomaly");
  } catch (const KatzBoundError& e) {
    spdlog::error("{} (bound {})", e.what(), format_double(e.bound()));
    return kExitInvalid;
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kExitInvalid;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitOther;
  }
  return kExitOther;
}
