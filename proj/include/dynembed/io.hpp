#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynembed/graph.hpp"
#include "dynembed/spectral.hpp"
#include "dynembed/tensor.hpp"

namespace dynembed {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Edge-list text: `t src dst [weight]` per line, `#` starts a comment,
/// weight defaults to 1. A line `t label` declares a node without edges.
/// Times are integers and must be non-decreasing within a stream; time
/// t_min + k becomes snapshot k, missing times become empty snapshots.
struct TimedRecords {
  long long t_min = 0;
  long long t_max = -1;
  /// One entry per time in [t_min, t_max].
  std::vector<RawSnapshot> snapshots;
};

/// Throws ParseError with the line number.
TimedRecords parse_edge_list(std::istream& in);

/// Reads one or more edge-list files and aligns them. Records from all files
/// are merged by time; each file must be monotone in t on its own. The
/// network metadata records the sources, time range and snapshot count.
DynamicNetwork load_edge_lists(std::span<const std::filesystem::path> files, bool directed);

/// Writes the network in edge-list form with times 1..tau. Undirected
/// edges are written once (src <= dst). Every label is declared at time 1
/// so that reading the file back reproduces the label order.
void write_edge_list(std::ostream& out, const DynamicNetwork& net);

/// CSV with header `node,dim_0,...,dim_{d-1}`.
void write_embedding_csv(std::ostream& out, const Embedding& emb, std::span<const NodeLabel> labels);
Embedding read_embedding_csv(std::istream& in, std::vector<NodeLabel>* labels = nullptr);

/// Row-major numeric CSV without header.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

/// Writes model.json (rank, dims, lambdas, fit, history, config) plus
/// factor_a.csv, factor_b.csv, factor_c.csv into `dir`.
void save_model(const CPModel& model, const std::filesystem::path& dir, const nlohmann::json& config = {});
CPModel load_model(const std::filesystem::path& dir);

/// Writes `j` with 2-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dynembed
