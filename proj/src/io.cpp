#include "dynembed/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dynembed/error.hpp"

namespace dynembed {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool parse_int(std::string_view s, long long& v) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct Record {
  long long t;
  std::string src;
  std::string dst;  // empty for a node declaration
  double weight;
};

std::vector<Record> parse_records(std::istream& in) {
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  long long last_t = 0;
  bool have_t = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tok = split_ws(view);
    if (tok.empty()) continue;
    if (tok.size() > 4) throw ParseError("expected `t src dst [weight]`, got " + std::to_string(tok.size()) + " fields", lineno);
    long long t = 0;
    if (!parse_int(tok[0], t)) throw ParseError("time '" + std::string(tok[0]) + "' is not an integer", lineno);
    if (have_t && t < last_t)
      throw ParseError("time " + std::to_string(t) + " after " + std::to_string(last_t) + " (times must be non-decreasing)",
                       lineno);
    have_t = true;
    last_t = t;
    if (tok.size() == 2) {
      out.push_back({t, std::string(tok[1]), {}, 0.0});
      continue;
    }
    double w = 1.0;
    if (tok.size() == 4 && (!parse_double(tok[3], w) || !std::isfinite(w)))
      throw ParseError("weight '" + std::string(tok[3]) + "' is not a finite number", lineno);
    if (tok.size() == 1) throw ParseError("missing node labels", lineno);
    out.push_back({t, std::string(tok[1]), std::string(tok[2]), w});
  }
  return out;
}

TimedRecords group_records(const std::vector<Record>& records) {
  TimedRecords out;
  if (records.empty()) return out;
  long long lo = records.front().t, hi = records.front().t;
  for (const auto& r : records) {
    lo = std::min(lo, r.t);
    hi = std::max(hi, r.t);
  }
  if (hi - lo >= 10'000'000) throw InvalidArgument("time range too large: " + std::to_string(lo) + ".." + std::to_string(hi));
  out.t_min = lo;
  out.t_max = hi;
  out.snapshots.resize(static_cast<std::size_t>(hi - lo + 1));
  for (const auto& r : records) {
    auto& snap = out.snapshots[static_cast<std::size_t>(r.t - lo)];
    if (r.dst.empty())
      snap.nodes.push_back(r.src);
    else
      snap.edges.push_back({r.src, r.dst, r.weight});
  }
  return out;
}

}  // namespace

TimedRecords parse_edge_list(std::istream& in) { return group_records(parse_records(in)); }

DynamicNetwork load_edge_lists(std::span<const fs::path> files, bool directed) {
  if (files.empty()) throw InvalidArgument("no dataset files given");
  std::vector<Record> all;
  std::string sources;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot open '" + f.string() + "'");
    try {
      auto recs = parse_records(in);
      all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what(), e.line());
    }
    if (!sources.empty()) sources += ";";
    sources += f.string();
  }
  std::stable_sort(all.begin(), all.end(), [](const Record& a, const Record& b) { return a.t < b.t; });
  TimedRecords grouped = group_records(all);
  if (grouped.snapshots.empty()) throw InvalidArgument("dataset contains no records");
  DynamicNetwork net = align_snapshots(grouped.snapshots, directed);
  net.metadata["source"] = sources;
  net.metadata["t_min"] = std::to_string(grouped.t_min);
  net.metadata["t_max"] = std::to_string(grouped.t_max);
  net.metadata["snapshots"] = std::to_string(grouped.snapshots.size());
  net.metadata["nodes"] = std::to_string(net.node_count());
  return net;
}

void write_edge_list(std::ostream& out, const DynamicNetwork& net) {
  out << "# t src dst weight\n";
  for (const auto& l : net.labels()) out << 1 << ' ' << l << '\n';
  for (Index t = 0; t < net.time_steps(); ++t) {
    for (const auto& e : net.snapshot(t).edges()) {
      if (!net.directed() && e.src > e.dst) continue;
      out << (t + 1) << ' ' << net.labels()[static_cast<std::size_t>(e.src)] << ' '
          << net.labels()[static_cast<std::size_t>(e.dst)] << ' ' << format_double(e.weight) << '\n';
    }
  }
}

void write_embedding_csv(std::ostream& out, const Embedding& emb, std::span<const NodeLabel> labels) {
  if (static_cast<Index>(labels.size()) != emb.rows()) throw InvalidArgument("one label per embedding row required");
  out << "node";
  for (Index j = 0; j < emb.cols(); ++j) out << ",dim_" << j;
  out << '\n';
  for (Index i = 0; i < emb.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < emb.cols(); ++j) out << ',' << format_double(emb(i, j));
    out << '\n';
  }
}

Embedding read_embedding_csv(std::istream& in, std::vector<NodeLabel>* labels) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file", 1);
  const auto header = split_char(line, ',');
  if (header.empty() || header[0] != "node") throw ParseError("expected header starting with 'node'", 1);
  const auto d = static_cast<Index>(header.size() - 1);
  std::vector<double> values;
  std::vector<NodeLabel> names;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_char(line, ',');
    if (static_cast<Index>(cells.size()) != d + 1)
      throw ParseError("expected " + std::to_string(d + 1) + " columns", lineno);
    names.emplace_back(cells[0]);
    for (Index j = 1; j <= d; ++j) {
      double v = 0.0;
      if (!parse_double(cells[static_cast<std::size_t>(j)], v)) throw ParseError("bad number", lineno);
      values.push_back(v);
    }
  }
  Embedding emb(static_cast<Index>(names.size()), d);
  for (Index i = 0; i < emb.rows(); ++i)
    for (Index j = 0; j < d; ++j) emb(i, j) = values[static_cast<std::size_t>(i * d + j)];
  if (labels) *labels = std::move(names);
  return emb;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto cell : split_char(line, ',')) {
      double v = 0.0;
      if (!parse_double(cell, v)) throw ParseError("bad number '" + std::string(cell) + "'", lineno);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged matrix row", lineno);
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<Index>(rows.size());
  const auto c = rows.empty() ? Index{0} : static_cast<Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Eigen::MatrixXd read_matrix_file(const fs::path& path, Index rows, Index cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Eigen::MatrixXd m = read_matrix_csv(in);
  if (m.rows() == 0 && rows * cols == 0) return Eigen::MatrixXd(rows, cols);
  if (m.rows() != rows || m.cols() != cols)
    throw ParseError(path.string() + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix", 0);
  return m;
}

}  // namespace

void write_json_file(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void save_model(const CPModel& model, const fs::path& dir, const nlohmann::json& config) {
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["rank"] = model.rank();
  meta["dims"] = {model.a.rows(), model.b.rows(), model.c.rows()};
  // Doubles are stored as shortest round-trip strings so reloads are exact.
  nlohmann::json lambdas = nlohmann::json::array();
  for (Index i = 0; i < model.rank(); ++i) lambdas.push_back(format_double(model.lambdas[i]));
  meta["lambdas"] = lambdas;
  meta["fit"] = format_double(model.fit);
  nlohmann::json history = nlohmann::json::array();
  for (double f : model.fit_history) history.push_back(format_double(f));
  meta["fit_history"] = history;
  meta["sweeps"] = model.sweeps;
  meta["converged"] = model.converged;
  meta["config"] = config;
  write_json_file(dir / "model.json", meta);
  const std::pair<const char*, const Eigen::MatrixXd*> factors[] = {
      {"factor_a.csv", &model.a}, {"factor_b.csv", &model.b}, {"factor_c.csv", &model.c}};
  for (const auto& [name, m] : factors) {
    std::ostringstream os;
    write_matrix_csv(os, *m);
    write_text(dir / name, os.str());
  }
}

CPModel load_model(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("cannot open '" + (dir / "model.json").string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model.json: ") + e.what(), 0);
  }
  auto as_double = [](const nlohmann::json& j) {
    double v = 0.0;
    const auto s = j.get<std::string>();
    if (!parse_double(s, v)) throw ParseError("bad number '" + s + "' in model.json", 0);
    return v;
  };
  CPModel model;
  const auto rank = meta.at("rank").get<Index>();
  const auto dims = meta.at("dims").get<std::vector<Index>>();
  if (dims.size() != 3) throw ParseError("model.json: dims must have 3 entries", 0);
  model.lambdas.resize(rank);
  for (Index i = 0; i < rank; ++i) model.lambdas[i] = as_double(meta.at("lambdas").at(static_cast<std::size_t>(i)));
  model.fit = as_double(meta.at("fit"));
  for (const auto& f : meta.at("fit_history")) model.fit_history.push_back(as_double(f));
  model.sweeps = meta.at("sweeps").get<int>();
  model.converged = meta.at("converged").get<bool>();
  model.a = read_matrix_file(dir / "factor_a.csv", dims[0], rank);
  model.b = read_matrix_file(dir / "factor_b.csv", dims[1], rank);
  model.c = read_matrix_file(dir / "factor_c.csv", dims[2], rank);
  return model;
}

}  // namespace dynembed
