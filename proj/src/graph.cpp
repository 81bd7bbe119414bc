#include "dynembed/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <Eigen/SparseLU>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

// ---------------------------------------------------------------------------
// Snapshot / DynamicNetwork

Snapshot::Snapshot(Index node_count, std::vector<Edge> edges, bool directed)
    : node_count_(node_count), directed_(directed) {
  if (node_count < 0) throw InvalidArgument("negative node count");
  std::vector<Edge> all;
  all.reserve(directed ? edges.size() : 2 * edges.size());
  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= node_count || e.dst < 0 || e.dst >= node_count)
      throw InvalidArgument("edge endpoint outside [0, " + std::to_string(node_count) + ")");
    if (!std::isfinite(e.weight)) throw InvalidArgument("non-finite edge weight");
    all.push_back(e);
    if (!directed && e.src != e.dst) all.push_back({e.dst, e.src, e.weight});
  }
  std::stable_sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  for (const auto& e : all) {
    if (!edges_.empty() && edges_.back().src == e.src && edges_.back().dst == e.dst)
      edges_.back().weight += e.weight;
    else
      edges_.push_back(e);
  }
  std::erase_if(edges_, [](const Edge& e) { return e.weight == 0.0; });
}

Snapshot Snapshot::from_matrix(const SparseMatrix& m, bool directed) {
  if (!m.is_square()) throw InvalidArgument("snapshot matrix must be square");
  Snapshot s;
  s.node_count_ = m.rows();
  s.directed_ = directed;
  m.for_each([&](Index i, Index j, double v) { s.edges_.push_back({i, j, v}); });
  return s;
}

double Snapshot::total_weight() const {
  double w = 0.0;
  for (const auto& e : edges_) w += e.weight;
  return w;
}

DynamicNetwork::DynamicNetwork(std::vector<NodeLabel> labels, std::vector<Snapshot> snapshots, bool directed)
    : labels_(std::move(labels)), snapshots_(std::move(snapshots)), directed_(directed) {
  if (snapshots_.empty()) throw InvalidArgument("a dynamic network needs at least one snapshot");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<Index>(i)).second)
      throw InvalidArgument("duplicate node label '" + labels_[i] + "'");
  }
  for (const auto& s : snapshots_)
    if (s.node_count() != node_count())
      throw InvalidArgument("snapshot node count " + std::to_string(s.node_count()) + " differs from label count " +
                            std::to_string(node_count()));
}

std::optional<Index> DynamicNetwork::index_of(const NodeLabel& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DynamicNetwork DynamicNetwork::slice(Index first, Index last) const {
  if (first < 0 || last > time_steps() || first >= last) throw InvalidArgument("invalid snapshot range");
  std::vector<Snapshot> s(snapshots_.begin() + first, snapshots_.begin() + last);
  DynamicNetwork out(labels_, std::move(s), directed_);
  out.metadata = metadata;
  return out;
}

DynamicNetwork align_snapshots(std::span<const RawSnapshot> raw, bool directed) {
  if (raw.empty()) throw InvalidArgument("no snapshots to align");
  std::vector<NodeLabel> labels;
  std::map<NodeLabel, Index> index;
  auto intern = [&](const NodeLabel& l) {
    auto [it, inserted] = index.emplace(l, static_cast<Index>(labels.size()));
    if (inserted) labels.push_back(l);
    return it->second;
  };
  for (const auto& snap : raw) {
    std::unordered_set<NodeLabel> seen;
    for (const auto& l : snap.nodes) {
      if (!seen.insert(l).second) throw InvalidArgument("duplicate node label '" + l + "' within one snapshot");
      intern(l);
    }
    for (const auto& e : snap.edges) {
      intern(e.src);
      intern(e.dst);
    }
  }
  const auto n = static_cast<Index>(labels.size());
  std::vector<Snapshot> snapshots;
  snapshots.reserve(raw.size());
  for (const auto& snap : raw) {
    std::vector<Edge> edges;
    edges.reserve(snap.edges.size());
    for (const auto& e : snap.edges) edges.push_back({index.at(e.src), index.at(e.dst), e.weight});
    snapshots.emplace_back(n, std::move(edges), directed);
  }
  return DynamicNetwork(std::move(labels), std::move(snapshots), directed);
}

// ---------------------------------------------------------------------------
// Matrix constructions

namespace {

void require_square(const SparseMatrix& a, const char* what) {
  if (!a.is_square()) throw InvalidArgument(std::string(what) + " needs a square matrix");
}

void require_nonnegative(const SparseMatrix& a, const char* what) {
  if (a.min_value() < 0.0) throw InvalidArgument(std::string(what) + ": negative link weight");
}

Eigen::VectorXd inv_sqrt_or_zero(const Eigen::VectorXd& d) {
  Eigen::VectorXd r(d.size());
  for (Index i = 0; i < d.size(); ++i) r[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
  return r;
}

}  // namespace

SparseMatrix adjacency_matrix(const Snapshot& s) {
  std::vector<Triplet> t;
  t.reserve(s.edges().size());
  for (const auto& e : s.edges()) t.push_back({e.src, e.dst, e.weight});
  return SparseMatrix::from_triplets(s.node_count(), s.node_count(), t);
}

SparseMatrix degree_matrix(const SparseMatrix& a, DegreeDirection direction) {
  require_square(a, "degree_matrix");
  return SparseMatrix::diagonal(direction == DegreeDirection::Out ? a.row_sums() : a.col_sums());
}

SparseMatrix laplacian(const SparseMatrix& a) {
  require_square(a, "laplacian");
  require_nonnegative(a, "laplacian");
  return degree_matrix(a, DegreeDirection::Out) - a;
}

SparseMatrix normalized_laplacian(const SparseMatrix& a) {
  require_square(a, "normalized_laplacian");
  require_nonnegative(a, "normalized_laplacian");
  const Eigen::VectorXd s = inv_sqrt_or_zero(a.row_sums());
  return SparseMatrix::identity(a.rows()) - scale_rows_cols(a, s, s);
}

SparseMatrix transition_matrix(const SparseMatrix& a) {
  require_square(a, "transition_matrix");
  require_nonnegative(a, "transition_matrix");
  const Eigen::VectorXd d = a.row_sums();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  a.for_each([&](Index i, Index j, double v) { t.push_back({i, j, v / d[i]}); });
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

// ---------------------------------------------------------------------------
// Stationary vector

namespace {

// Iterative Tarjan over the support graph; returns SCC id per node.
std::vector<Index> strongly_connected_components(const SparseMatrix& a, Index& count) {
  const Index n = a.rows();
  const auto& s = a.storage();
  std::vector<Index> idx(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<Index> stack;
  Index next = 0;
  count = 0;
  struct Frame {
    Index node;
    Index cursor;
  };
  std::vector<Frame> call;
  for (Index root = 0; root < n; ++root) {
    if (idx[root] >= 0) continue;
    call.push_back({root, s.outerIndexPtr()[root]});
    idx[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& f = call.back();
      const Index v = f.node;
      if (f.cursor < s.outerIndexPtr()[v + 1]) {
        const Index w = s.innerIndexPtr()[f.cursor++];
        if (idx[w] < 0) {
          idx[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, s.outerIndexPtr()[w]});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        Index w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
    }
  }
  return comp;
}

double relative_l1_residual(const SparseMatrix& pt, const Eigen::VectorXd& phi) {
  const double norm = phi.lpNorm<1>();
  if (norm == 0.0) return 0.0;
  return (pt * phi - phi).lpNorm<1>() / norm;
}

}  // namespace

Eigen::VectorXd stationary_vector(const SparseMatrix& a, const StationaryOptions& opts) {
  require_square(a, "stationary_vector");
  require_nonnegative(a, "stationary_vector");
  const Index n = a.rows();
  const Eigen::VectorXd out_w = a.row_sums();
  const Eigen::VectorXd in_w = a.col_sums();
  const double total = out_w.sum();
  if (total == 0.0) return Eigen::VectorXd::Zero(n);

  const SparseMatrix p = transition_matrix(a);
  const SparseMatrix pt = p.transpose();  // phi P == P^T phi

  Index n_comp = 0;
  const std::vector<Index> comp = strongly_connected_components(a, n_comp);
  std::vector<char> active(n, 0);
  for (Index i = 0; i < n; ++i) active[i] = (out_w[i] > 0.0 || in_w[i] > 0.0) ? 1 : 0;
  bool reducible = false;
  a.for_each([&](Index i, Index j, double) {
    if (comp[i] != comp[j]) reducible = true;
  });

  if (!reducible) {
    // Closed classes: iterate each from a uniform start carrying its weight.
    std::vector<double> class_weight(n_comp, 0.0);
    std::vector<Index> class_size(n_comp, 0);
    for (Index i = 0; i < n; ++i) {
      if (!active[i]) continue;
      class_weight[comp[i]] += out_w[i];
      class_size[comp[i]] += 1;
    }
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (active[i]) phi[i] = class_weight[comp[i]] / static_cast<double>(class_size[comp[i]]);
    double residual = relative_l1_residual(pt, phi);
    int it = 0;
    while (residual >= opts.tol && it < opts.max_iter) {
      phi = 0.5 * (phi + pt * phi);
      ++it;
      if (it % 8 == 0) residual = relative_l1_residual(pt, phi);
    }
    residual = relative_l1_residual(pt, phi);
    if (residual >= opts.tol)
      throw ConvergenceError("stationary vector did not converge, relative residual " + std::to_string(residual),
                             {residual});
    // Restore exact per-class mass.
    std::vector<double> mass(n_comp, 0.0);
    for (Index i = 0; i < n; ++i) mass[comp[i]] += phi[i];
    for (Index i = 0; i < n; ++i)
      if (active[i] && mass[comp[i]] > 0.0) phi[i] *= class_weight[comp[i]] / mass[comp[i]];
    return phi;
  }

  if (!opts.teleport)
    throw ReducibleChainError(
        "transition matrix is reducible (snapshot not strongly connected); enable teleport "
        "regularization or use the Katz adjacency variant");

  // PageRank-style regularized chain over all n nodes; dangling rows jump uniformly.
  const double eps = opts.teleport_epsilon;
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("teleport epsilon must lie in (0, 1)");
  auto step = [&](const Eigen::VectorXd& phi) {
    double dangling = 0.0;
    for (Index i = 0; i < n; ++i)
      if (out_w[i] == 0.0) dangling += phi[i];
    Eigen::VectorXd next = (1.0 - eps) * (pt * phi);
    next.array() += (eps * phi.sum() + (1.0 - eps) * dangling) / static_cast<double>(n);
    return next;
  };
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(n, total / static_cast<double>(n));
  double residual = 1.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::VectorXd next = step(phi);
    residual = (next - phi).lpNorm<1>() / phi.lpNorm<1>();
    phi = std::move(next);
    if (residual < opts.tol) break;
  }
  if (residual >= opts.tol)
    throw ConvergenceError("teleport stationary vector did not converge", {residual});
  phi *= total / phi.sum();
  return phi;
}

SparseMatrix symmetrized_adjacency(const SparseMatrix& a, const StationaryOptions& opts) {
  const Eigen::VectorXd phi = stationary_vector(a, opts);
  const SparseMatrix p = transition_matrix(a);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.cols());
  const SparseMatrix phi_p = scale_rows_cols(p, phi, ones);  // Phi P
  return phi_p.symmetrized();                                // 1/2 (Phi P + P^T Phi)
}

SparseMatrix symmetric_directed_laplacian(const SparseMatrix& a, bool normalized, const StationaryOptions& opts) {
  const Eigen::VectorXd phi = stationary_vector(a, opts);
  const SparseMatrix p = transition_matrix(a);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.cols());
  const SparseMatrix sym = scale_rows_cols(p, phi, ones).symmetrized();
  if (!normalized) return (SparseMatrix::diagonal(phi) - sym).symmetrized();
  const Eigen::VectorXd s = inv_sqrt_or_zero(phi);
  return (SparseMatrix::identity(a.rows()) - scale_rows_cols(sym, s, s)).symmetrized();
}

// ---------------------------------------------------------------------------
// Katz

double estimate_spectral_radius(const SparseMatrix& a, int iterations, double rel_tol) {
  require_square(a, "estimate_spectral_radius");
  const Index n = a.rows();
  if (n == 0 || a.nnz() == 0) return 0.0;
  const SparseMatrix at = a.transpose();
  Rng rng(0x6b61747aULL);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = 0.5 + uniform01(rng);  // positive start overlaps the Perron vector
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = at * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    v = w / norm;
    const bool done = std::abs(next - sigma) <= rel_tol * next;
    sigma = next;
    if (done) break;
  }
  return sigma;
}

std::optional<double> hong_spectral_radius_bound(const SparseMatrix& a) {
  if (!a.is_square() || a.rows() == 0 || !a.is_symmetric()) return std::nullopt;
  bool unweighted = true;
  a.for_each([&](Index i, Index j, double v) {
    if (i == j || v != 1.0) unweighted = false;
  });
  if (!unweighted || count_components(a) != 1) return std::nullopt;
  const Eigen::VectorXd deg = a.row_sums();
  const double delta = deg.minCoeff();
  const double n = static_cast<double>(a.rows());
  const double m = static_cast<double>(a.nnz()) / 2.0;
  return 0.5 * (delta - 1.0 + std::sqrt((delta + 1.0) * (delta + 1.0) + 4.0 * (2.0 * m - delta * n)));
}

double katz_omega_limit(const SparseMatrix& a) {
  const double rho = estimate_spectral_radius(a);
  double limit = rho > 0.0 ? 0.99 / rho : std::numeric_limits<double>::infinity();
  if (auto hong = hong_spectral_radius_bound(a); hong && *hong > 0.0) limit = std::max(limit, 1.0 / *hong);
  return limit;
}

SparseMatrix katz_series(const SparseMatrix& a, double omega, int terms) {
  require_square(a, "katz_series");
  if (terms < 1) throw InvalidArgument("katz_series needs at least one term");
  // Horner form: A (I + wA (I + wA (...))) evaluated right to left.
  SparseMatrix acc = a;
  for (int l = 1; l < terms; ++l) acc = a + omega * (a * acc);
  return acc;
}

SparseMatrix katz_solve(const SparseMatrix& a, double omega) {
  require_square(a, "katz_solve");
  const Index n = a.rows();
  using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  ColMajor lhs = ColMajor(SparseMatrix::identity(n).storage()) - omega * ColMajor(a.storage());
  lhs.makeCompressed();
  Eigen::SparseLU<ColMajor> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) throw NumericalError("Katz system (I - wA) is singular");
  Eigen::MatrixXd x = lu.solve(a.to_dense());
  if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalError("Katz solve failed");
  if (a.min_value() >= 0.0) x = x.cwiseMax(0.0);
  SparseMatrix out = SparseMatrix::from_dense(x);
  return a.is_symmetric() ? out.symmetrized() : out;
}

SparseMatrix katz_adjacency(const SparseMatrix& a, double omega, const KatzOptions& opts) {
  require_square(a, "katz_adjacency");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw InvalidArgument("Katz parameter must be finite and >= 0");
  if (omega == 0.0) return a;
  const double limit = katz_omega_limit(a);
  if (omega >= limit)
    throw KatzBoundError("Katz parameter " + std::to_string(omega) + " must be below the estimated bound " +
                             std::to_string(limit),
                         limit);
  KatzMethod method = opts.method;
  if (method == KatzMethod::Auto) {
    const double norm = estimate_spectral_radius(a);
    const double q = omega * norm;
    const double tail = q < 1.0 ? std::pow(q, opts.max_terms) / (1.0 - q) : 1.0;
    const double work = static_cast<double>(a.nnz()) * opts.max_terms;
    method = (tail < opts.tol && work < opts.series_work_limit) ? KatzMethod::Series : KatzMethod::Solve;
  }
  if (method == KatzMethod::Series) {
    SparseMatrix s = katz_series(a, omega, opts.max_terms);
    return a.is_symmetric() ? s.symmetrized() : s;
  }
  return katz_solve(a, omega);
}

// ---------------------------------------------------------------------------
// Components

std::vector<Index> component_labels(const SparseMatrix& a) {
  require_square(a, "component_labels");
  const Index n = a.rows();
  std::vector<Index> parent(n);
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  a.for_each([&](Index i, Index j, double) {
    const Index ri = find(i), rj = find(j);
    if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
  });
  std::vector<Index> label(n, -1), dense(n, -1);
  Index next = 0;
  for (Index i = 0; i < n; ++i) {
    const Index r = find(i);
    if (dense[r] < 0) dense[r] = next++;
    label[i] = dense[r];
  }
  return label;
}

Index count_components(const SparseMatrix& a) {
  const auto labels = component_labels(a);
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

}  // namespace dynembed
