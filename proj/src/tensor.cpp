#include "dynembed/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "dynembed/error.hpp"
#include "dynembed/rng.hpp"

namespace dynembed {

// ---------------------------------------------------------------------------
// SparseTensor3

SparseTensor3::SparseTensor3(std::array<Index, 3> dims, std::vector<Entry> entries) : dims_(dims) {
  for (Index d : dims_)
    if (d < 0) throw InvalidArgument("negative tensor dimension");
  for (const auto& e : entries) {
    if (e.i < 0 || e.i >= dims_[0] || e.j < 0 || e.j >= dims_[1] || e.t < 0 || e.t >= dims_[2])
      throw InvalidArgument("tensor coordinate out of range");
    if (!std::isfinite(e.value)) throw InvalidArgument("non-finite tensor entry");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().t == e.t && entries_.back().i == e.i && entries_.back().j == e.j)
      entries_.back().value += e.value;
    else
      entries_.push_back(e);
  }
  std::erase_if(entries_, [](const Entry& e) { return e.value == 0.0; });
  slice_offsets_.assign(static_cast<std::size_t>(dims_[2]) + 1, 0);
  for (const auto& e : entries_) ++slice_offsets_[static_cast<std::size_t>(e.t) + 1];
  std::partial_sum(slice_offsets_.begin(), slice_offsets_.end(), slice_offsets_.begin());
}

SparseTensor3 SparseTensor3::from_snapshots(std::span<const SparseMatrix> slices) {
  if (slices.empty()) throw InvalidArgument("no slices to stack");
  const Index n = slices.front().rows();
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < slices.size(); ++t) {
    const auto& s = slices[t];
    if (s.rows() != n || s.cols() != n)
      throw InvalidArgument("slice " + std::to_string(t) + " is " + std::to_string(s.rows()) + "x" +
                            std::to_string(s.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(n));
    s.for_each([&](Index i, Index j, double v) { entries.push_back({i, j, static_cast<Index>(t), v}); });
  }
  return SparseTensor3({n, n, static_cast<Index>(slices.size())}, std::move(entries));
}

SparseMatrix SparseTensor3::slice(Index t) const {
  if (t < 0 || t >= dims_[2]) throw InvalidArgument("slice index out of range");
  std::vector<Triplet> trips;
  for (Index k = slice_begin(t); k < slice_begin(t + 1); ++k) {
    const auto& e = entries_[static_cast<std::size_t>(k)];
    trips.push_back({e.i, e.j, e.value});
  }
  return SparseMatrix::from_triplets(dims_[0], dims_[1], trips);
}

double SparseTensor3::frobenius_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return std::sqrt(s);
}

SparseTensor3 SparseTensor3::scale_slices(std::span<const double> factors) const {
  if (static_cast<Index>(factors.size()) != dims_[2]) throw InvalidArgument("one scale factor per slice required");
  std::vector<Entry> out = entries_;
  for (auto& e : out) e.value *= factors[static_cast<std::size_t>(e.t)];
  return SparseTensor3(dims_, std::move(out));
}

// ---------------------------------------------------------------------------
// MTTKRP

namespace {

void check_factors(const SparseTensor3& z, const Factors& f) {
  const Index r = f[0].cols();
  for (int m = 0; m < 3; ++m) {
    if (f[m].rows() != z.dim(m))
      throw InvalidArgument("factor " + std::to_string(m) + " has " + std::to_string(f[m].rows()) +
                            " rows, tensor mode has " + std::to_string(z.dim(m)));
    if (f[m].cols() != r) throw InvalidArgument("factor matrices disagree on rank");
  }
}

}  // namespace

Eigen::MatrixXd mttkrp(const SparseTensor3& z, const Factors& factors, Mode mode) {
  check_factors(z, factors);
  const int m = static_cast<int>(mode);
  const Index r = factors[0].cols();
  // Row-major copies keep the per-nonzero row accesses contiguous.
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat fa = factors[0], fb = factors[1], fc = factors[2];
  RowMat out = RowMat::Zero(z.dim(m), r);
  for (const auto& e : z.entries()) {
    switch (mode) {
      case Mode::A:
        out.row(e.i) += e.value * fb.row(e.j).cwiseProduct(fc.row(e.t));
        break;
      case Mode::B:
        out.row(e.j) += e.value * fa.row(e.i).cwiseProduct(fc.row(e.t));
        break;
      case Mode::C:
        out.row(e.t) += e.value * fa.row(e.i).cwiseProduct(fb.row(e.j));
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CPModel helpers

Eigen::MatrixXd CPModel::reconstruct_slice(Index t) const {
  if (t < 0 || t >= c.rows()) throw InvalidArgument("slice index out of range");
  const Eigen::VectorXd w = lambdas.cwiseProduct(c.row(t).transpose());
  return a * w.asDiagonal() * b.transpose();
}

CPModel select_components(const CPModel& model, std::span<const Index> indices) {
  CPModel out;
  const auto k = static_cast<Index>(indices.size());
  out.lambdas.resize(k);
  out.a.resize(model.a.rows(), k);
  out.b.resize(model.b.rows(), k);
  out.c.resize(model.c.rows(), k);
  for (Index q = 0; q < k; ++q) {
    const Index src = indices[static_cast<std::size_t>(q)];
    if (src < 0 || src >= model.rank()) throw InvalidArgument("component index out of range");
    out.lambdas[q] = model.lambdas[src];
    out.a.col(q) = model.a.col(src);
    out.b.col(q) = model.b.col(src);
    out.c.col(q) = model.c.col(src);
  }
  out.fit = model.fit;
  out.fit_history = model.fit_history;
  out.sweeps = model.sweeps;
  out.converged = model.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Residuals

namespace {

constexpr double kExactResidualWork = 2e7;

// Squared weighted residual ||Z - Zhat||_w^2 and ||Z||_w^2.
std::pair<double, double> squared_residual(const SparseTensor3& z, const Eigen::VectorXd& lambdas,
                                           const Factors& f, const Eigen::VectorXd& w) {
  const auto& dims = z.dims();
  double znorm2 = 0.0;
  for (const auto& e : z.entries()) znorm2 += w[e.t] * e.value * e.value;
  const double work = static_cast<double>(dims[0]) * static_cast<double>(dims[1]) * static_cast<double>(dims[2]) *
                      static_cast<double>(std::max<Index>(1, lambdas.size()));
  if (work <= kExactResidualWork) {
    double res = 0.0;
    for (Index t = 0; t < dims[2]; ++t) {
      if (w[t] == 0.0) continue;
      const Eigen::VectorXd s = lambdas.cwiseProduct(f[2].row(t).transpose());
      Eigen::MatrixXd diff = f[0] * s.asDiagonal() * f[1].transpose();
      for (Index k = z.slice_begin(t); k < z.slice_begin(t + 1); ++k) {
        const auto& e = z.entries()[static_cast<std::size_t>(k)];
        diff(e.i, e.j) -= e.value;
      }
      res += w[t] * diff.squaredNorm();
    }
    return {res, znorm2};
  }
  // ||Z||^2 - 2 <Z, Zhat> + ||Zhat||^2 through Gram matrices.
  const Eigen::MatrixXd cw = w.asDiagonal() * f[2];
  const Eigen::MatrixXd gram =
      (f[0].transpose() * f[0]).cwiseProduct(f[1].transpose() * f[1]).cwiseProduct(f[2].transpose() * cw);
  const double model_norm2 = lambdas.dot(gram * lambdas);
  double inner = 0.0;
  for (const auto& e : z.entries()) {
    double s = 0.0;
    for (Index q = 0; q < lambdas.size(); ++q) s += lambdas[q] * f[0](e.i, q) * f[1](e.j, q) * f[2](e.t, q);
    inner += w[e.t] * e.value * s;
  }
  return {std::max(0.0, znorm2 - 2.0 * inner + model_norm2), znorm2};
}

double relative_fit(const SparseTensor3& z, const Eigen::VectorXd& lambdas, const Factors& f) {
  const auto [res, znorm2] = squared_residual(z, lambdas, f, Eigen::VectorXd::Ones(z.dim(2)));
  return znorm2 > 0.0 ? std::sqrt(res / znorm2) : 0.0;
}

// ---------------------------------------------------------------------------
// ALS building blocks

// Solve X G = M for symmetric PSD G, with a ridge when G is ill conditioned.
Eigen::MatrixXd gram_solve(const Eigen::MatrixXd& m, Eigen::MatrixXd g) {
  const Index r = g.rows();
  const double trace = g.trace();
  if (!(trace > 0.0)) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) g.diagonal().array() += 1e-10 * trace / static_cast<double>(r);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    return ldlt.solve(m.transpose()).transpose();
  }
  return llt.solve(m.transpose()).transpose();
}

// Normalize columns of `x` into `dst`; zero columns keep the previous column.
Eigen::VectorXd normalize_into(const Eigen::MatrixXd& x, Eigen::MatrixXd& dst) {
  Eigen::VectorXd norms(x.cols());
  for (Index q = 0; q < x.cols(); ++q) {
    const double nrm = x.col(q).norm();
    norms[q] = nrm;
    if (nrm > std::numeric_limits<double>::min()) dst.col(q) = x.col(q) / nrm;
  }
  return norms;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
  // Keep column orientation aligned with the input.
  for (Index k = 0; k < q.cols(); ++k)
    if (q.col(k).dot(x.col(k)) < 0.0) q.col(k) *= -1.0;
  return q;
}

Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd p = svd.matrixU() * svd.matrixV().transpose();
  const Eigen::MatrixXd gram = p.transpose() * p;
  if ((gram - Eigen::MatrixXd::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff() > 1e-12) p = orthonormalize(p);
  return p;
}

void require_finite(const Eigen::MatrixXd& x, const char* name, int sweep) {
  if (!x.allFinite())
    throw NumericalError(std::string("non-finite values in factor ") + name + " at sweep " + std::to_string(sweep));
}

void fix_signs(Eigen::MatrixXd& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0.0) v.col(k) *= -1.0;
  }
}

Factors random_factors(const SparseTensor3& z, Index rank, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "als-init"));
  Factors f;
  for (int m = 0; m < 3; ++m) {
    f[m].resize(z.dim(m), rank);
    for (Index q = 0; q < rank; ++q)
      for (Index i = 0; i < z.dim(m); ++i) f[m](i, q) = 2.0 * uniform01(rng) - 1.0;
  }
  return f;
}

// Columns of the `rank` leading eigenvectors of symmetric `g`, ordered by |eigenvalue|.
std::optional<Eigen::MatrixXd> leading_eigenvectors(const Eigen::MatrixXd& g, Index rank, Eigen::VectorXd* values) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Index n = g.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // Eigen returns ascending values; ties keep ascending index order.
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]);
  });
  Eigen::MatrixXd e(n, rank);
  if (values) values->resize(rank);
  for (Index q = 0; q < rank; ++q) {
    e.col(q) = es.eigenvectors().col(order[static_cast<std::size_t>(q)]);
    if (values) (*values)[q] = es.eigenvalues()[order[static_cast<std::size_t>(q)]];
  }
  fix_signs(e);
  return e;
}

bool symmetric_slices(const SparseTensor3& z) {
  for (Index t = 0; t < z.dim(2); ++t)
    if (!z.slice(t).is_symmetric()) return false;
  return true;
}

std::optional<Factors> spectral_factors(const SparseTensor3& z, Index rank, Index max_n) {
  const Index n = z.dim(0);
  if (n != z.dim(1) || rank > n || n > max_n || n == 0) return std::nullopt;
  Factors f;
  Eigen::VectorXd values = Eigen::VectorXd::Zero(rank);
  if (symmetric_slices(z)) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : z.entries()) s(e.i, e.j) += e.value;
    auto e = leading_eigenvectors(s, rank, &values);
    if (!e) return std::nullopt;
    f = {*e, *e, Eigen::MatrixXd::Zero(z.dim(2), rank)};
  } else {
    // Leading left singular vectors of the mode-1 and mode-2 unfoldings.
    Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(n, n), gb = Eigen::MatrixXd::Zero(n, n);
    for (Index t = 0; t < z.dim(2); ++t) {
      const Eigen::MatrixXd zt = z.slice(t).to_dense();
      ga.noalias() += zt * zt.transpose();
      gb.noalias() += zt.transpose() * zt;
    }
    auto a = leading_eigenvectors(ga, rank, &values);
    auto b = leading_eigenvectors(gb, rank, nullptr);
    if (!a || !b) return std::nullopt;
    values = values.cwiseSqrt();
    f = {*a, *b, Eigen::MatrixXd::Zero(z.dim(2), rank)};
  }
  for (const auto& entry : z.entries())
    for (Index q = 0; q < rank; ++q) f[2](entry.t, q) += entry.value * f[0](entry.i, q) * f[1](entry.j, q);
  const double uniform = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(1, z.dim(2))));
  for (Index q = 0; q < rank; ++q)
    if (f[2].col(q).norm() <= 1e-14 * (1.0 + std::abs(values[q]))) f[2].col(q).setConstant(uniform);
  return f;
}

Factors initial_factors(const SparseTensor3& z, const AlsConfig& cfg) {
  Factors f;
  switch (cfg.init) {
    case AlsInit::Provided:
      if (!cfg.initial_factors) throw InvalidArgument("AlsInit::Provided requires initial_factors");
      f = *cfg.initial_factors;
      check_factors(z, f);
      if (f[0].cols() != cfg.rank) throw InvalidArgument("initial factors do not match the configured rank");
      break;
    case AlsInit::Spectral:
      if (auto s = spectral_factors(z, cfg.rank, cfg.spectral_init_max_n)) {
        f = std::move(*s);
        break;
      }
      [[fallthrough]];
    case AlsInit::Random:
      f = random_factors(z, cfg.rank, cfg.seed);
      break;
  }
  for (auto& m : f) {
    Eigen::MatrixXd normalized = m;
    for (Index q = 0; q < m.cols(); ++q) {
      const double nrm = m.col(q).norm();
      if (nrm > 0.0)
        normalized.col(q) /= nrm;
      else
        normalized.col(q).setConstant(1.0 / std::sqrt(static_cast<double>(m.rows())));
    }
    m = std::move(normalized);
  }
  if (cfg.orthogonality == Orthogonality::NodeFactor) f[1] = orthonormalize(f[1]);
  return f;
}

void validate(const SparseTensor3& z, const AlsConfig& cfg) {
  if (cfg.rank < 1) throw InvalidArgument("ALS rank must be >= 1");
  if (!(cfg.rel_tol > 0.0)) throw InvalidArgument("ALS tolerance must be > 0");
  if (cfg.max_sweeps < 1) throw InvalidArgument("ALS needs max_sweeps >= 1");
  for (int m = 0; m < 3; ++m)
    if (z.dim(m) == 0) throw InvalidArgument("cannot decompose a tensor with an empty mode");
  if (cfg.orthogonality == Orthogonality::NodeFactor && cfg.rank > z.dim(1))
    throw InvalidArgument("orthogonal CP needs rank <= " + std::to_string(z.dim(1)));
}

void sort_components(CPModel& model) {
  std::vector<Index> order(static_cast<std::size_t>(model.rank()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return model.lambdas[x] > model.lambdas[y]; });
  model = select_components(model, order);
}

struct SweepState {
  Factors f;
  Eigen::VectorXd lambdas;
  double fit = std::numeric_limits<double>::infinity();
};

// One sweep A -> B -> C. `damping` < 1 blends the Procrustes B with the
// previous B (then re-orthonormalizes); only used by the orthogonal variant.
SweepState als_sweep(const SparseTensor3& z, const SweepState& prev, bool orthogonal, double damping, int sweep) {
  SweepState s = prev;
  auto& f = s.f;
  // A
  {
    const Eigen::MatrixXd g = (f[1].transpose() * f[1]).cwiseProduct(f[2].transpose() * f[2]);
    Eigen::MatrixXd a_ls = gram_solve(mttkrp(z, f, Mode::A), g);
    require_finite(a_ls, "A", sweep);
    if (orthogonal) {
      // Procrustes on B uses the unnormalized A so the scale enters the fit.
      Factors scaled{a_ls, f[1], f[2]};
      Eigen::MatrixXd b_new = polar_factor(mttkrp(z, scaled, Mode::B));
      if (damping < 1.0) b_new = polar_factor(damping * b_new + (1.0 - damping) * f[1]);
      require_finite(b_new, "B", sweep);
      f[1] = std::move(b_new);
      normalize_into(a_ls, f[0]);
    } else {
      normalize_into(a_ls, f[0]);
      const Eigen::MatrixXd gb = (f[0].transpose() * f[0]).cwiseProduct(f[2].transpose() * f[2]);
      Eigen::MatrixXd b_ls = gram_solve(mttkrp(z, f, Mode::B), gb);
      require_finite(b_ls, "B", sweep);
      normalize_into(b_ls, f[1]);
    }
  }
  // C, whose norms become the modes.
  {
    const Eigen::MatrixXd g = (f[0].transpose() * f[0]).cwiseProduct(f[1].transpose() * f[1]);
    Eigen::MatrixXd c_ls = gram_solve(mttkrp(z, f, Mode::C), g);
    require_finite(c_ls, "C", sweep);
    s.lambdas = normalize_into(c_ls, f[2]);
  }
  s.fit = relative_fit(z, s.lambdas, f);
  return s;
}

CPModel run_als(const SparseTensor3& z, const AlsConfig& cfg) {
  validate(z, cfg);
  const bool orthogonal = cfg.orthogonality == Orthogonality::NodeFactor;
  SweepState state;
  state.f = initial_factors(z, cfg);
  state.lambdas = Eigen::VectorXd::Zero(cfg.rank);

  CPModel model;
  if (z.frobenius_norm() == 0.0) {
    model.a = state.f[0];
    model.b = state.f[1];
    model.c = state.f[2];
    model.lambdas = state.lambdas;
    model.fit = 0.0;
    model.converged = true;
    return model;
  }

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    SweepState next = als_sweep(z, state, orthogonal, 1.0, sweep);
    if (orthogonal && next.fit > state.fit) {
      bool accepted = false;
      for (double damping = 0.5; damping >= 1.0 / 64.0; damping *= 0.5) {
        next = als_sweep(z, state, orthogonal, damping, sweep);
        if (next.fit <= state.fit) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        spdlog::debug("ocp_als: sweep {} rejected, stopping at fit {}", sweep, state.fit);
        model.converged = true;
        break;
      }
    }
    const double change = std::abs(state.fit - next.fit);
    state = std::move(next);
    model.fit_history.push_back(state.fit);
    model.sweeps = sweep;
    spdlog::debug("als sweep {}: fit {:.3e}", sweep, state.fit);
    if (change < cfg.rel_tol) {
      model.converged = true;
      break;
    }
  }
  model.a = state.f[0];
  model.b = state.f[1];
  model.c = state.f[2];
  model.lambdas = state.lambdas;
  model.fit = state.fit;
  sort_components(model);
  return model;
}

}  // namespace

CPModel cp_als(const SparseTensor3& z, const AlsConfig& cfg) { return run_als(z, cfg); }

CPModel ocp_als(const SparseTensor3& z, AlsConfig cfg) {
  cfg.orthogonality = Orthogonality::NodeFactor;
  return run_als(z, cfg);
}

ReconstructionError reconstruct_error(const SparseTensor3& z, const CPModel& model,
                                      std::optional<std::span<const double>> weights) {
  if (model.a.rows() != z.dim(0) || model.b.rows() != z.dim(1) || model.c.rows() != z.dim(2))
    throw InvalidArgument("model shape does not match tensor");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(z.dim(2));
  if (weights) {
    if (static_cast<Index>(weights->size()) != z.dim(2)) throw InvalidArgument("need one weight per slice");
    for (Index t = 0; t < z.dim(2); ++t) {
      const double wt = (*weights)[static_cast<std::size_t>(t)];
      if (!(wt > 0.0) || !std::isfinite(wt)) throw InvalidArgument("slice weights must be positive");
      w[t] = wt;
    }
  }
  const Factors f{model.a, model.b, model.c};
  const auto [res, znorm2] = squared_residual(z, model.lambdas, f, w);
  if (znorm2 == 0.0) return {std::sqrt(res), false};
  return {std::sqrt(res / znorm2), true};
}

}  // namespace dynembed
