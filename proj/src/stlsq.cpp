#include <cmath>
#include <exception>

#include "pcsindy/errors.hpp"
#include "pcsindy/sindy.hpp"

namespace pcsindy {

void StlsqConfig::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) throw ConfigError("stlsq.threshold must be non-negative");
  if (max_iters < 1) throw ConfigError("stlsq.max_iters must be at least 1");
  if (!(ridge >= 0.0)) throw ConfigError("stlsq.ridge must be non-negative");
}

namespace {

double rms(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.size() ? v.norm() / std::sqrt(static_cast<double>(v.size())) : 0.0;
}

// Least squares on the active columns. A rank-deficient system gets the minimum-norm
// solution of min |A c - y|^2 + ridge |c|^2; full-rank systems are solved unregularized.
Eigen::VectorXd solve_active(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double ridge) {
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  if (ridge == 0.0 || cod.rank() == a.cols()) return cod.solve(y);
  const auto m = a.rows(), k = a.cols();
  Eigen::MatrixXd aug(m + k, k);
  aug.topRows(m) = a;
  aug.bottomRows(k) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + k);
  rhs.head(m) = y;
  return aug.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace

Eigen::VectorXd stlsq_target(const Eigen::Ref<const Eigen::MatrixXd>& theta, const Eigen::VectorXd& y,
                             const StlsqConfig& cfg, TargetDiagnostics& diag) {
  const auto p = theta.cols();
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(p);
  double y_scale = 1.0;
  if (cfg.normalize_columns) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = rms(theta.col(j));
      if (s > 0.0) col_scale(j) = s;
    }
    y_scale = rms(y);
  }
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(p);
  if (y_scale == 0.0 || y.isZero(0.0)) {
    diag.converged = true;
    return xi;
  }
  const Eigen::MatrixXd a = theta * col_scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd yn = y / y_scale;

  std::vector<Eigen::Index> active(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) active[static_cast<std::size_t>(j)] = j;
  Eigen::VectorXd c;
  diag.converged = false;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    diag.iterations = it;
    c = solve_active(a(Eigen::all, active), yn, cfg.ridge);
    std::vector<Eigen::Index> kept;
    for (std::size_t i = 0; i < active.size(); ++i)
      if (std::abs(c(static_cast<Eigen::Index>(i))) >= cfg.threshold) kept.push_back(active[i]);
    if (kept.empty())
      throw NumericalError("threshold too aggressive: every candidate eliminated for " +
                           (diag.target.empty() ? std::string("a target") : diag.target));
    if (kept.size() == active.size()) {
      diag.converged = true;
      break;
    }
    active = std::move(kept);
    if (it == cfg.max_iters) c = solve_active(a(Eigen::all, active), yn, cfg.ridge);
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto j = active[i];
    xi(j) = c(static_cast<Eigen::Index>(i)) * y_scale / col_scale(j);
  }
  diag.support_size = active.size();
  diag.residual_rms = rms(theta * xi - y);
  return xi;
}

namespace {

struct TargetTask {
  Eigen::Index col_begin, col_count, target;
};

std::vector<TargetTask> tasks_for(const SnapshotMatrices& s, const StlsqConfig& cfg) {
  if (s.theta.rows() != s.x_dot.rows()) throw ConfigError("Theta and Xdot have different row counts");
  if (s.theta.rows() == 0) throw ConfigError("no samples to fit");
  std::vector<TargetTask> tasks;
  if (cfg.block_structured && !s.blocks.empty()) {
    for (const auto& b : s.blocks)
      for (std::size_t j = 0; j < b.target_count; ++j)
        tasks.push_back({static_cast<Eigen::Index>(b.col_begin), static_cast<Eigen::Index>(b.col_count),
                         static_cast<Eigen::Index>(b.target_begin + j)});
  } else {
    for (Eigen::Index j = 0; j < s.x_dot.cols(); ++j) tasks.push_back({0, s.theta.cols(), j});
  }
  return tasks;
}

void run_task(const SnapshotMatrices& s, const StlsqConfig& cfg, const TargetTask& t, StlsqResult& r) {
  auto& diag = r.diagnostics[static_cast<std::size_t>(t.target)];
  if (static_cast<std::size_t>(t.target) < s.target_labels.size())
    diag.target = s.target_labels[static_cast<std::size_t>(t.target)];
  const Eigen::VectorXd y = s.x_dot.col(t.target);
  const Eigen::VectorXd c = stlsq_target(s.theta.middleCols(t.col_begin, t.col_count), y, cfg, diag);
  r.xi.col(t.target).segment(t.col_begin, t.col_count) = c;
}

StlsqResult prepare(const SnapshotMatrices& s, const StlsqConfig& cfg) {
  cfg.validate();
  StlsqResult r;
  r.xi = Eigen::MatrixXd::Zero(s.theta.cols(), s.x_dot.cols());
  r.diagnostics.resize(static_cast<std::size_t>(s.x_dot.cols()));
  return r;
}

}  // namespace

StlsqResult stlsq(const SnapshotMatrices& s, const StlsqConfig& cfg) {
  StlsqResult r = prepare(s, cfg);
  const auto tasks = tasks_for(s, cfg);
  std::vector<std::exception_ptr> errors(tasks.size());
  const auto n = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      run_task(s, cfg, tasks[static_cast<std::size_t>(i)], r);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return r;
}

StlsqResult stlsq_serial(const SnapshotMatrices& s, const StlsqConfig& cfg) {
  StlsqResult r = prepare(s, cfg);
  for (const auto& t : tasks_for(s, cfg)) run_task(s, cfg, t, r);
  return r;
}

IdentifiedModel identify(const MeasurementFrame& frame, const LibrarySpec& spec, const StlsqConfig& cfg,
                         std::size_t trim) {
  CandidateLibrary lib(spec);
  const SnapshotMatrices s = build_matrices(frame, lib, trim);
  StlsqResult r = stlsq(s, cfg);
  IdentifiedModel m;
  m.library = spec;
  m.config = cfg;
  m.column_labels = s.column_labels;
  m.target_labels = s.target_labels;
  m.xi = std::move(r.xi);
  m.diagnostics = std::move(r.diagnostics);
  m.f0 = frame.omega0 / kTwoPi;
  m.dt = frame.dt;
  m.samples = static_cast<std::size_t>(s.theta.rows());
  return m;
}

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double den = da.norm() * db.norm();
  return den > 0.0 ? da.dot(db) / den : 0.0;
}

}  // namespace

FitReport compare_coefficients(const Eigen::MatrixXd& xi_true, const Eigen::MatrixXd& xi_hat,
                               const std::vector<std::string>& target_labels) {
  if (xi_true.rows() != xi_hat.rows() || xi_true.cols() != xi_hat.cols())
    throw ConfigError("coefficient matrices differ in shape");
  FitReport rep;
  long tp_all = 0, fp_all = 0, fn_all = 0;
  for (Eigen::Index j = 0; j < xi_true.cols(); ++j) {
    TargetFit f;
    f.target = static_cast<std::size_t>(j) < target_labels.size() ? target_labels[static_cast<std::size_t>(j)]
                                                                  : std::to_string(j);
    f.correlation = pearson(xi_true.col(j), xi_hat.col(j));
    const double nt = xi_true.col(j).norm();
    f.norm_ratio = nt > 0.0 ? xi_hat.col(j).norm() / nt : 0.0;
    long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < xi_true.rows(); ++i) {
      const bool t = xi_true(i, j) != 0.0, h = xi_hat(i, j) != 0.0;
      tp += t && h;
      fp += !t && h;
      fn += t && !h;
    }
    f.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    f.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    rep.targets.push_back(f);
  }
  rep.precision = tp_all + fp_all ? static_cast<double>(tp_all) / static_cast<double>(tp_all + fp_all) : 1.0;
  rep.recall = tp_all + fn_all ? static_cast<double>(tp_all) / static_cast<double>(tp_all + fn_all) : 1.0;
  rep.support_exact = fp_all == 0 && fn_all == 0;
  const double nt = xi_true.norm();
  rep.relative_error = nt > 0.0 ? (xi_hat - xi_true).norm() / nt : (xi_hat - xi_true).norm();
  return rep;
}

}  // namespace pcsindy
