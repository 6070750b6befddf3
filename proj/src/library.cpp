#include "pcsindy/library.hpp"

#include <cmath>

#include "pcsindy/errors.hpp"

namespace pcsindy {

std::string to_string(LibraryKind k) { return k == LibraryKind::Analytical ? "analytical" : "intuitive"; }

LibraryKind parse_library_kind(const std::string& s) {
  if (s == "analytical") return LibraryKind::Analytical;
  if (s == "intuitive") return LibraryKind::Intuitive;
  throw ConfigError("unknown library '" + s + "'");
}

void LibrarySpec::validate() const {
  if (roster.empty()) throw ConfigError("no DERs");
  if (kind == LibraryKind::Intuitive && (degree < 1 || degree > 4))
    throw ConfigError("intuitive library degree must be between 1 and 4");
}

int CandidateLibrary::variable(const std::string& name) {
  if (name == "omega0") return -1;
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i] == name) return static_cast<int>(i);
  variables_.push_back(name);
  return static_cast<int>(variables_.size() - 1);
}

void CandidateLibrary::add_term(const std::string& der, Op op, std::vector<int> vars,
                                const std::string& label) {
  terms_.push_back({op, std::move(vars)});
  column_labels_.push_back(der + ":" + label);
}

namespace {

// Multisets of size `degree` drawn from n items, lexicographic.
void combinations(int n, int degree, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == degree) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    combinations(n, degree, i, cur, out);
    cur.pop_back();
  }
}

}  // namespace

CandidateLibrary::CandidateLibrary(LibrarySpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (const auto& d : spec_.roster) {
    Block b;
    b.der = d.label;
    b.col_begin = terms_.size();
    b.target_begin = target_labels_.size();
    const auto q = [&](const char* name) { return d.label + "." + name; };
    const bool gfm = d.kind == DerKind::Gfm;

    if (spec_.kind == LibraryKind::Analytical) {
      std::vector<std::string> names = gfm ? std::vector<std::string>{"omega", "omega0", "p", "p_set"}
                                           : std::vector<std::string>{"omega", "omega0", "omega_dot", "vq", "vq_int"};
      for (const auto& n : names) add_term(d.label, Op::Product, {variable(n == "omega0" ? n : q(n.c_str()))}, n);
    } else {
      std::vector<std::string> names{"theta", "omega", "omega0"};
      if (gfm) {
        names.insert(names.end(), {"p", "p_set"});
      } else {
        names.push_back("vq");
        if (spec_.include_vq_int) names.push_back("vq_int");
      }
      std::vector<int> idx;
      for (const auto& n : names) idx.push_back(variable(n == "omega0" ? n : q(n.c_str())));
      add_term(d.label, Op::Constant, {}, "1");
      for (int deg = 1; deg <= spec_.degree; ++deg) {
        std::vector<std::vector<int>> combos;
        std::vector<int> cur;
        combinations(static_cast<int>(names.size()), deg, 0, cur, combos);
        for (const auto& c : combos) {
          std::string label;
          std::vector<int> vars;
          for (int i : c) {
            label += (label.empty() ? "" : "*") + names[static_cast<std::size_t>(i)];
            vars.push_back(idx[static_cast<std::size_t>(i)]);
          }
          add_term(d.label, Op::Product, std::move(vars), label);
        }
      }
      if (spec_.sinusoids) {
        for (const char* s : {"theta", "omega"}) add_term(d.label, Op::Sin, {variable(q(s))}, std::string("sin(") + s + ")");
        for (const char* s : {"theta", "omega"}) add_term(d.label, Op::Cos, {variable(q(s))}, std::string("cos(") + s + ")");
      }
    }
    for (const auto& t : target_names(d.kind)) target_labels_.push_back(q(t.c_str()));
    b.col_count = terms_.size() - b.col_begin;
    b.target_count = target_labels_.size() - b.target_begin;
    blocks_.push_back(b);
  }
}

void CandidateLibrary::evaluate_row(std::span<const double> vars, double omega0, std::span<double> out) const {
  const auto val = [&](int i) { return i < 0 ? omega0 : vars[static_cast<std::size_t>(i)]; };
  for (std::size_t c = 0; c < terms_.size(); ++c) {
    const auto& t = terms_[c];
    double v = 1.0;
    switch (t.op) {
      case Op::Constant: break;
      case Op::Product:
        for (int i : t.vars) v *= val(i);
        break;
      case Op::Sin: v = std::sin(val(t.vars[0])); break;
      case Op::Cos: v = std::cos(val(t.vars[0])); break;
    }
    out[c] = v;
  }
}

std::vector<const std::vector<double>*> CandidateLibrary::bind(const MeasurementFrame& frame) const {
  std::vector<const std::vector<double>*> cols;
  for (const auto& v : variables_) cols.push_back(&frame.table.column(v));
  return cols;
}

Eigen::MatrixXd CandidateLibrary::evaluate(const MeasurementFrame& frame) const {
  const auto cols = bind(frame);
  const auto m = static_cast<long>(frame.size());
  const auto p = static_cast<Eigen::Index>(size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(m, p);
#pragma omp parallel
  {
    std::vector<double> vars(cols.size());
#pragma omp for schedule(static)
    for (long r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < cols.size(); ++i) vars[i] = (*cols[i])[static_cast<std::size_t>(r)];
      evaluate_row(vars, frame.omega0, std::span<double>(out.row(r).data(), static_cast<std::size_t>(p)));
    }
  }
  return out;
}

Eigen::MatrixXd CandidateLibrary::evaluate_serial(const MeasurementFrame& frame) const {
  const auto cols = bind(frame);
  const auto m = static_cast<Eigen::Index>(frame.size());
  const auto p = static_cast<Eigen::Index>(size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(m, p);
  std::vector<double> vars(cols.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < cols.size(); ++i) vars[i] = (*cols[i])[static_cast<std::size_t>(r)];
    evaluate_row(vars, frame.omega0, std::span<double>(out.row(r).data(), static_cast<std::size_t>(p)));
  }
  return out;
}

SnapshotMatrices build_matrices(const MeasurementFrame& frame, const CandidateLibrary& lib, std::size_t trim) {
  if (frame.roster != lib.spec().roster) {
    // Bus ids are not stored in PMU files, so compare labels and kinds only.
    bool same = frame.roster.size() == lib.spec().roster.size();
    for (std::size_t i = 0; same && i < frame.roster.size(); ++i)
      same = frame.roster[i].label == lib.spec().roster[i].label && frame.roster[i].kind == lib.spec().roster[i].kind;
    if (!same) throw ConfigError("library DERs do not match the measured DERs");
  }
  const auto m = frame.size();
  if (2 * trim >= m) throw ConfigError("trimming removes every sample");
  const auto rows = m - 2 * trim;
  if (lib.size() > rows)
    throw ConfigError("library too rich for window: " + std::to_string(lib.size()) + " columns, " +
                      std::to_string(rows) + " samples");
  SnapshotMatrices s;
  const Eigen::MatrixXd full = lib.evaluate(frame);
  s.theta = full.middleRows(static_cast<Eigen::Index>(trim), static_cast<Eigen::Index>(rows));
  s.x_dot.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lib.target_labels().size()));
  for (std::size_t j = 0; j < lib.target_labels().size(); ++j) {
    const auto& c = frame.table.column(lib.target_labels()[j]);
    for (std::size_t r = 0; r < rows; ++r) s.x_dot(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = c[r + trim];
  }
  const auto& t = frame.table.column("t");
  s.time.assign(t.begin() + static_cast<std::ptrdiff_t>(trim), t.begin() + static_cast<std::ptrdiff_t>(trim + rows));
  s.target_labels = lib.target_labels();
  s.column_labels = lib.column_labels();
  s.blocks = lib.blocks();
  if (!s.theta.allFinite() || !s.x_dot.allFinite()) throw NumericalError("non-finite entries in the data matrices");
  return s;
}

}  // namespace pcsindy
