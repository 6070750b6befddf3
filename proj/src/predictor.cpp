#include "pcsindy/predictor.hpp"

#include <cmath>
#include <limits>

#include "pcsindy/errors.hpp"

namespace pcsindy {

Predictor::Predictor(IdentifiedModel model) : model_(std::move(model)), lib_(model_.library) {
  if (lib_.column_labels() != model_.column_labels || lib_.target_labels() != model_.target_labels)
    throw ConfigError("model does not match its library");
  for (const auto& t : model_.target_labels) {
    const auto dot = t.find('.');
    states_.push_back(t.substr(0, dot + 1) + integrated_state_of(t.substr(dot + 1)));
  }
  for (const auto& v : lib_.variables()) {
    int idx = -1;
    for (std::size_t i = 0; i < states_.size(); ++i)
      if (states_[i] == v) idx = static_cast<int>(i);
    var_state_.push_back(idx);
  }
}

void Predictor::gather(const MeasurementFrame& frame, std::size_t row, const Eigen::VectorXd* state,
                       std::vector<double>& vars) const {
  const auto& names = lib_.variables();
  vars.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    vars[i] = state && var_state_[i] >= 0 ? (*state)(var_state_[i]) : frame.table.column(names[i]).at(row);
}

Eigen::VectorXd Predictor::evaluate(const MeasurementFrame& frame, std::size_t row) const {
  std::vector<double> vars;
  gather(frame, row, nullptr, vars);
  Eigen::RowVectorXd theta(static_cast<Eigen::Index>(lib_.size()));
  lib_.evaluate_row(vars, frame.omega0, std::span<double>(theta.data(), lib_.size()));
  return (theta * model_.xi).transpose();
}

Eigen::VectorXd Predictor::measured_state(const MeasurementFrame& frame, std::size_t row) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(states_.size()));
  for (std::size_t i = 0; i < states_.size(); ++i) x(static_cast<Eigen::Index>(i)) = frame.table.column(states_[i]).at(row);
  return x;
}

Eigen::VectorXd Predictor::predict_step(const MeasurementFrame& frame, std::size_t row) const {
  return measured_state(frame, row) + frame.dt * evaluate(frame, row);
}

Predictor::Rollout Predictor::rollout(const MeasurementFrame& frame, std::size_t start_row, std::size_t horizon) const {
  if (start_row + horizon >= frame.size() + 1 || start_row >= frame.size())
    throw ConfigError("rollout runs past the end of the data");
  Rollout r;
  const auto& t = frame.table.column("t");
  Eigen::VectorXd x = measured_state(frame, start_row);
  r.states.resize(static_cast<Eigen::Index>(horizon + 1), x.size());
  r.states.row(0) = x.transpose();
  r.time.push_back(t[start_row]);
  std::vector<double> vars;
  Eigen::RowVectorXd theta(static_cast<Eigen::Index>(lib_.size()));
  for (std::size_t h = 1; h <= horizon; ++h) {
    const auto row = start_row + h - 1;
    gather(frame, row, &x, vars);
    lib_.evaluate_row(vars, frame.omega0, std::span<double>(theta.data(), lib_.size()));
    x += frame.dt * (theta * model_.xi).transpose();
    r.time.push_back(t[start_row] + static_cast<double>(h) * frame.dt);
    if (!x.allFinite()) {
      r.diverged_at = r.time.back();
      r.states.conservativeResize(static_cast<Eigen::Index>(h), Eigen::NoChange);
      r.time.pop_back();
      break;
    }
    r.states.row(static_cast<Eigen::Index>(h)) = x.transpose();
  }
  return r;
}

SeriesTable one_step_series(const Predictor& p, const MeasurementFrame& frame, const OneStepOptions& opts) {
  if (!(opts.window_end > opts.window_start)) throw ConfigError("prediction window is empty");
  const auto& t = frame.table.column("t");
  std::vector<std::size_t> omega_idx;
  std::vector<std::string> ders;
  for (std::size_t i = 0; i < p.state_labels().size(); ++i) {
    const auto& s = p.state_labels()[i];
    const auto dot = s.find('.');
    if (s.substr(dot + 1) == "omega") {
      omega_idx.push_back(i);
      ders.push_back(s.substr(0, dot));
    }
  }
  SeriesTable out;
  out.add_column("t");
  for (const auto& d : ders)
    for (const char* s : {".f_measured", ".f_predicted", ".f_error"}) out.add_column(d + s);
  const double tol = 1e-9;
  std::vector<double> row;
  for (std::size_t k = 0; k + 1 < frame.size(); ++k) {
    if (t[k] < opts.window_start - tol || t[k + 1] > opts.window_end + tol) continue;
    const Eigen::VectorXd xp = p.predict_step(frame, k);
    row.assign(1, t[k + 1]);
    for (std::size_t i = 0; i < ders.size(); ++i) {
      const double fm = frame.table.column(p.state_labels()[omega_idx[i]])[k + 1] / kTwoPi;
      const double fp = xp(static_cast<Eigen::Index>(omega_idx[i])) / kTwoPi;
      row.insert(row.end(), {fm, fp, fp - fm});
    }
    out.append_row(row);
  }
  if (out.rows() == 0) throw ConfigError("prediction window holds no samples");
  return out;
}

ErrorMetrics error_metrics(std::span<const double> time, std::span<const double> predicted,
                           std::span<const double> measured, double metrics_start, double divergence_cap) {
  if (time.size() != predicted.size() || time.size() != measured.size())
    throw ConfigError("error metric inputs differ in length");
  ErrorMetrics m;
  double sum = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    double e = std::abs(predicted[i] - measured[i]);
    if (!std::isfinite(e)) e = std::numeric_limits<double>::infinity();
    if (!m.divergence_time && e > divergence_cap) m.divergence_time = time[i];
    if (time[i] < metrics_start - 1e-9) continue;
    sum += e * e;
    m.max_abs = std::max(m.max_abs, e);
    ++m.samples;
  }
  m.rmse = m.samples ? std::sqrt(sum / static_cast<double>(m.samples)) : 0.0;
  return m;
}

}  // namespace pcsindy
