#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcsindy/library.hpp"
#include "pcsindy/sindy.hpp"

namespace pcsindy {

// Evaluates an identified model on measurement frames.
class Predictor {
 public:
  explicit Predictor(IdentifiedModel model);

  const IdentifiedModel& model() const { return model_; }
  // State integrated by each target: "gfm1.omega" for "gfm1.omega_dot", and so on.
  const std::vector<std::string>& state_labels() const { return states_; }

  // Theta(x, u) Xi at one sample.
  Eigen::VectorXd evaluate(const MeasurementFrame& frame, std::size_t row) const;
  // x(t) + dt * Theta(x(t), u(t)) Xi, anchored on the measured state at `row`.
  Eigen::VectorXd predict_step(const MeasurementFrame& frame, std::size_t row) const;
  Eigen::VectorXd measured_state(const MeasurementFrame& frame, std::size_t row) const;

  struct Rollout {
    std::vector<double> time;
    Eigen::MatrixXd states;  // (horizon + 1) x states
    std::optional<double> diverged_at;
  };
  // Feeds predictions back as states; inputs stay measured. Stops at the first non-finite state.
  Rollout rollout(const MeasurementFrame& frame, std::size_t start_row, std::size_t horizon) const;

 private:
  void gather(const MeasurementFrame& frame, std::size_t row, const Eigen::VectorXd* state,
              std::vector<double>& vars) const;

  IdentifiedModel model_;
  CandidateLibrary lib_;
  std::vector<std::string> states_;
  std::vector<int> var_state_;  // library variable -> index in states_, or -1
};

struct OneStepOptions {
  double window_start = 10.0;
  double window_end = 13.0;
};

// Columns: t, then per DER "<der>.f_measured", "<der>.f_predicted", "<der>.f_error" in Hz.
// Row k holds the prediction for t_k made from the sample one period earlier.
SeriesTable one_step_series(const Predictor& p, const MeasurementFrame& frame, const OneStepOptions& opts);

struct ErrorMetrics {
  double rmse = 0.0;
  double max_abs = 0.0;
  std::optional<double> divergence_time;  // first |error| above the cap
  std::size_t samples = 0;
};

// RMSE and peak over samples with t >= metrics_start; divergence is searched over all samples.
ErrorMetrics error_metrics(std::span<const double> time, std::span<const double> predicted,
                           std::span<const double> measured, double metrics_start, double divergence_cap);

}  // namespace pcsindy
