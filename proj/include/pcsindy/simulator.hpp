#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "pcsindy/der_models.hpp"
#include "pcsindy/errors.hpp"
#include "pcsindy/network.hpp"
#include "pcsindy/series.hpp"

namespace pcsindy {

struct ExcitationSpec {
  int components = 12;
  double amplitude = 0.01;  // hard bound on |u(t)|, p.u.
  double f_min = 0.1;       // Hz
  double f_max = 10.0;
  double start = 0.0;
  double end = 10.0;
  // Throws ConfigError when the band reaches the Nyquist limit of the reporting rate.
  void validate(double reporting_rate) const;
};

// Sum of random sinusoids added to each GFM power setpoint on [start, end].
// Each GFM gets an independent realization. Scaled so |u| <= amplitude holds everywhere.
class Excitation {
 public:
  Excitation() = default;
  Excitation(const ExcitationSpec& spec, std::size_t channels, std::uint64_t seed);
  double value(std::size_t channel, double t) const;

 private:
  struct Tone {
    double freq, phase, amp;
  };
  std::vector<std::vector<Tone>> tones_;
  std::vector<double> scale_;
  double start_ = 0.0, end_ = 0.0;
};

// Smooth zero-mean random load: uniform cubic B-spline through Gaussian knots.
class StochasticLoad {
 public:
  StochasticLoad() = default;
  StochasticLoad(std::span<const double> stds, double knot_period, double duration, std::uint64_t seed);
  double value(std::size_t bus_index, double t) const;

 private:
  std::vector<std::vector<double>> knots_;
  double period_ = 1.0;
};

struct Microgrid {
  SystemConstants sys;
  std::vector<DerParams> ders;  // sorted by bus
  NetworkModel network;
  void validate() const;
  std::vector<DerDescriptor> roster() const { return make_roster(ders); }
};

struct Scenario {
  double duration = 10.0;
  double dt = 1.0 / 1200.0;
  std::vector<Event> events;
  std::optional<ExcitationSpec> excitation;
  std::uint64_t excitation_seed = 0;
  std::uint64_t load_seed = 0;
  double load_knot_period = 0.05;
  double sanity_bound_hz = 2.0;
  void validate() const;
};

// Algebraic quantities resolved at one instant.
struct Algebraics {
  std::vector<double> bus_angles;
  std::vector<double> gfm_p;      // per DER slot, 0 for GFLs
  std::vector<double> gfm_p_set;  // includes excitation
  std::vector<double> gfl_vq;
  std::vector<double> gfl_omega_pll;
  double max_mismatch = 0.0;
  double power_balance = 0.0;  // sum of bus injections, zero for a lossless network
};

// Differential-algebraic plant. State layout per DER in bus order:
// GFM [theta, omega], GFL [theta, omega, omega_dot, vq_int].
class Plant {
 public:
  Plant(Microgrid mg, Excitation exc, StochasticLoad load);

  std::size_t state_size() const { return static_cast<std::size_t>(offsets_.back()); }
  std::size_t offset(std::size_t der) const { return static_cast<std::size_t>(offsets_[der]); }
  const Microgrid& microgrid() const { return mg_; }
  const NetworkModel& network() const { return mg_.network; }

  // Steady operating point: GFMs at droop frequency, PLLs locked with zero vq.
  Eigen::VectorXd equilibrium(double t = 0.0);
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, double t, Algebraics* alg = nullptr);
  Eigen::VectorXd rk4_step(const Eigen::VectorXd& x, double t, double h);
  void apply(const Event& ev, const Eigen::VectorXd& x, double t);

 private:
  Algebraics solve_network(const Eigen::VectorXd& x, double t);

  Microgrid mg_;
  Excitation exc_;
  StochasticLoad load_;
  std::vector<int> offsets_;
  std::vector<std::size_t> der_bus_;
  std::vector<std::size_t> gfm_channel_;
  std::vector<bool> fixed_;
  std::vector<double> warm_;
};

struct Trajectory {
  std::vector<DerDescriptor> roster;
  SeriesTable table;
  double dt = 0.0;
  double f0 = 60.0;
  double max_frequency_deviation_hz = 0.0;
  bool within_sanity_bound = true;
  double max_power_mismatch = 0.0;
  double max_power_balance = 0.0;
};

class SimulationError : public NumericalError {
 public:
  SimulationError(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// Integrates the scenario with RK4 on a fixed grid. Events split the step so no stage
// straddles a discontinuity; their effect shows from the row at the event time onward.
Trajectory simulate(const Scenario& sc, const Microgrid& mg);
Trajectory simulate(const Scenario& sc, const Microgrid& mg, const Eigen::VectorXd& x0);

}  // namespace pcsindy
