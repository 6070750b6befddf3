#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcsindy/der_models.hpp"
#include "pcsindy/series.hpp"
#include "pcsindy/simulator.hpp"

namespace pcsindy {

// How derivative targets are obtained from PMU data.
//  central-difference: differentiate measured angle and frequency.
//  reported: use the frequency and ROCOF channels, difference ROCOF once for omega_ddot.
//  exact: like reported, but omega_ddot from the noise-free rocof_dot channel.
enum class DerivativeMethod { CentralDifference, Reported, Exact };
enum class IntegralSource { Controller, Trapezoid };

std::string to_string(DerivativeMethod m);
DerivativeMethod parse_derivative_method(const std::string& s);
std::string to_string(IntegralSource s);
IntegralSource parse_integral_source(const std::string& s);

struct PmuConfig {
  double reporting_rate = 120.0;  // frames per second
  double angle_noise = 0.001;     // rad
  double frequency_noise = 0.0005;  // Hz
  double rocof_noise = 0.001;     // Hz/s
  double power_noise = 0.001;     // p.u.
  double vq_noise = 0.0;
  double vq_int_noise = 0.0;
  IntegralSource vq_int_source = IntegralSource::Controller;
  bool noise = true;
  std::uint64_t seed = 0;
  void validate() const;
};

struct PmuSeries {
  std::vector<DerDescriptor> roster;
  SeriesTable table;
  double dt() const;
  std::size_t size() const { return table.rows(); }
};

// Decimates to the reporting rate and adds white Gaussian noise, one independent stream
// per channel. Throws ConfigError when the reporting period is not a whole number of steps.
PmuSeries sample(const Trajectory& traj, const PmuConfig& cfg);

// Channel names a PMU series carries for one DER.
std::vector<std::string> pmu_channels(const DerDescriptor& d);

void write_pmu_csv(const std::filesystem::path& path, const PmuSeries& s);
// Recovers the roster from the header. Throws ConfigError on a missing channel or
// non-uniform timestamps.
PmuSeries read_pmu_csv(const std::filesystem::path& path);
PmuSeries pmu_from_table(SeriesTable table);

// Three-point central difference with second-order one-sided ends. Exact for quadratics.
std::vector<double> central_difference(std::span<const double> y, double dt);
// Centered moving average; the window shrinks symmetrically near the ends. window <= 1 copies.
std::vector<double> moving_average(std::span<const double> y, int window);

struct DerivativeOptions {
  DerivativeMethod method = DerivativeMethod::Reported;
  int smoothing_window = 0;
  double f0 = 60.0;
};

// Per-sample physical quantities in rad and rad/s, named "<der>.<quantity>".
struct MeasurementFrame {
  std::vector<DerDescriptor> roster;
  SeriesTable table;
  double omega0 = 0.0;
  double dt = 0.0;
  std::size_t size() const { return table.rows(); }
};

MeasurementFrame estimate_derivatives(const PmuSeries& s, const DerivativeOptions& opts);

}  // namespace pcsindy
