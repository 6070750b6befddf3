#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pcsindy {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SystemConstants {
  double f0 = 60.0;
  double omega0() const { return kTwoPi * f0; }
};

// Droop-controlled grid-forming inverter.
struct GfmParams {
  int bus_id = 0;
  double omega_c = 0.0;  // low-pass filter bandwidth, rad/s
  double k_dp = 0.0;     // P-f droop gain, rad/s per p.u.
  double p_set = 0.0;    // power setpoint, p.u.
  void validate() const;
};

// Grid-following inverter with a PI phase-locked loop and a second-order frequency filter.
struct GflParams {
  int bus_id = 0;
  double k_p = 0.0;
  double k_i = 0.0;
  double omega_c = 0.0;
  double zeta = 0.0;
  void validate() const;
};

struct GfmState {
  double theta = 0.0;
  double omega = 0.0;
};

struct GflState {
  double theta = 0.0;
  double omega = 0.0;
  double omega_dot = 0.0;
  double vq_int = 0.0;
};

struct GfmRates {
  double theta_dot = 0.0;
  double omega_dot = 0.0;
};

struct GflRates {
  double theta_dot = 0.0;
  double omega_dot = 0.0;
  double omega_ddot = 0.0;
  double vq_int_dot = 0.0;
  double omega_pll = 0.0;  // unfiltered PLL output
};

GfmRates gfm_derivative(const GfmState& x, double p, double p_set, const GfmParams& par,
                        const SystemConstants& sys);
GflRates gfl_derivative(const GflState& x, double vq, const GflParams& par,
                        const SystemConstants& sys);

// Filtered frequency reached by a GFM holding output p.
double gfm_steady_omega(double p, double p_set, const GfmParams& par, const SystemConstants& sys);

// Rows: [omega, omega0, p, p_set]; columns: [theta_dot, omega_dot].
Eigen::MatrixXd analytical_xi_gfm(const GfmParams& par);
// Rows: [omega, omega0, omega_dot, vq, vq_int]; columns: [theta_dot, omega_dot, omega_ddot].
Eigen::MatrixXd analytical_xi_gfl(const GflParams& par);
// Block-diagonal concatenation. Throws ConfigError on an empty list.
Eigen::MatrixXd assemble_xi(std::span<const Eigen::MatrixXd> blocks);

enum class DerKind { Gfm, Gfl };

using DerParams = std::variant<GfmParams, GflParams>;

DerKind kind_of(const DerParams& d);
int bus_of(const DerParams& d);

// A DER as it appears in data files: label like "gfm1" or "gfl3" (kind + ordinal, 1-based
// across all DERs in bus order).
struct DerDescriptor {
  std::string label;
  DerKind kind = DerKind::Gfm;
  int bus_id = -1;
  bool operator==(const DerDescriptor&) const = default;
};

// Sorts DERs by bus id. Throws ConfigError on duplicate buses.
std::vector<DerParams> sort_by_bus(std::vector<DerParams> ders);
std::vector<DerDescriptor> make_roster(std::span<const DerParams> sorted_ders);
// Recovers kind and ordinal from a label; bus id is left at -1.
DerDescriptor parse_der_label(const std::string& label);

Eigen::MatrixXd analytical_xi(std::span<const DerParams> sorted_ders);

// Per-DER state and target names, in the order used by the analytical library.
const std::vector<std::string>& state_names(DerKind kind);
const std::vector<std::string>& target_names(DerKind kind);
// "omega_ddot" -> "omega_dot", "theta_dot" -> "theta".
std::string integrated_state_of(const std::string& target);

}  // namespace pcsindy
