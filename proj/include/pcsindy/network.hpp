#pragma once

#include <span>
#include <string>
#include <vector>

namespace pcsindy {

// Scheduled active power at a bus, p.u. Net injection is pv - load - stochastic(t).
struct InjectionProfile {
  double load = 0.0;
  double pv = 0.0;
  double stochastic_std = 0.0;  // std of the smooth random load component
};

struct BusSpec {
  int id = 0;
  double voltage = 1.0;
  InjectionProfile injection;
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  // p.u., lossless
  bool in_service = true;
};

// Stiff external grid behind one bus. While connected, that bus angle follows
// angle_ref + 2*pi*(frequency - f0)*(t - t_ref).
struct GridInterface {
  int bus_id = -1;
  bool connected = false;
  double frequency = 60.0;  // Hz
  double angle_ref = 0.0;
  double t_ref = 0.0;
  bool present() const { return bus_id >= 0; }
  double angle_at(double t, double f0) const;
};

struct NetworkModel {
  std::vector<BusSpec> buses;
  std::vector<Line> lines;
  GridInterface grid;

  // Throws ConfigError for an unknown bus id.
  std::size_t index_of(int bus_id) const;
  bool energized(std::size_t bus_index) const;
  bool line_energized(const Line& l) const;
  void validate() const;
};

// Lossless power flow: P_i = sum_j V_i V_j B_ij sin(theta_i - theta_j), over energized lines.
std::vector<double> active_power_injections(const NetworkModel& net, std::span<const double> angles);

struct PowerFlowOptions {
  double tolerance = 1e-12;
  int max_iterations = 30;
};

struct PowerFlowResult {
  int iterations = 0;
  double max_mismatch = 0.0;
};

// Newton solve for the angles of energized buses not marked fixed. Fixed entries of
// `angles` are held; free entries are the warm start and are overwritten.
// Throws NumericalError when a free bus has no path to a fixed bus or Newton fails.
PowerFlowResult solve_algebraic_angles(const NetworkModel& net, std::vector<double>& angles,
                                       std::span<const double> injections,
                                       const std::vector<bool>& fixed,
                                       const PowerFlowOptions& opts = {});

// q-axis voltage seen by a PLL.
double vq_at_gfl(double bus_angle, double pll_angle, double voltage);

enum class EventKind { LoadStep, PvStep, GridConnect, GridDisconnect, LineSwitch };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::LoadStep;
  int bus = -1;           // load-step, pv-step
  double magnitude = 0.0; // load-step, pv-step (p.u., additive)
  int from = -1;          // line-switch
  int to = -1;
  bool in_service = true; // line-switch
  bool synchronize = true;  // grid-connect: phase-align the grid with the point of coupling
};

int event_code(EventKind kind);
std::string to_string(EventKind kind);
EventKind parse_event_kind(const std::string& s);

// Returns the network with the event applied. `angles` are bus angles at the event instant,
// used to synchronize a grid reconnection. Throws ConfigError for unknown buses or lines.
NetworkModel apply_event(NetworkModel net, const Event& ev, std::span<const double> angles);

}  // namespace pcsindy
