#include "pcsindy/network.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <set>

#include "pcsindy/der_models.hpp"
#include "pcsindy/errors.hpp"

namespace pcsindy {

double GridInterface::angle_at(double t, double f0) const {
  return angle_ref + kTwoPi * (frequency - f0) * (t - t_ref);
}

std::size_t NetworkModel::index_of(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return i;
  throw ConfigError("unknown bus " + std::to_string(bus_id));
}

bool NetworkModel::energized(std::size_t i) const {
  return buses[i].id != grid.bus_id || grid.connected;
}

bool NetworkModel::line_energized(const Line& l) const {
  return l.in_service && energized(index_of(l.from)) && energized(index_of(l.to));
}

void NetworkModel::validate() const {
  if (buses.empty()) throw ConfigError("network has no buses");
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw ConfigError("duplicate bus " + std::to_string(b.id));
    if (!(b.voltage > 0.0)) throw ConfigError("bus " + std::to_string(b.id) + " voltage must be positive");
    if (!(b.injection.stochastic_std >= 0.0))
      throw ConfigError("bus " + std::to_string(b.id) + " stochastic_std must be non-negative");
  }
  for (const auto& l : lines) {
    index_of(l.from);
    index_of(l.to);
    if (l.from == l.to) throw ConfigError("line from bus " + std::to_string(l.from) + " to itself");
    if (!(l.susceptance > 0.0))
      throw ConfigError("line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
                        " susceptance must be positive");
  }
  if (grid.present()) index_of(grid.bus_id);
}

std::vector<double> active_power_injections(const NetworkModel& net, std::span<const double> angles) {
  std::vector<double> p(net.buses.size(), 0.0);
  for (const auto& l : net.lines) {
    if (!net.line_energized(l)) continue;
    const auto i = net.index_of(l.from), j = net.index_of(l.to);
    const double flow =
        net.buses[i].voltage * net.buses[j].voltage * l.susceptance * std::sin(angles[i] - angles[j]);
    p[i] += flow;
    p[j] -= flow;
  }
  return p;
}

namespace {

void check_reachable(const NetworkModel& net, const std::vector<bool>& fixed) {
  const auto n = net.buses.size();
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (fixed[i] && net.energized(i)) {
      seen[i] = true;
      queue.push_back(i);
    }
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (const auto& l : net.lines) {
      if (!net.line_energized(l)) continue;
      const auto a = net.index_of(l.from), b = net.index_of(l.to);
      const auto other = a == i ? b : (b == i ? a : n);
      if (other < n && !seen[other]) {
        seen[other] = true;
        queue.push_back(other);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (net.energized(i) && !seen[i])
      throw NumericalError("power flow diverged: bus " + std::to_string(net.buses[i].id) +
                           " has no path to an angle reference");
}

}  // namespace

PowerFlowResult solve_algebraic_angles(const NetworkModel& net, std::vector<double>& angles,
                                       std::span<const double> injections,
                                       const std::vector<bool>& fixed, const PowerFlowOptions& opts) {
  const auto n = net.buses.size();
  if (angles.size() != n || injections.size() != n || fixed.size() != n)
    throw ConfigError("power flow inputs do not match the bus count");

  std::vector<int> slot(n, -1);
  int m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (net.energized(i) && !fixed[i]) slot[i] = m++;
  PowerFlowResult res;
  if (m == 0) return res;
  check_reachable(net, fixed);

  struct Edge {
    std::size_t i, j;
    double k;
  };
  std::vector<Edge> edges;
  for (const auto& l : net.lines) {
    if (!net.line_energized(l)) continue;
    const auto i = net.index_of(l.from), j = net.index_of(l.to);
    edges.push_back({i, j, net.buses[i].voltage * net.buses[j].voltage * l.susceptance});
  }

  Eigen::VectorXd f(m);
  Eigen::MatrixXd jac(m, m);
  for (int it = 0; it <= opts.max_iterations; ++it) {
    f.setZero();
    jac.setZero();
    for (const auto& e : edges) {
      const double d = angles[e.i] - angles[e.j];
      const double flow = e.k * std::sin(d), g = e.k * std::cos(d);
      const int si = slot[e.i], sj = slot[e.j];
      if (si >= 0) {
        f(si) += flow;
        jac(si, si) += g;
        if (sj >= 0) jac(si, sj) -= g;
      }
      if (sj >= 0) {
        f(sj) -= flow;
        jac(sj, sj) += g;
        if (si >= 0) jac(sj, si) -= g;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (slot[i] >= 0) f(slot[i]) -= injections[i];
    res.iterations = it;
    res.max_mismatch = f.cwiseAbs().maxCoeff();
    if (!std::isfinite(res.max_mismatch)) break;
    if (res.max_mismatch <= opts.tolerance) return res;
    if (it == opts.max_iterations) break;
    const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    if (!dx.allFinite()) break;
    for (std::size_t i = 0; i < n; ++i)
      if (slot[i] >= 0) angles[i] -= dx(slot[i]);
  }
  throw NumericalError("power flow diverged (mismatch " + std::to_string(res.max_mismatch) +
                       " p.u. after " + std::to_string(res.iterations) + " iterations)");
}

double vq_at_gfl(double bus_angle, double pll_angle, double voltage) {
  return voltage * std::sin(bus_angle - pll_angle);
}

int event_code(EventKind kind) {
  switch (kind) {
    case EventKind::LoadStep: return 1;
    case EventKind::PvStep: return 2;
    case EventKind::GridConnect: return 4;
    case EventKind::GridDisconnect: return 8;
    case EventKind::LineSwitch: return 16;
  }
  return 0;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::LoadStep: return "load-step";
    case EventKind::PvStep: return "pv-step";
    case EventKind::GridConnect: return "grid-connect";
    case EventKind::GridDisconnect: return "grid-disconnect";
    case EventKind::LineSwitch: return "line-switch";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& s) {
  for (auto k : {EventKind::LoadStep, EventKind::PvStep, EventKind::GridConnect,
                 EventKind::GridDisconnect, EventKind::LineSwitch})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown event kind '" + s + "'");
}

NetworkModel apply_event(NetworkModel net, const Event& ev, std::span<const double> angles) {
  switch (ev.kind) {
    case EventKind::LoadStep:
      net.buses[net.index_of(ev.bus)].injection.load += ev.magnitude;
      break;
    case EventKind::PvStep:
      net.buses[net.index_of(ev.bus)].injection.pv += ev.magnitude;
      break;
    case EventKind::GridConnect: {
      if (!net.grid.present()) throw ConfigError("grid-connect event but no grid interface");
      net.grid.connected = true;
      net.grid.t_ref = ev.time;
      net.grid.angle_ref = 0.0;
      if (ev.synchronize) {
        const Line* link = nullptr;
        for (const auto& l : net.lines)
          if (l.in_service && (l.from == net.grid.bus_id || l.to == net.grid.bus_id)) {
            link = &l;
            break;
          }
        if (!link) throw ConfigError("grid bus " + std::to_string(net.grid.bus_id) + " has no line");
        const int pcc = link->from == net.grid.bus_id ? link->to : link->from;
        net.grid.angle_ref = angles[net.index_of(pcc)];
      } else {
        net.grid.t_ref = 0.0;
      }
      break;
    }
    case EventKind::GridDisconnect:
      if (!net.grid.present()) throw ConfigError("grid-disconnect event but no grid interface");
      net.grid.connected = false;
      break;
    case EventKind::LineSwitch: {
      bool found = false;
      for (auto& l : net.lines)
        if ((l.from == ev.from && l.to == ev.to) || (l.from == ev.to && l.to == ev.from)) {
          l.in_service = ev.in_service;
          found = true;
        }
      if (!found)
        throw ConfigError("unknown line " + std::to_string(ev.from) + "-" + std::to_string(ev.to));
      break;
    }
  }
  return net;
}

}  // namespace pcsindy
