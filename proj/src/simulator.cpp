#include "pcsindy/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcsindy/errors.hpp"

namespace pcsindy {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

constexpr double kEventTol = 1e-9;

}  // namespace

void ExcitationSpec::validate(double reporting_rate) const {
  if (components < 0) throw ConfigError("excitation.components must be non-negative");
  if (!(amplitude > 0.0)) throw ConfigError("excitation.amplitude must be positive");
  if (!(f_min > 0.0) || !(f_max >= f_min)) throw ConfigError("excitation band is empty");
  if (f_max >= 0.5 * reporting_rate)
    throw ConfigError("excitation.f_max exceeds the Nyquist limit of the reporting rate");
  if (!(end > start)) throw ConfigError("excitation window is empty");
}

Excitation::Excitation(const ExcitationSpec& spec, std::size_t channels, std::uint64_t seed)
    : start_(spec.start), end_(spec.end) {
  for (std::size_t c = 0; c < channels; ++c) {
    auto rng = make_rng(seed, c);
    std::uniform_real_distribution<double> fdist(spec.f_min, spec.f_max), pdist(0.0, kTwoPi),
        adist(0.2, 1.0);
    std::vector<Tone> tones;
    for (int k = 0; k < spec.components; ++k) {
      const double f = fdist(rng), ph = pdist(rng), a = adist(rng);
      tones.push_back({f, ph, a});
    }
    // Peak on a dense grid plus the largest possible excursion between grid points.
    const double h = 1e-4;
    double lipschitz = 0.0;
    for (const auto& tn : tones) lipschitz += tn.amp * kTwoPi * tn.freq;
    double peak = 0.0;
    const auto n = static_cast<long>(std::ceil((end_ - start_) / h));
    for (long i = 0; i <= n; ++i) {
      const double t = start_ + static_cast<double>(i) * h;
      double v = 0.0;
      for (const auto& tn : tones) v += tn.amp * std::sin(kTwoPi * tn.freq * t + tn.phase);
      peak = std::max(peak, std::abs(v));
    }
    const double bound = peak + 0.5 * h * lipschitz;
    scale_.push_back(bound > 0.0 ? spec.amplitude / bound : 0.0);
    tones_.push_back(std::move(tones));
  }
}

double Excitation::value(std::size_t channel, double t) const {
  if (tones_.empty() || t < start_ || t > end_) return 0.0;
  double v = 0.0;
  for (const auto& tn : tones_.at(channel)) v += tn.amp * std::sin(kTwoPi * tn.freq * t + tn.phase);
  return scale_[channel] * v;
}

StochasticLoad::StochasticLoad(std::span<const double> stds, double knot_period, double duration,
                               std::uint64_t seed)
    : period_(knot_period) {
  if (!(knot_period > 0.0)) throw ConfigError("stochastic load knot period must be positive");
  const auto n = static_cast<std::size_t>(std::floor(duration / knot_period)) + 5;
  for (std::size_t b = 0; b < stds.size(); ++b) {
    std::vector<double> k;
    if (stds[b] > 0.0) {
      auto rng = make_rng(seed, b);
      std::normal_distribution<double> nd(0.0, stds[b]);
      k.resize(n);
      for (auto& v : k) v = nd(rng);
    }
    knots_.push_back(std::move(k));
  }
}

double StochasticLoad::value(std::size_t bus_index, double t) const {
  if (bus_index >= knots_.size() || knots_[bus_index].empty()) return 0.0;
  const auto& k = knots_[bus_index];
  const double s = std::max(t, 0.0) / period_;
  auto i = static_cast<std::size_t>(std::floor(s));
  i = std::min(i, k.size() - 4);
  const double a = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
  const double a2 = a * a, a3 = a2 * a;
  const double b0 = (1 - a) * (1 - a) * (1 - a) / 6.0;
  const double b1 = (3 * a3 - 6 * a2 + 4) / 6.0;
  const double b2 = (-3 * a3 + 3 * a2 + 3 * a + 1) / 6.0;
  const double b3 = a3 / 6.0;
  return b0 * k[i] + b1 * k[i + 1] + b2 * k[i + 2] + b3 * k[i + 3];
}

void Microgrid::validate() const {
  if (!(sys.f0 > 0.0)) throw ConfigError("f0 must be positive");
  network.validate();
  if (ders.empty()) throw ConfigError("no DERs");
  bool has_gfm = false;
  int prev = -1;
  bool first = true;
  for (const auto& d : ders) {
    const int bus = bus_of(d);
    if (!first && bus <= prev) throw ConfigError("DERs must be sorted by bus with one DER per bus");
    first = false;
    prev = bus;
    network.index_of(bus);
    if (bus == network.grid.bus_id) throw ConfigError("DER at the grid interface bus " + std::to_string(bus));
    std::visit([](const auto& p) { p.validate(); }, d);
    has_gfm = has_gfm || kind_of(d) == DerKind::Gfm;
  }
  if (!has_gfm) throw ConfigError("at least one GFM is needed as an angle reference");
  if (network.grid.present() && std::abs(network.grid.frequency / sys.f0 - 1.0) > 0.05)
    throw ConfigError("grid frequency must lie within 5% of f0");
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ConfigError("scenario duration must be positive");
  if (!(dt > 0.0) || dt > duration) throw ConfigError("simulation time step must be in (0, duration]");
  const double steps = duration / dt;
  if (std::abs(steps - std::round(steps)) > 1e-6)
    throw ConfigError("duration must be a whole number of simulation steps");
  for (const auto& e : events)
    if (!std::isfinite(e.time) || e.time < 0.0 || e.time > duration + kEventTol)
      throw ConfigError("event time " + std::to_string(e.time) + " lies outside [0, duration]");
}

Plant::Plant(Microgrid mg, Excitation exc, StochasticLoad load)
    : mg_(std::move(mg)), exc_(std::move(exc)), load_(std::move(load)) {
  offsets_.push_back(0);
  std::size_t gfm_count = 0;
  for (const auto& d : mg_.ders) {
    const bool gfm = kind_of(d) == DerKind::Gfm;
    offsets_.push_back(offsets_.back() + (gfm ? 2 : 4));
    der_bus_.push_back(mg_.network.index_of(bus_of(d)));
    gfm_channel_.push_back(gfm ? gfm_count++ : 0);
  }
  fixed_.assign(mg_.network.buses.size(), false);
  warm_.assign(mg_.network.buses.size(), 0.0);
}

Algebraics Plant::solve_network(const Eigen::VectorXd& x, double t) {
  const auto& net = mg_.network;
  const auto nb = net.buses.size();
  std::fill(fixed_.begin(), fixed_.end(), false);
  for (std::size_t k = 0; k < mg_.ders.size(); ++k)
    if (kind_of(mg_.ders[k]) == DerKind::Gfm) {
      fixed_[der_bus_[k]] = true;
      warm_[der_bus_[k]] = x(offsets_[k]);
    }
  if (net.grid.present() && net.grid.connected) {
    const auto g = net.index_of(net.grid.bus_id);
    fixed_[g] = true;
    warm_[g] = net.grid.angle_at(t, mg_.sys.f0);
  }
  std::vector<double> inj(nb), local(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& in = net.buses[i].injection;
    local[i] = in.pv - in.load - load_.value(i, t);
    inj[i] = local[i];
  }
  Algebraics a;
  a.max_mismatch = solve_algebraic_angles(net, warm_, inj, fixed_).max_mismatch;
  a.bus_angles = warm_;
  const auto p = active_power_injections(net, a.bus_angles);
  for (double v : p) a.power_balance += v;

  const auto nd = mg_.ders.size();
  a.gfm_p.assign(nd, 0.0);
  a.gfm_p_set.assign(nd, 0.0);
  a.gfl_vq.assign(nd, 0.0);
  a.gfl_omega_pll.assign(nd, 0.0);
  for (std::size_t k = 0; k < nd; ++k) {
    const auto b = der_bus_[k];
    if (const auto* g = std::get_if<GfmParams>(&mg_.ders[k])) {
      // Output covers network export plus whatever is consumed locally.
      a.gfm_p[k] = p[b] - local[b];
      a.gfm_p_set[k] = g->p_set + exc_.value(gfm_channel_[k], t);
    } else {
      a.gfl_vq[k] = vq_at_gfl(a.bus_angles[b], x(offsets_[k]), net.buses[b].voltage);
    }
  }
  return a;
}

Eigen::VectorXd Plant::rhs(const Eigen::VectorXd& x, double t, Algebraics* alg) {
  Algebraics a = solve_network(x, t);
  Eigen::VectorXd dx(x.size());
  for (std::size_t k = 0; k < mg_.ders.size(); ++k) {
    const auto o = offsets_[k];
    if (const auto* g = std::get_if<GfmParams>(&mg_.ders[k])) {
      const auto r = gfm_derivative({x(o), x(o + 1)}, a.gfm_p[k], a.gfm_p_set[k], *g, mg_.sys);
      dx(o) = r.theta_dot;
      dx(o + 1) = r.omega_dot;
    } else {
      const auto& par = std::get<GflParams>(mg_.ders[k]);
      const auto r = gfl_derivative({x(o), x(o + 1), x(o + 2), x(o + 3)}, a.gfl_vq[k], par, mg_.sys);
      dx(o) = r.theta_dot;
      dx(o + 1) = r.omega_dot;
      dx(o + 2) = r.omega_ddot;
      dx(o + 3) = r.vq_int_dot;
      a.gfl_omega_pll[k] = r.omega_pll;
    }
  }
  if (alg) *alg = std::move(a);
  return dx;
}

Eigen::VectorXd Plant::rk4_step(const Eigen::VectorXd& x, double t, double h) {
  const Eigen::VectorXd k1 = rhs(x, t);
  const Eigen::VectorXd k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
  const Eigen::VectorXd k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
  const Eigen::VectorXd k4 = rhs(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd Plant::equilibrium(double t) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_size()));
  for (std::size_t k = 0; k < mg_.ders.size(); ++k)
    if (kind_of(mg_.ders[k]) == DerKind::Gfm) x(offsets_[k] + 1) = mg_.sys.omega0();
  // GFM angles at zero fix the bus angles; PLLs then lock onto their buses.
  const Algebraics a = solve_network(x, t);
  double omega_ref = mg_.sys.omega0();
  bool have_ref = false;
  for (std::size_t k = 0; k < mg_.ders.size(); ++k)
    if (const auto* g = std::get_if<GfmParams>(&mg_.ders[k])) {
      const double w = gfm_steady_omega(a.gfm_p[k], a.gfm_p_set[k], *g, mg_.sys);
      x(offsets_[k] + 1) = w;
      if (!have_ref) omega_ref = w;
      have_ref = true;
    }
  for (std::size_t k = 0; k < mg_.ders.size(); ++k)
    if (const auto* g = std::get_if<GflParams>(&mg_.ders[k])) {
      const auto o = offsets_[k];
      x(o) = a.bus_angles[der_bus_[k]];
      x(o + 1) = omega_ref;
      x(o + 2) = 0.0;
      x(o + 3) = omega_ref / g->k_i;
    }
  return x;
}

void Plant::apply(const Event& ev, const Eigen::VectorXd& x, double t) {
  const Algebraics a = solve_network(x, t);
  mg_.network = apply_event(std::move(mg_.network), ev, a.bus_angles);
}

namespace {

struct Recorder {
  Trajectory traj;
  std::vector<double> row;

  Recorder(const Microgrid& mg, double dt) {
    traj.roster = mg.roster();
    traj.dt = dt;
    traj.f0 = mg.sys.f0;
    auto& t = traj.table;
    t.add_column("t");
    for (const auto& d : traj.roster) {
      const auto& l = d.label;
      if (d.kind == DerKind::Gfm) {
        for (const char* s : {".theta", ".omega", ".theta_dot", ".omega_dot", ".p", ".p_set"})
          t.add_column(l + s);
      } else {
        for (const char* s : {".theta", ".omega", ".omega_dot", ".vq_int", ".theta_dot", ".omega_ddot",
                              ".vq", ".omega_pll"})
          t.add_column(l + s);
      }
    }
    for (const auto& b : mg.network.buses) t.add_column("bus" + std::to_string(b.id) + ".angle");
    t.add_column("event");
  }

  void record(Plant& plant, const Eigen::VectorXd& x, double t, int events, double sanity_hz) {
    Algebraics a;
    const Eigen::VectorXd dx = plant.rhs(x, t, &a);
    row.clear();
    row.push_back(t);
    const auto& mg = plant.microgrid();
    const double f0 = mg.sys.f0;
    for (std::size_t k = 0; k < mg.ders.size(); ++k) {
      const auto o = static_cast<Eigen::Index>(plant.offset(k));
      if (kind_of(mg.ders[k]) == DerKind::Gfm) {
        row.insert(row.end(), {x(o), x(o + 1), dx(o), dx(o + 1), a.gfm_p[k], a.gfm_p_set[k]});
      } else {
        row.insert(row.end(), {x(o), x(o + 1), x(o + 2), x(o + 3), dx(o), dx(o + 2), a.gfl_vq[k],
                               a.gfl_omega_pll[k]});
      }
      const double dev = std::abs(x(o + 1) / kTwoPi - f0);
      traj.max_frequency_deviation_hz = std::max(traj.max_frequency_deviation_hz, dev);
      if (!(dev <= sanity_hz)) traj.within_sanity_bound = false;
    }
    row.insert(row.end(), a.bus_angles.begin(), a.bus_angles.end());
    row.push_back(static_cast<double>(events));
    traj.max_power_mismatch = std::max(traj.max_power_mismatch, a.max_mismatch);
    traj.max_power_balance = std::max(traj.max_power_balance, std::abs(a.power_balance));
    traj.table.append_row(row);
  }
};

Plant make_plant(const Scenario& sc, const Microgrid& mg) {
  sc.validate();
  mg.validate();
  std::size_t gfms = 0;
  for (const auto& d : mg.ders) gfms += kind_of(d) == DerKind::Gfm;
  Excitation exc;
  if (sc.excitation) exc = Excitation(*sc.excitation, gfms, sc.excitation_seed);
  std::vector<double> stds;
  for (const auto& b : mg.network.buses) stds.push_back(b.injection.stochastic_std);
  return Plant(mg, std::move(exc), StochasticLoad(stds, sc.load_knot_period, sc.duration, sc.load_seed));
}

Trajectory run(const Scenario& sc, Plant& plant, Eigen::VectorXd x, bool x_given) {
  auto events = sc.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  const auto n = static_cast<long>(std::llround(sc.duration / sc.dt));
  Recorder rec(plant.microgrid(), sc.dt);
  rec.traj.table.reserve(static_cast<std::size_t>(n + 1));
  std::size_t next = 0;

  auto apply_due = [&](double t) {
    int code = 0;
    while (next < events.size() && events[next].time <= t + kEventTol) {
      plant.apply(events[next], x, t);
      code |= event_code(events[next].kind);
      ++next;
    }
    return code;
  };

  try {
    if (!x_given) x = plant.equilibrium(0.0);
    int code = apply_due(0.0);
    rec.record(plant, x, 0.0, code, sc.sanity_bound_hz);
    for (long k = 0; k < n; ++k) {
      double t = static_cast<double>(k) * sc.dt;
      const double t_next = static_cast<double>(k + 1) * sc.dt;
      code = 0;
      while (next < events.size() && events[next].time < t_next - kEventTol) {
        const double te = events[next].time;
        if (te > t) {
          x = plant.rk4_step(x, t, te - t);
          t = te;
        }
        code |= apply_due(t);
      }
      x = plant.rk4_step(x, t, t_next - t);
      if (!x.allFinite())
        throw NumericalError("state became non-finite at t=" + std::to_string(t_next));
      code |= apply_due(t_next);
      rec.record(plant, x, t_next, code, sc.sanity_bound_hz);
    }
  } catch (const NumericalError& e) {
    throw SimulationError(e.what(), std::move(rec.traj));
  }
  return std::move(rec.traj);
}

}  // namespace

Trajectory simulate(const Scenario& sc, const Microgrid& mg) {
  Plant plant = make_plant(sc, mg);
  return run(sc, plant, Eigen::VectorXd(), false);
}

Trajectory simulate(const Scenario& sc, const Microgrid& mg, const Eigen::VectorXd& x0) {
  Plant plant = make_plant(sc, mg);
  if (static_cast<std::size_t>(x0.size()) != plant.state_size())
    throw ConfigError("initial state has " + std::to_string(x0.size()) + " entries, plant needs " +
                      std::to_string(plant.state_size()));
  return run(sc, plant, x0, true);
}

}  // namespace pcsindy
