#include "pcsindy/pmu.hpp"

#include <cmath>
#include <random>

#include "pcsindy/errors.hpp"

namespace pcsindy {

std::string to_string(DerivativeMethod m) {
  switch (m) {
    case DerivativeMethod::CentralDifference: return "central-difference";
    case DerivativeMethod::Reported: return "reported";
    case DerivativeMethod::Exact: return "exact";
  }
  return "?";
}

DerivativeMethod parse_derivative_method(const std::string& s) {
  for (auto m : {DerivativeMethod::CentralDifference, DerivativeMethod::Reported, DerivativeMethod::Exact})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown derivative method '" + s + "'");
}

std::string to_string(IntegralSource s) {
  return s == IntegralSource::Controller ? "controller" : "trapezoid";
}

IntegralSource parse_integral_source(const std::string& s) {
  if (s == "controller") return IntegralSource::Controller;
  if (s == "trapezoid") return IntegralSource::Trapezoid;
  throw ConfigError("unknown vq integral source '" + s + "'");
}

void PmuConfig::validate() const {
  if (!(reporting_rate > 0.0)) throw ConfigError("pmu.reporting_rate must be positive");
  for (double s : {angle_noise, frequency_noise, rocof_noise, power_noise, vq_noise, vq_int_noise})
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("pmu noise levels must be non-negative");
}

double PmuSeries::dt() const {
  const auto& t = table.column("t");
  if (t.size() < 2) throw ConfigError("PMU series needs at least two samples");
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

std::vector<std::string> pmu_channels(const DerDescriptor& d) {
  std::vector<std::string> out;
  const auto add = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) out.push_back(d.label + "." + n);
  };
  if (d.kind == DerKind::Gfm)
    add({"theta", "f", "rocof", "p", "p_set"});
  else
    add({"theta", "f", "f_pll", "rocof", "rocof_dot", "vq", "vq_int"});
  return out;
}

PmuSeries sample(const Trajectory& traj, const PmuConfig& cfg) {
  cfg.validate();
  const double ratio = 1.0 / (cfg.reporting_rate * traj.dt);
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-6)
    throw ConfigError("reporting period is not a whole number of simulation steps");
  const auto& src = traj.table;
  if (src.rows() < stride + 1) throw ConfigError("trajectory shorter than one reporting period");

  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < src.rows(); r += stride) rows.push_back(r);

  PmuSeries out;
  out.roster = traj.roster;
  auto& tab = out.table;
  const auto pick = [&](const std::string& name, double scale = 1.0) {
    const auto& c = src.column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto r : rows) v.push_back(c[r] * scale);
    return v;
  };
  const double to_hz = 1.0 / kTwoPi;
  tab.add_column("t", pick("t"));

  std::uint64_t stream = 0;
  const auto noisy = [&](std::vector<double> v, double sd) {
    ++stream;
    if (cfg.noise && sd > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(stream)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> nd(0.0, sd);
      for (auto& x : v) x += nd(rng);
    }
    return v;
  };

  for (const auto& d : traj.roster) {
    const auto& l = d.label;
    tab.add_column(l + ".theta", noisy(pick(l + ".theta"), cfg.angle_noise));
    tab.add_column(l + ".f", noisy(pick(l + ".omega", to_hz), cfg.frequency_noise));
    if (d.kind == DerKind::Gfm) {
      tab.add_column(l + ".rocof", noisy(pick(l + ".omega_dot", to_hz), cfg.rocof_noise));
      tab.add_column(l + ".p", noisy(pick(l + ".p"), cfg.power_noise));
      tab.add_column(l + ".p_set", pick(l + ".p_set"));
    } else {
      tab.add_column(l + ".f_pll", noisy(pick(l + ".omega_pll", to_hz), cfg.frequency_noise));
      tab.add_column(l + ".rocof", noisy(pick(l + ".omega_dot", to_hz), cfg.rocof_noise));
      tab.add_column(l + ".rocof_dot", pick(l + ".omega_ddot", to_hz));
      auto vq = noisy(pick(l + ".vq"), cfg.vq_noise);
      std::vector<double> vq_int;
      if (cfg.vq_int_source == IntegralSource::Controller) {
        vq_int = noisy(pick(l + ".vq_int"), cfg.vq_int_noise);
      } else {
        ++stream;
        const double h = static_cast<double>(stride) * traj.dt;
        vq_int.assign(vq.size(), 0.0);
        for (std::size_t k = 1; k < vq.size(); ++k) vq_int[k] = vq_int[k - 1] + 0.5 * h * (vq[k] + vq[k - 1]);
      }
      tab.add_column(l + ".vq", std::move(vq));
      tab.add_column(l + ".vq_int", std::move(vq_int));
    }
  }

  const auto& ev = src.column("event");
  std::vector<double> codes(rows.size(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    int code = 0;
    const std::size_t lo = k == 0 ? 0 : rows[k - 1] + 1;
    for (std::size_t r = lo; r <= rows[k]; ++r) code |= static_cast<int>(ev[r]);
    codes[k] = code;
  }
  tab.add_column("event", std::move(codes));
  return out;
}

void write_pmu_csv(const std::filesystem::path& path, const PmuSeries& s) { write_csv(path, s.table); }

PmuSeries pmu_from_table(SeriesTable table) {
  PmuSeries s;
  table.index_of("t");
  for (const auto& name : table.names()) {
    const auto dot = name.find('.');
    if (dot == std::string::npos) continue;
    const auto label = name.substr(0, dot);
    bool seen = false;
    for (const auto& d : s.roster) seen = seen || d.label == label;
    if (!seen) s.roster.push_back(parse_der_label(label));
  }
  if (s.roster.empty()) throw ConfigError("PMU data has no DER channels");
  for (const auto& d : s.roster)
    for (const auto& c : pmu_channels(d)) table.index_of(c);
  if (!table.has("event")) table.add_column("event");
  const auto& t = table.column("t");
  if (t.size() < 2) throw ConfigError("PMU data needs at least two samples");
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) throw ConfigError("PMU timestamps must increase");
  for (std::size_t k = 1; k < t.size(); ++k)
    if (std::abs(t[k] - t[k - 1] - dt) > 1e-6 * dt)
      throw ConfigError("non-uniform PMU timestamps at row " + std::to_string(k));
  s.table = std::move(table);
  return s;
}

PmuSeries read_pmu_csv(const std::filesystem::path& path) { return pmu_from_table(read_csv(path)); }

std::vector<double> central_difference(std::span<const double> y, double dt) {
  const auto n = y.size();
  if (n < 3) throw ConfigError("central difference needs at least 3 samples");
  std::vector<double> d(n);
  const double inv = 1.0 / (2.0 * dt);
  d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) * inv;
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (y[k + 1] - y[k - 1]) * inv;
  d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) * inv;
  return d;
}

std::vector<double> moving_average(std::span<const double> y, int window) {
  std::vector<double> out(y.begin(), y.end());
  if (window <= 1) return out;
  if (window % 2 == 0) throw ConfigError("smoothing window must be odd");
  const auto n = static_cast<long>(y.size());
  const long half = window / 2;
  for (long k = 0; k < n; ++k) {
    const long h = std::min({half, k, n - 1 - k});
    double s = 0.0;
    for (long j = k - h; j <= k + h; ++j) s += y[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(k)] = s / static_cast<double>(2 * h + 1);
  }
  return out;
}

MeasurementFrame estimate_derivatives(const PmuSeries& s, const DerivativeOptions& opts) {
  if (s.size() < 3) throw ConfigError("need at least 3 PMU samples to estimate derivatives");
  MeasurementFrame fr;
  fr.roster = s.roster;
  fr.omega0 = kTwoPi * opts.f0;
  fr.dt = s.dt();
  const auto& in = s.table;
  auto& out = fr.table;
  const int w = opts.smoothing_window;
  const auto scaled = [](const std::vector<double>& v, double k) {
    std::vector<double> r(v);
    for (auto& x : r) x *= k;
    return r;
  };
  const auto diff = [&](const std::vector<double>& v) { return central_difference(moving_average(v, w), fr.dt); };

  out.add_column("t", in.column("t"));
  for (const auto& d : s.roster) {
    const auto& l = d.label;
    const auto theta = in.column(l + ".theta");
    const auto omega = scaled(in.column(l + ".f"), kTwoPi);
    std::vector<double> theta_dot, omega_dot;
    if (opts.method == DerivativeMethod::CentralDifference) {
      theta_dot = diff(theta);
      omega_dot = diff(omega);
    } else {
      theta_dot = scaled(in.column(l + (d.kind == DerKind::Gfm ? ".f" : ".f_pll")), kTwoPi);
      for (auto& x : theta_dot) x -= fr.omega0;
      omega_dot = scaled(in.column(l + ".rocof"), kTwoPi);
    }
    out.add_column(l + ".theta", theta);
    out.add_column(l + ".omega", omega);
    out.add_column(l + ".theta_dot", theta_dot);
    out.add_column(l + ".omega_dot", omega_dot);
    if (d.kind == DerKind::Gfm) {
      out.add_column(l + ".p", in.column(l + ".p"));
      out.add_column(l + ".p_set", in.column(l + ".p_set"));
    } else {
      std::vector<double> omega_ddot = opts.method == DerivativeMethod::Exact
                                           ? scaled(in.column(l + ".rocof_dot"), kTwoPi)
                                           : diff(omega_dot);
      out.add_column(l + ".omega_ddot", std::move(omega_ddot));
      out.add_column(l + ".vq", in.column(l + ".vq"));
      out.add_column(l + ".vq_int", in.column(l + ".vq_int"));
    }
  }
  return fr;
}

}  // namespace pcsindy
