#include "pcsindy/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "pcsindy/errors.hpp"

namespace pcsindy {

using nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ordered_json bus(int id, double load, double pv, double stoch = 0.0) {
  return {{"id", id}, {"voltage", 1.0}, {"load", load}, {"pv", pv}, {"stochastic_std", stoch}};
}

ordered_json line(int from, int to, double b, bool on = true) {
  return {{"from", from}, {"to", to}, {"susceptance", b}, {"in_service", on}};
}

ordered_json gfl(int bus, double kp, double ki, double fc, double zeta) {
  return {{"type", "gfl"}, {"bus", bus}, {"k_p", kp}, {"k_i", ki}, {"omega_c", kTwoPi * fc}, {"zeta", zeta}};
}

}  // namespace

SeedSet derive_seeds(std::uint64_t master) {
  std::uint64_t s = master;
  SeedSet out;
  out.excitation = splitmix64(s);
  out.load = splitmix64(s);
  out.noise = splitmix64(s);
  return out;
}

ordered_json default_config_json() {
  const double f0 = 60.0;
  ordered_json j;
  j["seed"] = 1;
  j["f0"] = f0;
  j["network"]["buses"] = {bus(1, 0.0, 0.0), bus(2, 0.0, 0.3), bus(3, 0.9, 0.2, 0.02), bus(4, 0.3, 0.2),
                           bus(5, 0.0, 0.0)};
  j["network"]["lines"] = {line(1, 2, 8.0), line(2, 3, 6.0), line(3, 4, 7.0), line(1, 4, 5.0, false),
                           line(1, 5, 10.0)};
  j["network"]["grid"] = {{"bus", 5}, {"connected", false}, {"frequency", f0}};
  j["ders"] = {{{"type", "gfm"}, {"bus", 1}, {"omega_c", kTwoPi * 5.0}, {"k_dp", 0.02 * kTwoPi * f0}, {"p_set", 0.5}},
               gfl(2, 20.0, 225.0, 5.0, 0.7), gfl(3, 16.0, 175.0, 4.0, 0.8), gfl(4, 24.0, 275.0, 6.0, 0.6)};
  j["simulation"] = {{"dt", 1.0 / 1200.0}, {"sanity_bound_hz", 2.0}, {"load_knot_period", 0.05}};
  j["excitation"] = {{"enabled", true}, {"components", 12}, {"amplitude", 0.01}, {"f_min", 0.1},
                     {"f_max", 10.0}, {"start", 0.0}, {"end", 10.0}};
  j["identification"] = {{"duration", 10.0}, {"events", ordered_json::array()}};
  j["validation"] = {
      {"duration", 13.0},
      {"events",
       {{{"time", 10.5}, {"kind", "load-step"}, {"bus", 3}, {"magnitude", 0.7}},
        {{"time", 11.0}, {"kind", "pv-step"}, {"bus", 2}, {"magnitude", 0.4}},
        {{"time", 11.5}, {"kind", "grid-connect"}},
        {{"time", 12.0}, {"kind", "grid-disconnect"}},
        {{"time", 12.5}, {"kind", "line-switch"}, {"from", 1}, {"to", 4}, {"in_service", true}}}}};
  j["pmu"] = {{"reporting_rate", 120.0}, {"noise", true},        {"angle_noise", 0.001},
              {"frequency_noise", 0.0005}, {"rocof_noise", 0.001}, {"power_noise", 0.001},
              {"vq_noise", 0.0},           {"vq_int_noise", 0.0},  {"vq_int_source", "controller"}};
  j["derivatives"] = {{"method", "reported"}, {"smoothing_window", 0}, {"trim", 0}};
  j["stlsq"] = {{"threshold", 0.05}, {"max_iters", 10}, {"normalize_columns", true}, {"ridge", 1e-10},
                {"block_structured", true}};
  j["library"]["intuitive"] = {{"degree", 2}, {"sinusoids", true}, {"include_vq_int", false}};
  j["prediction"] = {{"window_start", 10.0}, {"window_end", 13.0}, {"metrics_start", 10.5},
                     {"divergence_cap_hz", 1.0}};
  return j;
}

namespace {

// Rejects keys the defaults do not know, so typos do not pass silently.
void check_known(const ordered_json& user, const ordered_json& def, const std::string& path) {
  if (!user.is_object() || !def.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const auto p = path.empty() ? it.key() : path + "." + it.key();
    if (!def.contains(it.key())) throw ConfigError("unknown config field '" + p + "'");
    check_known(it.value(), def.at(it.key()), p);
  }
}

class Reader {
 public:
  explicit Reader(const ordered_json& root) : root_(root) {}

  template <typename T>
  T get(const ordered_json& obj, const std::string& path, const std::string& key) const {
    const auto p = path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError("missing config field '" + p + "'");
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config field '" + p + "' has the wrong type");
    }
  }

  template <typename T>
  T get_or(const ordered_json& obj, const std::string& path, const std::string& key, T fallback) const {
    return obj.is_object() && obj.contains(key) ? get<T>(obj, path, key) : fallback;
  }

  const ordered_json& root() const { return root_; }

 private:
  const ordered_json& root_;
};

double positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("config field '" + path + "' must be positive");
  return v;
}

std::vector<Event> parse_events(const Reader& r, const ordered_json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError("config field '" + path + "' must be an array");
  std::vector<Event> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    const auto& e = arr[i];
    Event ev;
    ev.time = r.get<double>(e, p, "time");
    try {
      ev.kind = parse_event_kind(r.get<std::string>(e, p, "kind"));
    } catch (const ConfigError& err) {
      throw ConfigError(p + ".kind: " + err.what());
    }
    switch (ev.kind) {
      case EventKind::LoadStep:
      case EventKind::PvStep:
        ev.bus = r.get<int>(e, p, "bus");
        ev.magnitude = r.get<double>(e, p, "magnitude");
        break;
      case EventKind::GridConnect:
        ev.synchronize = r.get_or<bool>(e, p, "synchronize", true);
        break;
      case EventKind::GridDisconnect:
        break;
      case EventKind::LineSwitch:
        ev.from = r.get<int>(e, p, "from");
        ev.to = r.get<int>(e, p, "to");
        ev.in_service = r.get<bool>(e, p, "in_service");
        break;
    }
    out.push_back(ev);
  }
  return out;
}

void check_event_targets(const std::vector<Event>& events, const NetworkModel& net, const std::string& path) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto p = path + "[" + std::to_string(i) + "]";
    try {
      if (e.kind == EventKind::LoadStep || e.kind == EventKind::PvStep) net.index_of(e.bus);
      if (e.kind == EventKind::LineSwitch) apply_event(net, e, std::vector<double>(net.buses.size(), 0.0));
      if ((e.kind == EventKind::GridConnect || e.kind == EventKind::GridDisconnect) && !net.grid.present())
        throw ConfigError("no grid interface configured");
    } catch (const ConfigError& err) {
      throw ConfigError(p + ": " + err.what());
    }
  }
}

}  // namespace

namespace {

RunConfig parse_merged(const ordered_json& user);

}  // namespace

RunConfig parse_config(const ordered_json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  try {
    return parse_merged(user);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

namespace {

RunConfig parse_merged(const ordered_json& user) {
  const auto def = default_config_json();
  check_known(user, def, "");
  ordered_json j = def;
  j.merge_patch(user);

  Reader r(j);
  RunConfig c;
  c.resolved = j;
  c.seed = r.get<std::uint64_t>(j, "config", "seed");
  c.microgrid.sys.f0 = positive(r.get<double>(j, "config", "f0"), "f0");
  const double f0 = c.microgrid.sys.f0;

  const auto& net = j.at("network");
  auto& nm = c.microgrid.network;
  const auto& buses = net.at("buses");
  if (!buses.is_array() || buses.empty()) throw ConfigError("config field 'network.buses' must be a non-empty array");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto p = "network.buses[" + std::to_string(i) + "]";
    BusSpec b;
    b.id = r.get<int>(buses[i], p, "id");
    b.voltage = r.get_or<double>(buses[i], p, "voltage", 1.0);
    b.injection.load = r.get_or<double>(buses[i], p, "load", 0.0);
    b.injection.pv = r.get_or<double>(buses[i], p, "pv", 0.0);
    b.injection.stochastic_std = r.get_or<double>(buses[i], p, "stochastic_std", 0.0);
    nm.buses.push_back(b);
  }
  const auto& lines = net.at("lines");
  if (!lines.is_array()) throw ConfigError("config field 'network.lines' must be an array");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto p = "network.lines[" + std::to_string(i) + "]";
    Line l;
    l.from = r.get<int>(lines[i], p, "from");
    l.to = r.get<int>(lines[i], p, "to");
    l.susceptance = r.get<double>(lines[i], p, "susceptance");
    l.in_service = r.get_or<bool>(lines[i], p, "in_service", true);
    nm.lines.push_back(l);
  }
  if (net.contains("grid") && !net.at("grid").is_null()) {
    const auto& grid = net.at("grid");
    nm.grid.bus_id = r.get<int>(grid, "network.grid", "bus");
    nm.grid.connected = r.get<bool>(grid, "network.grid", "connected");
    nm.grid.frequency = r.get_or<double>(grid, "network.grid", "frequency", f0);
  }

  const auto& ders = j.at("ders");
  if (!ders.is_array() || ders.empty()) throw ConfigError("no DERs");
  std::vector<DerParams> list;
  for (std::size_t i = 0; i < ders.size(); ++i) {
    const auto p = "ders[" + std::to_string(i) + "]";
    const auto type = r.get<std::string>(ders[i], p, "type");
    if (type == "gfm") {
      GfmParams g;
      g.bus_id = r.get<int>(ders[i], p, "bus");
      g.omega_c = r.get<double>(ders[i], p, "omega_c");
      g.k_dp = r.get<double>(ders[i], p, "k_dp");
      g.p_set = r.get<double>(ders[i], p, "p_set");
      list.emplace_back(g);
    } else if (type == "gfl") {
      GflParams g;
      g.bus_id = r.get<int>(ders[i], p, "bus");
      g.k_p = r.get<double>(ders[i], p, "k_p");
      g.k_i = r.get<double>(ders[i], p, "k_i");
      g.omega_c = r.get<double>(ders[i], p, "omega_c");
      g.zeta = r.get<double>(ders[i], p, "zeta");
      list.emplace_back(g);
    } else {
      throw ConfigError("config field '" + p + ".type' must be \"gfm\" or \"gfl\"");
    }
  }
  c.microgrid.ders = sort_by_bus(std::move(list));
  c.microgrid.validate();

  const auto& sim = j.at("simulation");
  const double dt = positive(r.get<double>(sim, "simulation", "dt"), "simulation.dt");
  const double sanity = positive(r.get<double>(sim, "simulation", "sanity_bound_hz"), "simulation.sanity_bound_hz");
  const double knot = positive(r.get<double>(sim, "simulation", "load_knot_period"), "simulation.load_knot_period");

  const auto& pm = j.at("pmu");
  c.pmu.reporting_rate = r.get<double>(pm, "pmu", "reporting_rate");
  c.pmu.noise = r.get<bool>(pm, "pmu", "noise");
  c.pmu.angle_noise = r.get<double>(pm, "pmu", "angle_noise");
  c.pmu.frequency_noise = r.get<double>(pm, "pmu", "frequency_noise");
  c.pmu.rocof_noise = r.get<double>(pm, "pmu", "rocof_noise");
  c.pmu.power_noise = r.get<double>(pm, "pmu", "power_noise");
  c.pmu.vq_noise = r.get<double>(pm, "pmu", "vq_noise");
  c.pmu.vq_int_noise = r.get<double>(pm, "pmu", "vq_int_noise");
  try {
    c.pmu.vq_int_source = parse_integral_source(r.get<std::string>(pm, "pmu", "vq_int_source"));
    c.pmu.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("pmu: ") + e.what());
  }
  const double stride = 1.0 / (c.pmu.reporting_rate * dt);
  if (std::abs(stride - std::round(stride)) > 1e-6 || std::round(stride) < 1.0)
    throw ConfigError("config field 'pmu.reporting_rate' must divide the simulation rate 1/simulation.dt");

  const auto& ex = j.at("excitation");
  std::optional<ExcitationSpec> exc;
  if (r.get<bool>(ex, "excitation", "enabled")) {
    ExcitationSpec e;
    e.components = r.get<int>(ex, "excitation", "components");
    e.amplitude = r.get<double>(ex, "excitation", "amplitude");
    e.f_min = r.get<double>(ex, "excitation", "f_min");
    e.f_max = r.get<double>(ex, "excitation", "f_max");
    e.start = r.get<double>(ex, "excitation", "start");
    e.end = r.get<double>(ex, "excitation", "end");
    try {
      e.validate(c.pmu.reporting_rate);
    } catch (const ConfigError& err) {
      throw ConfigError(std::string("excitation: ") + err.what());
    }
    exc = e;
  }

  for (auto [sc, key] : {std::pair{&c.identification, "identification"}, std::pair{&c.validation, "validation"}}) {
    const auto& s = j.at(key);
    sc->duration = positive(r.get<double>(s, key, "duration"), std::string(key) + ".duration");
    sc->dt = dt;
    sc->sanity_bound_hz = sanity;
    sc->load_knot_period = knot;
    sc->excitation = exc;
    sc->events = parse_events(r, s.at("events"), std::string(key) + ".events");
    check_event_targets(sc->events, nm, std::string(key) + ".events");
    try {
      sc->validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
  }

  const auto& dv = j.at("derivatives");
  try {
    c.derivatives.method = parse_derivative_method(r.get<std::string>(dv, "derivatives", "method"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("derivatives.method: ") + e.what());
  }
  c.derivatives.smoothing_window = r.get<int>(dv, "derivatives", "smoothing_window");
  if (c.derivatives.smoothing_window > 1 && c.derivatives.smoothing_window % 2 == 0)
    throw ConfigError("config field 'derivatives.smoothing_window' must be odd");
  c.derivatives.f0 = f0;
  c.trim = r.get<std::size_t>(dv, "derivatives", "trim");

  const auto& st = j.at("stlsq");
  c.stlsq.threshold = r.get<double>(st, "stlsq", "threshold");
  c.stlsq.max_iters = r.get<int>(st, "stlsq", "max_iters");
  c.stlsq.normalize_columns = r.get<bool>(st, "stlsq", "normalize_columns");
  c.stlsq.ridge = r.get<double>(st, "stlsq", "ridge");
  c.stlsq.block_structured = r.get<bool>(st, "stlsq", "block_structured");
  try {
    c.stlsq.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("stlsq: ") + e.what());
  }

  const auto& il = j.at("library").at("intuitive");
  c.intuitive.kind = LibraryKind::Intuitive;
  c.intuitive.degree = r.get<int>(il, "library.intuitive", "degree");
  c.intuitive.sinusoids = r.get<bool>(il, "library.intuitive", "sinusoids");
  c.intuitive.include_vq_int = r.get<bool>(il, "library.intuitive", "include_vq_int");
  c.intuitive.roster = c.microgrid.roster();
  try {
    c.intuitive.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("library.intuitive: ") + e.what());
  }

  const auto& pr = j.at("prediction");
  c.prediction.window_start = r.get<double>(pr, "prediction", "window_start");
  c.prediction.window_end = r.get<double>(pr, "prediction", "window_end");
  c.prediction.metrics_start = r.get<double>(pr, "prediction", "metrics_start");
  c.prediction.divergence_cap_hz = positive(r.get<double>(pr, "prediction", "divergence_cap_hz"),
                                            "prediction.divergence_cap_hz");
  if (!(c.prediction.window_end > c.prediction.window_start) ||
      c.prediction.window_end > c.validation.duration + 1e-9)
    throw ConfigError("config field 'prediction.window_end' must lie after window_start and within the validation run");

  c.set_seed(c.seed);
  if (!c.pmu.noise) c.disable_noise();
  return c;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  if (path.empty()) return parse_config(ordered_json::object());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  ordered_json user;
  try {
    user = ordered_json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(user);
}

LibrarySpec RunConfig::analytical_spec() const {
  LibrarySpec s;
  s.kind = LibraryKind::Analytical;
  s.roster = microgrid.roster();
  return s;
}

LibrarySpec RunConfig::library_spec(LibraryKind kind) const {
  return kind == LibraryKind::Analytical ? analytical_spec() : intuitive;
}

void RunConfig::set_seed(std::uint64_t master) {
  seed = master;
  resolved["seed"] = master;
  const auto s = derive_seeds(master);
  for (auto* sc : {&identification, &validation}) {
    sc->excitation_seed = s.excitation;
    sc->load_seed = s.load;
  }
  pmu.seed = s.noise;
}

void RunConfig::disable_noise() {
  pmu.noise = false;
  resolved["pmu"]["noise"] = false;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) { return fmt::format("{:016x}", fnv1a64(bytes)); }

}  // namespace pcsindy
