#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "pcsindy/library.hpp"
#include "pcsindy/pmu.hpp"
#include "pcsindy/predictor.hpp"
#include "pcsindy/simulator.hpp"
#include "pcsindy/sindy.hpp"

namespace pcsindy {

struct PredictionConfig {
  double window_start = 10.0;
  double window_end = 13.0;
  double metrics_start = 10.5;
  double divergence_cap_hz = 1.0;
};

struct SeedSet {
  std::uint64_t excitation = 0;
  std::uint64_t load = 0;
  std::uint64_t noise = 0;
};

// Independent sub-seeds from one master seed (splitmix64 stream).
SeedSet derive_seeds(std::uint64_t master);

struct RunConfig {
  std::uint64_t seed = 1;
  Microgrid microgrid;
  Scenario identification;
  Scenario validation;
  PmuConfig pmu;
  DerivativeOptions derivatives;
  std::size_t trim = 0;
  StlsqConfig stlsq;
  LibrarySpec intuitive;
  PredictionConfig prediction;
  nlohmann::ordered_json resolved;

  LibrarySpec analytical_spec() const;
  LibrarySpec library_spec(LibraryKind kind) const;
  // Re-derives every sub-seed from `master`.
  void set_seed(std::uint64_t master);
  void disable_noise();
};

// Built-in configuration as JSON. User files are merged over it.
nlohmann::ordered_json default_config_json();
// Throws ConfigError naming the offending field path.
RunConfig parse_config(const nlohmann::ordered_json& user);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace pcsindy
