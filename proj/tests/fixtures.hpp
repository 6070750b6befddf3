// Shared scenario fixtures built from the default configuration.
#pragma once

#include "pcsindy/config.hpp"
#include "pcsindy/simulator.hpp"

namespace fixture {

inline pcsindy::RunConfig defaults(std::uint64_t seed = 1) {
  auto cfg = pcsindy::parse_config(nlohmann::ordered_json::object());
  cfg.set_seed(seed);
  return cfg;
}

// Excited identification run of the default microgrid.
inline pcsindy::Trajectory excited(double duration = 10.0, std::uint64_t seed = 1) {
  auto cfg = defaults(seed);
  cfg.identification.duration = duration;
  if (cfg.identification.excitation) cfg.identification.excitation->end = duration;
  return pcsindy::simulate(cfg.identification, cfg.microgrid);
}

}  // namespace fixture
