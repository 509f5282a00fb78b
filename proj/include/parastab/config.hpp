#pragma once

// JSON run configuration with sections "plant", "synthesis" and "sim".
//
//   {
//     "plant": {"preset": "paper-siv", "l1": 15},
//     "synthesis": {"delta": 1, "N": 5, "gamma_grid": [5, 10], "rho_grid": [1.24e-4]},
//     "sim": {"modes": 60, "dt": 1e-4, "t_end": 5},
//     "seed": 1,
//     "output": "out"
//   }
//
// A preset is loaded first and any other plant field overrides it. Errors
// name the offending field path, or the line and column for syntax errors.

#include <parastab/model.hpp>
#include <parastab/sim.hpp>
#include <parastab/synthesis.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace parastab {

struct InitialCondition {
  enum class Kind { Random, Zero, Mode };
  Kind kind = Kind::Random;
  int excited = 8;
  double amplitude = 1.0;
  int mode = 1;       // Kind::Mode: phi_mode in `component`
  int component = 1;
};

struct RunConfig {
  PlantSpec plant;
  std::string preset;  // empty when the plant is given inline
  SynthesisConfig synthesis;
  SimConfig sim;
  InitialCondition initial;
  int runs = 1;                 // simulated initial conditions (seed, seed + 1, ...)
  double fit_start = 1.0;
  double fit_end = 4.0;
  int basis_modes = 0;          // 0: enough for sim and synthesis
  double beta1 = 0.5;           // for the constructive estimate
  std::uint64_t seed = 1;
  std::string output = "out";

  int resolved_basis_modes() const;
};

// Preset names: "paper-siv".
RunConfig preset_config(std::string_view name);

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

}  // namespace parastab
