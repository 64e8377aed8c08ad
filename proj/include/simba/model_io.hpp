#pragma once

#include <filesystem>
#include <iosfwd>

#include "simba/arx.hpp"
#include "simba/state_space.hpp"

namespace simba {

// Plain-text `key = value` model files. Numbers use the shortest round-trip
// decimal form, so a write/read cycle reproduces every entry exactly.
//
//   format = simba-ss 1
//   n = 2   m = 1   p = 1         (one key per line)
//   stability = schur
//   gamma = 1
//   A = 0.5 0.1; 0 0.3            (rows separated by ';')
//   B = ...  C = ...  D = ...
//   W = ...  V = ...  eps_tilde = ...   (schur mode, optional free parameters)
//   x0.<id> = 0.1 -0.2            (optional, repeatable)
//   u_mean = ...  u_std = ...  y_mean = ...  y_std = ...   (optional scaler)

void write_model(std::ostream& out, const StateSpaceModel& model);
void save_model(const std::filesystem::path& path, const StateSpaceModel& model);

/// Throws ParseError on malformed lines and ConfigError on missing keys,
/// inconsistent shapes, or a schur model whose A is not stable.
StateSpaceModel read_model(std::istream& in);
StateSpaceModel load_model(const std::filesystem::path& path);

//   format = simba-arx 1
//   na, nb, p, m, feedthrough
//   a1..a<na> (p × p), b1..b<nb> (p × m), b0 when feedthrough is on

void write_arx(std::ostream& out, const ArxModel& model);
ArxModel read_arx(std::istream& in);

}  // namespace simba
