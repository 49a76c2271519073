#pragma once

#include "phtopo/features.hpp"
#include "phtopo/sweeps.hpp"

#include <json.hpp>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>

namespace phtopo {

struct Tolerances {
  double root = kRootTol;
  double ambiguity_ratio = kAmbiguityRatio;
  int max_refine = 14;
  double separation = 1e-6;
  double ep_tol = 1e-9;
  double bisection = 1e-4;
};

/// Parsed batch configuration. Unknown keys anywhere raise ConfigError.
struct RunConfig {
  std::string model;
  nlohmann::json params = nlohmann::json::object();
  std::optional<SpaceTopology> topology;
  int nx = 201, ny = 201;
  Window window;
  nlohmann::json task = nlohmann::json::object();
  std::string output = "out";
  Tolerances tol;
  std::uint64_t seed = 0;
  double onsite_noise = 0.0; // random onsite shifts of at most this size, drawn from `seed`

  BlochModel build_model() const;
  ScanOptions scan_options(int threads) const;
  TrackOptions track_options() const;
  FeatureOptions feature_options() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Number, or a string such as "pi", "-pi/2", "3pi/2", "0.25pi".
double parse_angle(const nlohmann::json& j);

/// Raises ConfigError naming the first key of `j` not in `allowed`.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

LoopSpec parse_loop(const nlohmann::json& j);

/// Sweep block of a config: parameter, range, samples, observables, ...
SweepSpec parse_sweep(const RunConfig& cfg, int threads);

} // namespace phtopo
