#pragma once

#include "phtopo/features.hpp"
#include "phtopo/tracking.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phtopo {

/// Declarative loop: a coordinate line, a circle or an explicit polygon.
struct LoopSpec {
  enum class Kind { Coordinate, Circle, Polygon };
  Kind kind = Kind::Coordinate;
  Axis axis = Axis::Y;          // direction of travel for a coordinate loop
  double fixed = 0.0;           // the other coordinate
  double start = -kPi;          // coordinate loops run from start to start + 2 pi
  ParamPoint center{0, 0};
  double radius = 0.1;
  std::vector<ParamPoint> vertices;
  int n_steps = 400;
};

LoopPath build_loop(const LoopSpec& spec, SpaceTopology topo);

enum class ObservableKind { EPCount, PHLCensus, LoopClass, Winding };

struct Observable {
  ObservableKind kind = ObservableKind::EPCount;
  std::optional<LoopSpec> loop;  // loop_class and winding
  std::optional<cd> e_ref;       // winding; centroid when empty
  std::string name() const;
};

struct SweepSpec {
  std::string model;
  nlohmann::json base_params = nlohmann::json::object();
  std::optional<SpaceTopology> topology;
  std::string parameter;
  double lo = 0.0, hi = 1.0;
  int samples = 11;
  std::vector<Observable> observables;
  ScanOptions scan;             // scan.threads also drives sample concurrency
  TrackOptions track;
  FeatureOptions features;
  double tol = 1e-4;            // bisection width
  int retry_resolution = 401;
};

struct SampleRecord {
  double value = 0.0;
  bool valid = true;
  std::string error;
  std::map<std::string, std::string> observables; // discrete values by observable name
  nlohmann::json details = nlohmann::json::object();
};

struct Transition {
  std::string observable;
  double value = 0.0;  // bracket midpoint
  double lo = 0.0, hi = 0.0;
  std::string before, after;
  bool resolved = true; // false when bisection stopped on a failed evaluation
  std::string description;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SampleRecord> samples;
  std::vector<Transition> transitions;
};

/// Model for one value of the swept parameter.
BlochModel sweep_model(const SweepSpec& spec, double value);

/// Discrete value of one observable, e.g. "2", "1^1 2^1", "imag(0,1)x1".
std::string evaluate(const SweepSpec& spec, const Observable& obs, double value, int resolution = 0);

/// All observables at one parameter value; shares one grid scan between the
/// feature observables. Errors mark the record invalid.
SampleRecord evaluate_sample(const SweepSpec& spec, double value, int resolution = 0);

/// Bisection between parameter values whose observable differs. The bracket
/// keeps the value seen at `lo` on its left end. Throws NoSignChange when the
/// two ends agree.
Transition find_transition(const SweepSpec& spec, const Observable& obs, double lo, double hi, double tol);

/// Samples the range (concurrently) and bisects every bracket where an
/// observable changes between valid neighbours.
SweepResult run_sweep(const SweepSpec& spec);

} // namespace phtopo
