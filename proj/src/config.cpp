#include "phtopo/config.hpp"

#include "phtopo/errors.hpp"
#include "phtopo/registry.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <regex>

namespace phtopo {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double parse_angle(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw ConfigError("expected a number or an angle string, got " + j.dump());
  static const std::regex re(R"(^\s*([+-]?)\s*([0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*([0-9]+\.?[0-9]*))?\s*$)");
  std::smatch m;
  const std::string s = j.get<std::string>();
  if (!std::regex_match(s, m, re)) throw ConfigError("cannot read angle '" + s + "'");
  double v = kPi;
  if (m[2].length() > 0) v *= std::stod(m[2].str());
  if (m[3].length() > 0) v /= std::stod(m[3].str());
  return m[1] == "-" ? -v : v;
}

namespace {

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j[key].get<double>();
}

int integer(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return j[key].get<int>();
}

ParamPoint point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be [kx, ky]");
  return {parse_angle(j[0]), parse_angle(j[1])};
}

SpaceTopology topology(const json& j) {
  if (!j.is_string()) throw ConfigError("topology must be a string");
  try {
    return topology_from_string(j.get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

} // namespace

LoopSpec parse_loop(const json& j) {
  if (!j.is_object()) throw ConfigError("loop must be an object");
  LoopSpec l;
  const std::string kind = j.value("kind", std::string("coordinate"));
  if (kind == "coordinate") {
    check_keys(j, {"kind", "axis", "fixed", "start", "n_steps"}, "coordinate loop");
    const std::string axis = j.value("axis", std::string("ky"));
    if (axis != "kx" && axis != "ky") throw ConfigError("loop axis must be 'kx' or 'ky'");
    l.kind = LoopSpec::Kind::Coordinate;
    l.axis = axis == "kx" ? Axis::X : Axis::Y;
    l.fixed = j.contains("fixed") ? parse_angle(j["fixed"]) : 0.0;
    l.start = j.contains("start") ? parse_angle(j["start"]) : -kPi;
  } else if (kind == "circle") {
    check_keys(j, {"kind", "center", "radius", "n_steps"}, "circle loop");
    l.kind = LoopSpec::Kind::Circle;
    if (!j.contains("center")) throw ConfigError("circle loop needs a center");
    l.center = point(j["center"], "center");
    l.radius = number(j, "radius", 0.1);
    if (!(l.radius > 0)) throw ConfigError("circle radius must be positive");
  } else if (kind == "polygon") {
    check_keys(j, {"kind", "vertices", "n_steps"}, "polygon loop");
    l.kind = LoopSpec::Kind::Polygon;
    if (!j.contains("vertices") || !j["vertices"].is_array()) throw ConfigError("polygon loop needs vertices");
    for (const auto& v : j["vertices"]) l.vertices.push_back(point(v, "vertex"));
  } else {
    throw ConfigError("unknown loop kind '" + kind + "'");
  }
  l.n_steps = integer(j, "n_steps", 400);
  if (l.n_steps < 8) throw ConfigError("n_steps must be at least 8");
  return l;
}

RunConfig parse_config(const json& j) {
  check_keys(j, {"model", "params", "topology", "grid", "task", "output", "tolerances", "seed", "perturbation"}, "config");
  RunConfig c;
  if (!j.contains("model") || !j["model"].is_string()) throw ConfigError("config needs a model name");
  c.model = j["model"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("params must be an object");
    c.params = j["params"];
  }
  if (j.contains("topology")) c.topology = topology(j["topology"]);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"nx", "ny", "window"}, "grid");
    c.nx = integer(g, "nx", c.nx);
    c.ny = integer(g, "ny", c.ny);
    if (g.contains("window")) {
      const json& w = g["window"];
      check_keys(w, {"kx", "ky"}, "grid.window");
      if (w.contains("kx")) {
        const ParamPoint r = point(w["kx"], "window.kx");
        c.window.x0 = r.x();
        c.window.x1 = r.y();
      }
      if (w.contains("ky")) {
        const ParamPoint r = point(w["ky"], "window.ky");
        c.window.y0 = r.x();
        c.window.y1 = r.y();
      }
    }
  }
  if (c.nx < 32 || c.ny < 32) throw ConfigError("grid needs at least 32 nodes per axis");
  if (j.contains("task")) {
    if (!j["task"].is_object()) throw ConfigError("task must be an object");
    c.task = j["task"];
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output must be a directory path");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, {"root", "ambiguity_ratio", "max_refine", "separation", "ep_tol", "bisection"}, "tolerances");
    c.tol.root = number(t, "root", c.tol.root);
    c.tol.ambiguity_ratio = number(t, "ambiguity_ratio", c.tol.ambiguity_ratio);
    c.tol.max_refine = integer(t, "max_refine", c.tol.max_refine);
    c.tol.separation = number(t, "separation", c.tol.separation);
    c.tol.ep_tol = number(t, "ep_tol", c.tol.ep_tol);
    c.tol.bisection = number(t, "bisection", c.tol.bisection);
    if (!(c.tol.ambiguity_ratio > 1.0)) throw ConfigError("ambiguity_ratio must exceed 1");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) throw ConfigError("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("perturbation")) {
    check_keys(j["perturbation"], {"onsite"}, "perturbation");
    c.onsite_noise = number(j["perturbation"], "onsite", 0.0);
  }
  // validate the model block before any computation
  c.build_model();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

BlochModel RunConfig::build_model() const {
  BlochModel m = make_model(model, params, topology);
  if (onsite_noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> r(0.0, 1.0);
    std::vector<cd> shift;
    for (int i = 0; i < m.dimension; ++i) shift.push_back(std::polar(onsite_noise * r(rng), kTwoPi * r(rng)));
    if (m.params.contains("onsite"))
      for (int i = 0; i < m.dimension; ++i)
        shift[static_cast<std::size_t>(i)] += complex_from_json(m.params["onsite"][static_cast<std::size_t>(i)]);
    m = with_onsite(std::move(m), shift);
  }
  return m;
}

ScanOptions RunConfig::scan_options(int threads) const {
  ScanOptions o;
  o.nx = nx;
  o.ny = ny;
  o.threads = threads;
  o.tol = tol.root;
  o.window = window;
  return o;
}

TrackOptions RunConfig::track_options() const {
  TrackOptions t;
  t.tol = tol.root;
  t.max_refine = tol.max_refine;
  t.ambiguity_ratio = tol.ambiguity_ratio;
  return t;
}

FeatureOptions RunConfig::feature_options() const {
  FeatureOptions f;
  f.separation = tol.separation;
  f.ep_tol = tol.ep_tol;
  return f;
}

SweepSpec parse_sweep(const RunConfig& cfg, int threads) {
  const json& t = cfg.task;
  check_keys(t, {"parameter", "range", "samples", "observables", "retry_resolution"}, "sweep task");
  SweepSpec s;
  s.model = cfg.model;
  s.base_params = cfg.params;
  s.topology = cfg.topology;
  if (!t.contains("parameter") || !t["parameter"].is_string()) throw ConfigError("sweep needs a parameter name");
  s.parameter = t["parameter"].get<std::string>();
  if (!t.contains("range") || !t["range"].is_array() || t["range"].size() != 2) throw ConfigError("sweep needs range [lo, hi]");
  s.lo = parse_angle(t["range"][0]);
  s.hi = parse_angle(t["range"][1]);
  if (!(s.lo < s.hi)) throw ConfigError("sweep range needs lo < hi");
  s.samples = integer(t, "samples", 11);
  if (s.samples < 2) throw ConfigError("sweep needs at least 2 samples");
  s.retry_resolution = integer(t, "retry_resolution", 401);
  s.scan = cfg.scan_options(threads);
  s.scan.max_refine = std::max(s.scan.max_refine, cfg.tol.max_refine);
  s.track = cfg.track_options();
  s.features = cfg.feature_options();
  s.tol = cfg.tol.bisection;
  if (!t.contains("observables") || !t["observables"].is_array() || t["observables"].empty())
    throw ConfigError("sweep needs a list of observables");
  for (const auto& o : t["observables"]) {
    Observable obs;
    const json spec = o.is_string() ? json{{"kind", o}} : o;
    check_keys(spec, {"kind", "loop", "e_ref"}, "observable");
    const std::string kind = spec.value("kind", std::string());
    if (kind == "ep_count") obs.kind = ObservableKind::EPCount;
    else if (kind == "phl_census") obs.kind = ObservableKind::PHLCensus;
    else if (kind == "loop_class") obs.kind = ObservableKind::LoopClass;
    else if (kind == "winding") obs.kind = ObservableKind::Winding;
    else throw ConfigError("unknown observable '" + kind + "'");
    if (obs.kind == ObservableKind::LoopClass || obs.kind == ObservableKind::Winding) {
      if (!spec.contains("loop")) throw ConfigError(kind + " observable needs a loop");
      obs.loop = parse_loop(spec["loop"]);
    }
    if (spec.contains("e_ref") && !spec["e_ref"].is_null()) obs.e_ref = complex_from_json(spec["e_ref"]);
    s.observables.push_back(obs);
  }
  // the swept parameter must exist and accept the range ends
  const auto& entry = find_model(cfg.model);
  if (std::none_of(entry.params.begin(), entry.params.end(), [&](const ParamSchema& p) { return p.name == s.parameter; }))
    throw ConfigError("model '" + cfg.model + "' has no parameter '" + s.parameter + "'");
  sweep_model(s, s.lo);
  sweep_model(s, s.hi);
  return s;
}

} // namespace phtopo
