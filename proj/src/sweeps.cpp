#include "phtopo/sweeps.hpp"

#include "phtopo/errors.hpp"
#include "phtopo/parallel.hpp"
#include "phtopo/registry.hpp"

#include <cmath>
#include <sstream>

namespace phtopo {

LoopPath build_loop(const LoopSpec& spec, SpaceTopology topo) {
  switch (spec.kind) {
  case LoopSpec::Kind::Coordinate: {
    LoopPath p = coordinate_loop(spec.axis, spec.fixed, spec.n_steps, topo);
    const double shift = spec.start + kPi;
    for (auto& v : p.vertices) (spec.axis == Axis::X ? v.x() : v.y()) += shift;
    return p;
  }
  case LoopSpec::Kind::Circle:
    return circle_loop(spec.center, spec.radius, spec.n_steps);
  case LoopSpec::Kind::Polygon: {
    if (spec.vertices.size() < 3) throw InvalidParams("polygon loop needs at least 3 vertices");
    LoopPath p;
    p.vertices = spec.vertices;
    if ((p.vertices.back() - p.vertices.front()).norm() > 1e-12) p.vertices.push_back(p.vertices.front());
    p.wraps = homology_class(spec.vertices, topo);
    return p;
  }
  }
  throw InvalidParams("unknown loop kind");
}

std::string Observable::name() const {
  switch (kind) {
  case ObservableKind::EPCount:
    return "ep_count";
  case ObservableKind::PHLCensus:
    return "phl_census";
  case ObservableKind::LoopClass:
  case ObservableKind::Winding: {
    std::ostringstream s;
    s << (kind == ObservableKind::LoopClass ? "loop_class" : "winding");
    if (loop) {
      if (loop->kind == LoopSpec::Kind::Coordinate)
        s << "(" << (loop->axis == Axis::X ? "kx" : "ky") << "-loop@" << loop->fixed << ")";
      else if (loop->kind == LoopSpec::Kind::Circle)
        s << "(circle@" << loop->center.x() << "," << loop->center.y() << ")";
      else
        s << "(polygon)";
    }
    return s.str();
  }
  }
  return "observable";
}

BlochModel sweep_model(const SweepSpec& spec, double value) {
  nlohmann::json p = spec.base_params;
  p[spec.parameter] = value;
  return make_model(spec.model, p, spec.topology);
}

namespace {

bool needs_scan(const Observable& o) {
  return o.kind == ObservableKind::EPCount || o.kind == ObservableKind::PHLCensus;
}

ScanOptions scan_options(const SweepSpec& spec, int resolution) {
  ScanOptions o = spec.scan;
  if (resolution > 0) o.nx = o.ny = resolution;
  o.threads = 1; // samples already run concurrently
  return o;
}

std::string loop_value(const SweepSpec& spec, const Observable& obs, const BlochModel& m, nlohmann::json* details) {
  if (!obs.loop) throw InvalidParams(obs.name() + " needs a loop");
  const LoopPath loop = build_loop(*obs.loop, m.topology);
  if (obs.kind == ObservableKind::LoopClass) {
    TrackOptions t = spec.track;
    t.n_steps = std::max(t.n_steps, obs.loop->n_steps);
    const LoopClass lc = classify(track_loop(m, loop, t));
    if (details) (*details)[obs.name()] = {{"permutation", lc.permutation}};
    return lc.cycle_type;
  }
  const LoopClass lc = winding_numbers(m, loop, obs.e_ref, spec.track);
  std::string out;
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : lc.windings) {
    if (!out.empty()) out += ' ';
    out += std::to_string(x.W) + "/" + std::to_string(x.C);
    w.push_back({{"W", x.W}, {"C", x.C}, {"residual", x.residual}});
  }
  if (details) (*details)[obs.name()] = w;
  return out;
}

std::string feature_value(const Observable& obs, const FeatureSet& fs, nlohmann::json* details) {
  if (obs.kind == ObservableKind::EPCount) {
    if (details) {
      nlohmann::json eps = nlohmann::json::array();
      for (const auto& e : fs.eps)
        eps.push_back({{"kx", e.location.x()}, {"ky", e.location.y()}, {"bands", {e.bands.first, e.bands.second}}});
      (*details)["eps"] = eps;
    }
    return std::to_string(fs.eps.size());
  }
  return phl_census(fs.phls, fs.exceptional_lines);
}

} // namespace

SampleRecord evaluate_sample(const SweepSpec& spec, double value, int resolution) {
  SampleRecord rec;
  rec.value = value;
  try {
    const BlochModel m = sweep_model(spec, value);
    std::optional<FeatureSet> fs;
    for (const auto& obs : spec.observables) {
      if (needs_scan(obs)) {
        if (!fs) fs = extract_features(scan(m, scan_options(spec, resolution)), spec.features, false);
        rec.observables[obs.name()] = feature_value(obs, *fs, &rec.details);
      } else {
        rec.observables[obs.name()] = loop_value(spec, obs, m, &rec.details);
      }
    }
  } catch (const InvalidParams&) {
    throw;
  } catch (const Error& e) {
    rec.valid = false;
    rec.error = e.what();
  }
  return rec;
}

std::string evaluate(const SweepSpec& spec, const Observable& obs, double value, int resolution) {
  const BlochModel m = sweep_model(spec, value);
  if (needs_scan(obs))
    return feature_value(obs, extract_features(scan(m, scan_options(spec, resolution)), spec.features, false), nullptr);
  return loop_value(spec, obs, m, nullptr);
}

Transition find_transition(const SweepSpec& spec, const Observable& obs, double lo, double hi, double tol) {
  if (!(lo < hi)) throw InvalidParams("transition search needs lo < hi");
  auto eval = [&](double v) -> std::optional<std::string> {
    try {
      return evaluate(spec, obs, v);
    } catch (const InvalidParams&) {
      throw;
    } catch (const Error&) {
    }
    // one retry on a finer grid
    if (!needs_scan(obs)) return std::nullopt;
    try {
      return evaluate(spec, obs, v, spec.retry_resolution);
    } catch (const InvalidParams&) {
      throw;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const auto vlo = eval(lo);
  const auto vhi = eval(hi);
  if (!vlo || !vhi) throw NoSignChange(obs.name() + " could not be evaluated at a bracket end");
  if (*vlo == *vhi) throw NoSignChange(obs.name() + " is '" + *vlo + "' at both ends of [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  Transition t;
  t.observable = obs.name();
  t.before = *vlo;
  t.after = *vhi;
  bool third = false;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const auto v = eval(mid);
    if (!v) {
      t.resolved = false;
      break;
    }
    if (*v == t.before) {
      lo = mid;
    } else {
      if (*v != t.after) third = true;
      hi = mid;
      t.after = *v;
    }
  }
  t.lo = lo;
  t.hi = hi;
  t.value = 0.5 * (lo + hi);
  std::ostringstream d;
  d << obs.name() << ": " << t.before << " -> " << t.after;
  if (third) d << " (intermediate values seen)";
  if (!t.resolved) d << " (bisection stopped: evaluation failed)";
  t.description = d.str();
  return t;
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (!(spec.lo < spec.hi)) throw InvalidParams("sweep range needs lo < hi");
  if (spec.samples < 2) throw InvalidParams("sweep needs at least 2 samples");
  if (spec.observables.empty()) throw InvalidParams("sweep needs at least one observable");
  {
    const auto& entry = find_model(spec.model);
    const bool known = std::any_of(entry.params.begin(), entry.params.end(),
                                   [&](const ParamSchema& s) { return s.name == spec.parameter; });
    if (!known) throw InvalidParams("model '" + spec.model + "' has no parameter '" + spec.parameter + "'");
  }
  SweepResult res;
  res.spec = spec;
  res.samples.resize(static_cast<std::size_t>(spec.samples));
  parallel_for(spec.samples, spec.scan.threads, [&](int i) {
    const double v = spec.lo + (spec.hi - spec.lo) * i / (spec.samples - 1);
    res.samples[static_cast<std::size_t>(i)] = evaluate_sample(spec, v);
  });

  for (const auto& obs : spec.observables) {
    const std::string key = obs.name();
    const SampleRecord* prev = nullptr;
    for (const auto& s : res.samples) {
      if (!s.valid) continue;
      if (prev && prev->observables.at(key) != s.observables.at(key)) {
        try {
          res.transitions.push_back(find_transition(spec, obs, prev->value, s.value, spec.tol));
        } catch (const NoSignChange& e) {
          Transition t;
          t.observable = key;
          t.lo = prev->value;
          t.hi = s.value;
          t.value = 0.5 * (t.lo + t.hi);
          t.before = prev->observables.at(key);
          t.after = s.observables.at(key);
          t.resolved = false;
          t.description = std::string(e.what());
          res.transitions.push_back(t);
        }
      }
      prev = &s;
    }
  }
  return res;
}

} // namespace phtopo
