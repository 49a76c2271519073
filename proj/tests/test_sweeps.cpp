#include "phtopo/errors.hpp"
#include "phtopo/io.hpp"
#include "phtopo/sweeps.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace phtopo;

namespace {

SweepSpec ep_sweep(int n) {
  SweepSpec s;
  s.model = "two_band_alt";
  s.base_params = {{"t_x", 1.0}, {"t_y", 0.5}};
  s.parameter = "eps0";
  s.lo = 0.8;
  s.hi = 1.0;
  s.samples = 3;
  s.observables = {Observable{ObservableKind::EPCount, std::nullopt, std::nullopt}};
  s.scan.nx = s.scan.ny = n;
  s.scan.threads = 3;
  s.tol = 1e-4;
  return s;
}

} // namespace

TEST_CASE("EP pair appears where eps0^2 = (t_x + t_y)(t_x - t_y)") {
  // EPs exist while |cos ky| <= 1 in the analytic condition, which first holds
  // at eps0^2 = t_x^2 - t_y^2
  const double exact = std::sqrt(1.0 - 0.25);
  const SweepResult r = run_sweep(ep_sweep(96));
  REQUIRE(r.transitions.size() == 1u);
  const Transition& t = r.transitions[0];
  CHECK(t.resolved);
  CHECK(t.before == "0");
  CHECK(t.after == "2");
  CHECK(t.hi - t.lo <= 1e-4);
  CHECK(std::abs(t.value - exact) < 2e-3);
  CHECK(r.samples.size() == 3u);
  for (const auto& s : r.samples) CHECK(s.valid);
}

TEST_CASE("constant observable has no transition") {
  SweepSpec s = ep_sweep(48);
  s.lo = 0.2;
  s.hi = 0.4;
  const SweepResult r = run_sweep(s);
  CHECK(r.transitions.empty());
  const Observable& o = s.observables[0];
  CHECK_THROWS_AS(find_transition(s, o, 0.2, 0.4, 1e-3), NoSignChange);
}

TEST_CASE("loop class observable changes where an EP crosses the loop") {
  SweepSpec s;
  s.model = "two_band_alt";
  s.base_params = {{"t_x", 1.0}, {"t_y", 0.5}, {"eps0", 1.0}};
  s.parameter = "eps0";
  LoopSpec l;
  l.kind = LoopSpec::Kind::Circle;
  l.center = {2.6811, -1.0947};
  l.radius = 0.1;
  l.n_steps = 200;
  s.observables = {Observable{ObservableKind::LoopClass, l, std::nullopt}};
  CHECK(evaluate(s, s.observables[0], 1.0) == "2^1");
  CHECK(evaluate(s, s.observables[0], 0.9) == "1^2");
  const Transition t = find_transition(s, s.observables[0], 0.9, 1.0, 1e-4);
  // the EP sits on the circle at the transition
  const BlochModel m = sweep_model(s, t.value);
  ScanOptions o;
  o.nx = o.ny = 96;
  const FeatureSet fs = extract_features(scan(m, o), {}, false);
  double best = 1e300;
  for (const auto& e : fs.eps) best = std::min(best, (e.location - l.center).norm());
  CHECK(std::abs(best - l.radius) < 5e-3);
}

TEST_CASE("failed samples are marked invalid") {
  SweepSpec s;
  s.model = "two_band_alt";
  s.base_params = {{"t_x", 1.0}, {"t_y", 0.5}};
  s.parameter = "eps0";
  s.lo = 1.0;
  s.hi = 1.2;
  s.samples = 2;
  LoopSpec l; // kx-loop at ky = 0 starting at kx = -pi, where E = +-sqrt(eps0^2 - 3/4)
  l.axis = Axis::X;
  l.n_steps = 64;
  s.observables = {Observable{ObservableKind::Winding, l, cd(0.5, 0.0)}};
  const SweepResult r = run_sweep(s);
  REQUIRE(r.samples.size() == 2u);
  CHECK_FALSE(r.samples[0].valid);
  CHECK(r.samples[0].error.find("ReferenceOnSpectrum") != std::string::npos);
  CHECK(r.samples[1].valid);
  CHECK(r.transitions.empty());

  SweepSpec u = ep_sweep(48);
  u.parameter = "kappa";
  CHECK_THROWS_AS(run_sweep(u), InvalidParams);
}

TEST_CASE("sweep CSV and JSON") {
  SweepSpec s = ep_sweep(48);
  s.observables.push_back(Observable{ObservableKind::PHLCensus, std::nullopt, std::nullopt});
  s.samples = 2;
  s.tol = 1e-2;
  const SweepResult r = run_sweep(s);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "parameter,valid,ep_count,phl_census");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 2);
  const auto j = to_json(r);
  CHECK(j["parameter"] == "eps0");
  CHECK(j["samples"].size() == 2u);
  CHECK(dump_json(j) == dump_json(to_json(run_sweep(s))));
}
