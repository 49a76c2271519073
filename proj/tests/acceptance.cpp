// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "phtopo/errors.hpp"
#include "phtopo/features.hpp"
#include "phtopo/parallel.hpp"
#include "phtopo/registry.hpp"
#include "phtopo/sweeps.hpp"
#include "phtopo/tracking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

using namespace phtopo;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

GridScan scan_at(const BlochModel& m, int n) {
  ScanOptions o;
  o.nx = o.ny = n;
  o.threads = default_threads();
  return scan(m, o);
}

std::string loop_class(const BlochModel& m, Axis axis, double fixed, int steps = 400) {
  return classify(track_loop(m, coordinate_loop(axis, fixed, steps, m.topology))).cycle_type;
}

double multiset_gap(CVector a, CVector b) {
  std::vector<int> p(static_cast<std::size_t>(a.size()));
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double worst = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a(i) - b(p[static_cast<std::size_t>(i)])));
    best = std::min(best, worst);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

int count_phls(const std::vector<PHL>& v, std::optional<PHLKind> kind, std::pair<int, int> bands) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const PHL& p) {
    return (!kind || p.kind == *kind) && p.bands == bands;
  }));
}

double boundary_distance(const ParamPoint& k) { return std::min(kPi - std::abs(k.x()), kPi - std::abs(k.y())); }

Verdict dvector_oracle() {
  Verdict v;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    DVector d;
    d.d_real = Eigen::Vector3d(u(rng), u(rng), u(rng));
    d.d_imag = Eigen::Vector3d(u(rng), u(rng), u(rng));
    d.d0 = cd(u(rng), u(rng));
    const auto [a, b] = two_band_energies(d);
    CVector closed(2);
    closed << a, b;
    worst = std::max(worst, multiset_gap(eigenvalues(d.matrix()).values, closed));
  }
  v.require(worst < 1e-10, "multiset distance < 1e-10");
  v.detail << "max multiset distance " << worst << " over 1000 d-vectors";
  return v;
}

Verdict three_band_exchange() {
  Verdict v;
  const BlochModel m = make_three_band_interp(0.5, 0.0);
  int good = 0;
  for (int i = 0; i < 10; ++i) {
    const double kx = -kPi + kTwoPi * (i + 0.5) / 10;
    good += loop_class(m, Axis::Y, kx) == "1^1 2^1";
  }
  v.require(good == 10, "ky-loop class 1^1 2^1 at all 10 kx");
  const FeatureSet fs = extract_features(scan_at(m, 201), {}, false);
  v.require(fs.eps.empty(), "no EPs");
  const int real23 = count_phls(fs.phls, PHLKind::Real, {2, 3});
  v.require(real23 == 1, "one real 2-3 PHL");
  for (const auto& p : fs.phls)
    if (p.kind == PHLKind::Real && p.bands == std::pair{2, 3})
      v.require(p.closed && canonical_homology(p.homology) == WrapCount{1, 0}, "real 2-3 PHL homology (+-1,0)");
  const int imag = count_phls(fs.phls, PHLKind::Imag, {1, 2}) + count_phls(fs.phls, PHLKind::Imag, {1, 3}) +
                   count_phls(fs.phls, PHLKind::Imag, {2, 3});
  v.require(imag == 3, "three imaginary PHLs");
  v.detail << "ky-loops 1^1 2^1: " << good << "/10, eps " << fs.eps.size() << ", real 2-3 PHLs " << real23
           << ", imag PHLs " << imag << ", census " << phl_census(fs.phls, fs.exceptional_lines);
  return v;
}

Verdict ep_pair_lower_bands() {
  Verdict v;
  const BlochModel m = make_three_band_interp(0.5, 0.3);
  const FeatureSet fs = extract_features(scan_at(m, 201), {}, false);
  v.require(fs.eps.size() == 2, "two EPs at s2 = 0.3");
  for (const auto& e : fs.eps) v.require(e.bands == std::pair{2, 3}, "EPs between the two lowest bands");
  const std::string c0 = loop_class(m, Axis::Y, 0.0);
  const std::string c1 = loop_class(m, Axis::Y, kPi / 2);
  v.require(c0 == "1^1 2^1", "ky-loop at kx = 0 is 1^1 2^1");
  v.require(c1 == "1^3", "ky-loop at kx = pi/2 is 1^3");
  v.detail << "eps " << fs.eps.size() << ", ky-loop kx=0: " << c0 << ", kx=pi/2: " << c1 << "; boundary distance";
  double prev = 1e300;
  for (double s2 : {0.3, 0.33, 0.37}) {
    const FeatureSet f = extract_features(scan_at(make_three_band_interp(0.5, s2), 201), {}, false);
    double d = -1;
    for (const auto& e : f.eps) d = std::max(d, boundary_distance(e.location));
    v.require(f.eps.size() == 2 && d < prev, "boundary distance decreases");
    v.detail << " s2=" << s2 << ":" << d;
    prev = d;
  }
  return v;
}

Verdict ep_pair_upper_bands() {
  Verdict v;
  const BlochModel m = make_three_band_interp(0.25, 0.0);
  const FeatureSet fs = extract_features(scan_at(m, 201), {}, false);
  v.require(fs.eps.size() == 2, "two EPs");
  for (const auto& e : fs.eps) v.require(e.bands == std::pair{1, 2}, "EPs on bands 1-2");
  const int phl23 = count_phls(fs.phls, std::nullopt, {2, 3});
  v.require(phl23 == 1, "one 2-3 PHL");
  const TrackedBands a = track_loop(m, coordinate_loop(Axis::X, -kPi, 400, m.topology));
  const TrackedBands b = track_loop(m, coordinate_loop(Axis::Y, -kPi, 400, m.topology));
  const std::string ca = classify(a).cycle_type, cb = classify(b).cycle_type;
  auto allowed = [](const std::string& c) { return c == "1^3" || c == "1^1 2^1"; };
  v.require(allowed(ca) && allowed(cb), "kx- and ky-loop classes in {1^3, 1^1 2^1}");
  const std::string cab = compose_loops(a, b).cycle_type;
  v.require(cab == "3^1", "composed class 3^1");
  v.detail << "eps " << fs.eps.size() << ", 2-3 PHLs " << phl23 << ", kx-loop " << ca << ", ky-loop " << cb
           << ", composed " << cab << " (basepoint (-pi, -pi))";
  return v;
}

Verdict winding_table() {
  Verdict v;
  struct Row {
    HNParams p;
    double ky;
    std::optional<cd> e_ref;
    int W, C;
  };
  const std::vector<Row> rows = {{{1, 1.0, 1.0, 0.0, 0.0, false}, 0.0, std::nullopt, 1, 1},
                                 {{2, 1.0, 1.0, 0.0, 0.0, false}, 0.0, std::nullopt, 1, 2},
                                 {{3, 1.0, 1.0, 0.0, 0.0, false}, 0.0, std::nullopt, 1, 3},
                                 {{3, 1.0, 1.0, 0.0, 0.5, true}, kPi / 2, cd(-0.4, 0.0), 2, 3}};
  for (const auto& r : rows) {
    const BlochModel m = make_hn_folded(r.p);
    TrackOptions t;
    t.n_steps = 400;
    const LoopClass lc = winding_numbers(m, coordinate_loop(Axis::X, r.ky, 400, m.topology), r.e_ref, t);
    const bool ok = lc.windings.size() == 1 && lc.windings[0].W == r.W && lc.windings[0].C == r.C &&
                    lc.windings[0].residual < 1e-6;
    v.require(ok, "(W, C) = (" + std::to_string(r.W) + "," + std::to_string(r.C) + ")");
    for (const auto& w : lc.windings) v.detail << "(" << w.W << "," << w.C << ") res " << w.residual << "; ";
  }
  return v;
}

Verdict transition_values() {
  Verdict v;
  SweepSpec el;
  el.model = "hn_folded";
  el.base_params = {{"m", 2}};
  el.parameter = "eps0";
  el.lo = 0.9;
  el.hi = 1.1;
  el.samples = 4;
  el.observables = {Observable{ObservableKind::PHLCensus, std::nullopt, std::nullopt}};
  SweepSpec ep = el;
  ep.model = "two_band_alt";
  ep.base_params = {{"t_x", 1.0}, {"t_y", 0.5}};
  ep.lo = 0.8;
  ep.hi = 1.0;
  ep.samples = 5;
  ep.observables = {Observable{ObservableKind::EPCount, std::nullopt, std::nullopt}};
  for (auto* s : {&el, &ep}) {
    s->scan.threads = default_threads();
    s->scan.nx = s->scan.ny = 201;
  }
  const SweepResult rel = run_sweep(el);
  const SweepResult rep = run_sweep(ep);
  v.require(rel.transitions.size() == 1 && rel.transitions[0].resolved, "one exceptional-line transition");
  v.require(rep.transitions.size() == 1 && rep.transitions[0].resolved, "one EP-pair transition");
  if (!rel.transitions.empty()) {
    v.require(std::abs(rel.transitions[0].value - 1.0) <= 1e-3, "eps_EL = 1.000 +- 1e-3");
    v.detail << "eps_EL " << rel.transitions[0].value << " ";
  }
  if (!rep.transitions.empty()) {
    v.require(std::abs(rep.transitions[0].value - 0.8660) <= 1e-3, "eps_EP = 0.8660 +- 1e-3");
    v.detail << "eps_EP " << rep.transitions[0].value << " (sqrt(3)/2 = " << std::sqrt(3.0) / 2 << ")";
  }
  return v;
}

Verdict removable_vs_protected() {
  Verdict v;
  for (double alpha : {1.0, 2.0, 3.0}) {
    const FeatureSet fs = extract_features(scan_at(make_bilayer_square(alpha), 201), {}, false);
    v.require(fs.eps.empty(), "bilayer has no EPs");
    const int real = count_phls(fs.phls, PHLKind::Real, {1, 2});
    if (alpha == 1.0) {
      bool ring = real == 1;
      for (const auto& p : fs.phls)
        if (p.kind == PHLKind::Real) ring = ring && p.closed && p.homology == WrapCount{0, 0};
      v.require(ring, "bilayer alpha = 1 has a contractible real PHL");
    }
    if (alpha == 3.0) v.require(fs.phls.empty(), "bilayer alpha = 3 has no PHL");
    v.detail << "bilayer alpha=" << alpha << ": " << phl_census(fs.phls, fs.exceptional_lines) << ", eps "
             << fs.eps.size() << "; ";
  }
  std::mt19937_64 rng(4711);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  int kept = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<cd> onsite = {std::polar(0.05, phase(rng)), std::polar(0.05, phase(rng))};
    const BlochModel m = with_onsite(make_hn_folded({2, 1.0, 1.0, 0.0, 0.0, false}), onsite);
    const auto real = detect_phls(scan_at(m, 128), PHLKind::Real);
    kept += std::any_of(real.begin(), real.end(), [](const PHL& p) {
      return p.closed && canonical_homology(p.homology) == WrapCount{0, 1};
    });
  }
  v.require(kept == 20, "HN m = 2 real (0,+-1) PHL under all 20 perturbations");
  v.detail << "HN m=2 (0,+-1) real PHL kept in " << kept << "/20";
  return v;
}

DVectorField sample_dvector() {
  DVectorField f;
  f.d_real = [](const ParamPoint& k) { return Eigen::Vector3d(std::cos(k.x()), 0.5, std::sin(k.y())); };
  f.d_imag = [](const ParamPoint& k) { return Eigen::Vector3d(0.2, std::sin(k.x()), 0.3 * std::cos(k.y())); };
  f.d0 = [](const ParamPoint& k) { return cd(0.1 * std::cos(k.x()), 0.2); };
  return f;
}

std::vector<BlochModel> zoo() {
  return {make_three_band_interp(0.5, 0.0),
          make_three_band_interp(0.5, 0.3),
          make_three_band_interp(0.5, 0.37),
          make_three_band_interp(0.25, 0.0),
          make_bilayer_square(1.0),
          make_bilayer_square(3.0),
          make_hn_folded({1, 1.0, 1.0, 0.0, 0.0, false}),
          make_hn_folded({2, 1.0, 1.0, 0.0, 0.0, false}),
          make_hn_folded({2, 1.0, 1.0, 0.7, 0.0, false}),
          make_hn_folded({3, 1.0, 1.0, 0.0, 0.0, false}),
          make_hn_folded({3, 1.0, 1.0, 0.0, 0.5, true}),
          make_two_band_alt(1.0, 0.5, 0.8),
          make_two_band_alt(1.0, 0.5, 0.9),
          make_two_band_alt(1.0, 0.5, 1.0),
          make_two_band_dvector(sample_dvector(), SpaceTopology::Torus),
          make_constant_diagonal({1.0, 2.0, cd(0, 1)})};
}

Verdict ep_parity() {
  Verdict v;
  int instances = 0;
  for (const auto& m : zoo()) {
    const EPResult r = detect_eps(scan_at(m, 128));
    for (const auto& [pair, count] : ep_count_by_pair(r.eps))
      v.require(count % 2 == 0, m.name + " bands " + std::to_string(pair.first) + "-" + std::to_string(pair.second) +
                                    " has " + std::to_string(count) + " EPs");
    ++instances;
  }
  v.detail << instances << " torus instances";
  return v;
}

Verdict property_suites() {
  Verdict v;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  int checks = 0;
  for (const auto& m : zoo()) {
    const std::string who = m.name + " " + m.params.dump();
    try {
      const double x0 = -kPi + 0.1234, y0 = -kPi + 0.0567;
      LoopPath a = coordinate_loop(Axis::X, y0, 200, m.topology);
      LoopPath b = coordinate_loop(Axis::Y, x0, 200, m.topology);
      for (auto& p : a.vertices) p.x() += 0.1234;
      for (auto& p : b.vertices) p.y() += 0.0567;
      const TrackedBands ta = track_loop(m, a), tb = track_loop(m, b);
      LoopPath ab = a;
      for (std::size_t i = 1; i < b.vertices.size(); ++i) ab.vertices.push_back(b.vertices[i] + ParamPoint(kTwoPi, 0));
      ab.wraps = {1, 1};
      const TrackedBands tab = track_loop(m, ab);
      v.require(tab.permutation == compose(ta.permutation, tb.permutation), who + " composition law");

      std::vector<int> order(ta.bands());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      v.require(classify(relabel_bands(ta, order)).cycle_type == classify(ta).cycle_type, who + " conjugacy invariance");

      for (const auto& [axis, fixed] : {std::pair{Axis::X, y0}, std::pair{Axis::Y, x0}}) {
        const auto coarse = track_loop(m, coordinate_loop(axis, fixed, 200, m.topology));
        const auto fine = track_loop(m, coordinate_loop(axis, fixed, 400, m.topology));
        v.require(coarse.permutation == fine.permutation, who + " step doubling");
      }

      for (int n = 0; n < 20; ++n) {
        const ParamPoint k(u(rng), u(rng));
        const ParamPoint shift(kTwoPi * static_cast<int>(rng() % 5 - 2), kTwoPi * static_cast<int>(rng() % 5 - 2));
        const double gap = multiset_gap(eigenvalues(m.sample(k)).values, eigenvalues(m.sample(k + shift)).values);
        v.require(gap < 1e-9, who + " periodicity");
      }
      checks += 1;
    } catch (const Error& e) {
      v.require(false, who + ": " + e.what());
    }
  }
  v.detail << checks << " models: composition, conjugacy, step doubling, periodicity";
  return v;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"two-band closed form vs general eigensolver", dvector_oracle},
      {"three-band exchange at s = (0.5, 0)", three_band_exchange},
      {"EP pair between the lower bands at s = (0.5, 0.3)", ep_pair_lower_bands},
      {"EP pair between the upper bands at s = (0.25, 0)", ep_pair_upper_bands},
      {"Hatano-Nelson winding table", winding_table},
      {"transition values by sweep bisection", transition_values},
      {"removable vs protected PHLs", removable_vs_protected},
      {"EP parity on the torus", ep_parity},
      {"property suites over the model zoo", property_suites},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "threw: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << "  | " << v.detail.str() << " (" << secs << " s)"
              << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
