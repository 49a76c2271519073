#include "phtopo/tracking.hpp"

#include "phtopo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace phtopo {

namespace {

const std::vector<Permutation>& all_permutations(int n) {
  static const std::vector<std::vector<Permutation>> table = [] {
    std::vector<std::vector<Permutation>> t(static_cast<std::size_t>(kMaxDimension) + 1);
    for (int m = 1; m <= kMaxDimension; ++m) {
      Permutation p(static_cast<std::size_t>(m));
      std::iota(p.begin(), p.end(), 0);
      do t[static_cast<std::size_t>(m)].push_back(p);
      while (std::next_permutation(p.begin(), p.end()));
    }
    return t;
  }();
  return table.at(static_cast<std::size_t>(n));
}

std::vector<int> cluster_labels(const CVector& v, double tol) {
  std::vector<int> label(static_cast<std::size_t>(v.size()));
  std::iota(label.begin(), label.end(), 0);
  for (const auto& g : degenerate_groups<double>(v, tol))
    for (int i : g) label[static_cast<std::size_t>(i)] = g.front();
  return label;
}

CVector spectrum_at(const BlochModel& model, const ParamPoint& k, double tol) {
  return eigenvalues<double>(model.sample(k), tol).values;
}

CVector reorder(const CVector& to, const Permutation& p) {
  CVector out(to.size());
  for (Eigen::Index i = 0; i < to.size(); ++i) out(i) = to(p[static_cast<std::size_t>(i)]);
  return out;
}

} // namespace

Assignment match_spectra(const CVector& from, const CVector& to, double degeneracy_tol) {
  const int n = static_cast<int>(from.size());
  if (n != to.size() || n < 1 || n > kMaxDimension)
    throw InvalidParams("match_spectra needs two spectra of equal size 1.." +
                        std::to_string(kMaxDimension));
  const auto& perms = all_permutations(n);
  const auto label = cluster_labels(to, degeneracy_tol);

  std::vector<double> costs(perms.size());
  std::size_t best = 0;
  for (std::size_t q = 0; q < perms.size(); ++q) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += std::abs(to(perms[q][static_cast<std::size_t>(i)]) - from(i));
    costs[q] = c;
    if (c < costs[best]) best = q;
  }
  Assignment a;
  a.perm = perms[best];
  a.cost = costs[best];
  a.second = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < perms.size(); ++q) {
    bool same = true;
    for (int i = 0; i < n && same; ++i)
      same = label[static_cast<std::size_t>(perms[q][static_cast<std::size_t>(i)])] ==
             label[static_cast<std::size_t>(a.perm[static_cast<std::size_t>(i)])];
    if (!same) a.second = std::min(a.second, costs[q]);
  }
  a.ratio = a.cost > 0.0 ? a.second / a.cost : std::numeric_limits<double>::infinity();
  if (a.cost == 0.0 && a.second == 0.0) a.ratio = 1.0;
  return a;
}

TrackedBands track_loop(const BlochModel& model, const LoopPath& loop, const TrackOptions& opts) {
  if (loop.vertices.size() < 2) throw InvalidParams("loop needs at least two vertices");
  const int segments = static_cast<int>(loop.steps());
  const int sub = opts.n_steps > segments ? (opts.n_steps + segments - 1) / segments : 1;

  TrackedBands tb;
  tb.loop = loop;
  tb.topology = model.topology;

  auto point_at = [&](double t) {
    const int j = std::min(static_cast<int>(std::floor(t)), segments - 1);
    const double s = t - j;
    const auto& a = loop.vertices[static_cast<std::size_t>(j)];
    const auto& b = loop.vertices[static_cast<std::size_t>(j) + 1];
    return ParamPoint(a + s * (b - a));
  };

  tb.t.push_back(0.0);
  tb.points.push_back(loop.vertices.front());
  tb.energies.push_back(spectrum_at(model, loop.vertices.front(), opts.tol));

  // recursive halving of one step
  auto advance = [&](auto&& self, double t0, double t1, int depth) -> void {
    const ParamPoint p1 = point_at(t1);
    const CVector e1 = spectrum_at(model, p1, opts.tol);
    const CVector& e0 = tb.energies.back();
    const Assignment a = match_spectra(e0, e1, degeneracy_tolerance<double>(e1));
    if (!a.ambiguous(opts.ambiguity_ratio)) {
      tb.t.push_back(t1);
      tb.points.push_back(p1);
      tb.energies.push_back(reorder(e1, a.perm));
      tb.match_quality.push_back(a.ratio);
      return;
    }
    if (depth >= opts.max_refine)
      throw NearDegeneracyUnresolved(
          "assignment ratio " + std::to_string(a.ratio) + " near (" + std::to_string(p1.x()) +
          ", " + std::to_string(p1.y()) + ") after " + std::to_string(depth) +
          " halvings; the loop passes too close to a degeneracy");
    ++tb.refinements;
    const double mid = 0.5 * (t0 + t1);
    self(self, t0, mid, depth + 1);
    self(self, mid, t1, depth + 1);
  };

  for (int j = 0; j < segments; ++j)
    for (int s = 0; s < sub; ++s) {
      const double t0 = j + static_cast<double>(s) / sub;
      const double t1 = s + 1 == sub ? j + 1.0 : j + static_cast<double>(s + 1) / sub;
      advance(advance, t0, t1, 0);
    }

  const CVector& start = tb.energies.front();
  const CVector& end = tb.energies.back();
  const double scale = std::max(1.0, spectral_radius<double>(start));
  const Assignment close = match_spectra(end, start, degeneracy_tolerance<double>(start));
  if (close.cost > 1e-9 * scale * static_cast<double>(start.size()))
    throw InvalidParams("loop does not close: end spectrum differs from start by " +
                        std::to_string(close.cost));
  tb.permutation = close.perm;
  return tb;
}

std::vector<std::vector<int>> permutation_cycles(const Permutation& perm) {
  std::vector<bool> seen(perm.size(), false);
  std::vector<std::vector<int>> cycles;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::vector<int> c;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) {
      seen[j] = true;
      c.push_back(static_cast<int>(j));
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

std::string cycle_type(const Permutation& perm) {
  std::map<std::size_t, int> counts;
  for (const auto& c : permutation_cycles(perm)) ++counts[c.size()];
  std::string out;
  for (const auto& [len, count] : counts) {
    if (!out.empty()) out += ' ';
    out += std::to_string(len) + "^" + std::to_string(count);
  }
  return out;
}

Permutation compose(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw InvalidParams("cannot compose permutations of different size");
  Permutation c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = b[static_cast<std::size_t>(a[i])];
  return c;
}

Permutation inverse(const Permutation& p) {
  Permutation q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return q;
}

LoopClass classify(const TrackedBands& tb) {
  LoopClass lc;
  lc.permutation = tb.permutation;
  lc.cycles = permutation_cycles(tb.permutation);
  lc.cycle_type = cycle_type(tb.permutation);
  return lc;
}

LoopClass compose_loops(const TrackedBands& a, const TrackedBands& b) {
  if (a.points.empty() || b.points.empty()) throw InvalidParams("empty tracked loop");
  if (distance(a.points.front(), b.points.front(), a.topology) > 1e-9)
    throw BasepointMismatch("loops start at different points");
  const CVector& ea = a.start();
  const CVector& eb = b.start();
  if (ea.size() != eb.size() ||
      (ea - eb).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, spectral_radius<double>(ea)))
    throw BasepointMismatch("band order differs at the shared basepoint");
  LoopClass lc;
  lc.permutation = compose(a.permutation, b.permutation);
  lc.cycles = permutation_cycles(lc.permutation);
  lc.cycle_type = cycle_type(lc.permutation);
  return lc;
}

TrackedBands relabel_bands(const TrackedBands& tb, const std::vector<int>& order) {
  if (order.size() != tb.bands()) throw InvalidParams("relabel order has the wrong size");
  TrackedBands out = tb;
  for (auto& e : out.energies) e = reorder(e, order);
  // new slot k is old slot order[k], which ends in old slot perm[order[k]]
  const Permutation inv = inverse(order);
  for (std::size_t k = 0; k < order.size(); ++k)
    out.permutation[k] = inv[static_cast<std::size_t>(tb.permutation[static_cast<std::size_t>(order[k])])];
  return out;
}

namespace {

// Largest single-step phase jump seen, used to detect under-resolved loops.
LoopClass windings_impl(const TrackedBands& tb, std::optional<cd> e_ref, double& max_jump) {
  LoopClass lc = classify(tb);
  max_jump = 0.0;
  double scale = 1.0;
  for (const auto& e : tb.energies) scale = std::max(scale, spectral_radius<double>(e));

  for (const auto& cycle : lc.cycles) {
    cd ref;
    if (e_ref) {
      ref = *e_ref;
    } else {
      cd sum(0.0);
      std::size_t count = 0;
      // the last sample repeats the basepoint
      for (int b : cycle)
        for (std::size_t k = 0; k + 1 < tb.energies.size(); ++k) {
          sum += tb.energies[k](b);
          ++count;
        }
      ref = sum / static_cast<double>(count);
    }
    Winding w;
    w.band = cycle.front();
    w.C = static_cast<int>(cycle.size());
    w.e_ref = ref;
    int slot = cycle.front();
    double nearest = std::numeric_limits<double>::infinity();
    for (int r = 0; r < w.C; ++r) {
      for (std::size_t k = 0; k + 1 < tb.energies.size(); ++k) {
        const cd a = tb.energies[k](slot) - ref;
        const cd b = tb.energies[k + 1](slot) - ref;
        nearest = std::min(nearest, std::abs(a));
        const double d = std::arg(b / a);
        max_jump = std::max(max_jump, std::abs(d));
        w.phase += d;
      }
      slot = tb.permutation[static_cast<std::size_t>(slot)];
    }
    if (nearest < 1e-8 * scale)
      throw ReferenceOnSpectrum("reference energy (" + std::to_string(ref.real()) + ", " +
                                std::to_string(ref.imag()) + ") lies on the band trajectory");
    const double turns = w.phase / kTwoPi;
    w.W = static_cast<int>(std::lround(turns));
    w.residual = std::abs(turns - w.W);
    lc.windings.push_back(w);
  }
  return lc;
}

} // namespace

LoopClass winding_numbers(const TrackedBands& tb, std::optional<cd> e_ref) {
  double jump = 0.0;
  return windings_impl(tb, e_ref, jump);
}

LoopClass winding_numbers(const BlochModel& model, const LoopPath& loop, std::optional<cd> e_ref,
                          const TrackOptions& opts) {
  TrackOptions o = opts;
  o.n_steps = std::max(opts.n_steps, static_cast<int>(loop.steps()));
  for (int attempt = 0;; ++attempt) {
    const TrackedBands tb = track_loop(model, loop, o);
    double jump = 0.0;
    LoopClass lc = windings_impl(tb, e_ref, jump);
    // a phase step near pi cannot be attributed to either side of the reference
    if (jump < kPi / 2 || attempt >= 6) return lc;
    o.n_steps *= 2;
  }
}

} // namespace phtopo
