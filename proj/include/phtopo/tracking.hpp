#pragma once

#include "phtopo/geometry.hpp"
#include "phtopo/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phtopo {

/// perm[i] is the slot where the band that started in slot i ends up.
using Permutation = std::vector<int>;

inline constexpr double kAmbiguityRatio = 1.5;

/// Minimum-cost bijection between two spectra, cost sum |E_to(p[i]) - E_from(i)|.
struct Assignment {
  Permutation perm;
  double cost = 0.0;
  double second = 0.0;  // best cost among assignments that differ in substance
  double ratio = 0.0;   // second / cost, +inf when unique
  bool ambiguous(double threshold = kAmbiguityRatio) const { return ratio < threshold; }
};

/// Exhaustive search over all n! bijections. Alternatives that only permute
/// eigenvalues of `to` that are equal within `degeneracy_tol` do not count as
/// competitors. Ties are broken towards the lexicographically first
/// permutation, so the identity wins among equals.
Assignment match_spectra(const CVector& from, const CVector& to, double degeneracy_tol);

struct TrackOptions {
  int n_steps = 0;          // minimum number of steps around the whole loop
  double tol = kRootTol;    // root residual tolerance
  int max_refine = 14;      // step halvings before giving up
  double ambiguity_ratio = kAmbiguityRatio;
};

struct TrackedBands {
  LoopPath loop;
  SpaceTopology topology = SpaceTopology::Torus;
  std::vector<double> t;          // loop parameter: vertex index plus fraction
  std::vector<ParamPoint> points;
  std::vector<CVector> energies;  // energies[k](b) is band b at sample k
  std::vector<double> match_quality; // assignment ratio of each accepted step
  Permutation permutation;
  int refinements = 0;

  std::size_t bands() const { return energies.empty() ? 0 : static_cast<std::size_t>(energies.front().size()); }
  const CVector& start() const { return energies.front(); }
};

/// Continues the spectrum along `loop` by step-to-step minimum-cost matching.
/// Steps whose best assignment is not clearly better than the runner-up are
/// halved; NearDegeneracyUnresolved is raised after max_refine halvings.
TrackedBands track_loop(const BlochModel& model, const LoopPath& loop, const TrackOptions& opts = {});

struct Winding {
  int band = 0;       // starting slot of the followed band
  int W = 0;
  int C = 1;
  double phase = 0.0; // accumulated arg(E - E_ref) over C traversals
  double residual = 0.0; // |phase / 2pi - W|
  cd e_ref{0.0, 0.0};
};

struct LoopClass {
  Permutation permutation;
  std::vector<std::vector<int>> cycles; // each starts at its smallest slot
  std::string cycle_type;
  std::vector<Winding> windings;        // one per cycle when requested
};

std::vector<std::vector<int>> permutation_cycles(const Permutation& perm);

/// "1^a 2^b ..." with ascending cycle length.
std::string cycle_type(const Permutation& perm);

/// Band i follows a, then b: result[i] = b[a[i]].
Permutation compose(const Permutation& a, const Permutation& b);
Permutation inverse(const Permutation& p);

LoopClass classify(const TrackedBands& tb);

/// Class of traversing `a` and then `b`. Both must start at the same point
/// with the same band order.
LoopClass compose_loops(const TrackedBands& a, const TrackedBands& b);

/// Reorders the bands at the basepoint: new slot k holds old slot order[k].
TrackedBands relabel_bands(const TrackedBands& tb, const std::vector<int>& order);

/// Winding of each cycle around `e_ref`; when omitted the reference is the
/// centroid of the cycle's trajectory.
LoopClass winding_numbers(const BlochModel& model, const LoopPath& loop,
                          std::optional<cd> e_ref = std::nullopt, const TrackOptions& opts = {});
LoopClass winding_numbers(const TrackedBands& tb, std::optional<cd> e_ref = std::nullopt);

} // namespace phtopo
