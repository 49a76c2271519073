#pragma once

#include "phtopo/geometry.hpp"
#include "phtopo/models.hpp"
#include "phtopo/tracking.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phtopo {

/// Rectangular part of the fundamental domain. A torus scan restricted to a
/// window is no longer compact; trace_branch_cut uses that to demonstrate
/// the compactness constraint.
struct Window {
  double x0 = -kPi, x1 = kPi, y0 = -kPi, y1 = kPi;
  bool full() const { return x0 == -kPi && x1 == kPi && y0 == -kPi && y1 == kPi; }
};

struct ScanOptions {
  int nx = 201;
  int ny = 201;
  int threads = 1;
  /// Nodes sit at (i + offset) / n of the period, so symmetry lines such as
  /// kx = 0, pi/2, pi never fall on a node.
  double offset = 0.382;
  int max_refine = 16;
  double tol = kRootTol;
  Window window;
};

/// Permutation carrying the storage order at one node to the storage order
/// at its neighbour, found by continuation along the connecting edge.
struct EdgeMatch {
  Permutation perm;
  bool resolved = true;
};

struct GridScan {
  BlochModel model;
  ScanOptions opts;
  int nx = 0, ny = 0;
  int dim = 0;
  bool wrap_x = false, wrap_y = false; // edges close across the domain
  std::vector<CVector> energies;       // node (i, j) at j * nx + i, storage order
  std::vector<cd> disc;                // discriminant at each node
  std::vector<EdgeMatch> hedges;       // (i, j) -> (i + 1, j)
  std::vector<EdgeMatch> vedges;       // (i, j) -> (i, j + 1)
  std::vector<char> flagged;           // per cell: EP candidate or unresolved edge
  std::vector<Permutation> monodromy;  // per cell, around c0 -> c1 -> c2 -> c3 -> c0

  int cells_x() const { return wrap_x ? nx : nx - 1; }
  int cells_y() const { return wrap_y ? ny : ny - 1; }
  double dx() const;
  double dy() const;
  /// Node position; indices outside [0, n) continue periodically (unwrapped).
  ParamPoint node(int i, int j) const;
  const CVector& at(int i, int j) const;
  bool has_hedge(int i, int /*j*/) const { return wrap_x || i + 1 < nx; }
  bool has_vedge(int /*i*/, int j) const { return wrap_y || j + 1 < ny; }
  const EdgeMatch& hedge(int i, int j) const;
  const EdgeMatch& vedge(int i, int j) const;
  std::size_t flagged_count() const;
};

/// Eigenvalues at every node, edge matchings and per-cell monodromy.
/// Rows are distributed over `threads` workers; the result does not depend on
/// the worker count.
GridScan scan(const BlochModel& model, const ScanOptions& opts = {});

enum class PHLKind { Real, Imag };
std::string_view to_string(PHLKind k);

enum class EndpointKind { Closed, AtEP, AtBoundary, AtInfinity, Dangling };
std::string_view to_string(EndpointKind k);

struct Endpoint {
  EndpointKind kind = EndpointKind::Closed;
  int ep = -1; // id into the EP list for AtEP
};

struct PHL {
  PHLKind kind = PHLKind::Real;
  std::pair<int, int> bands{1, 2};  // 1-based ranks by descending real part
  std::vector<ParamPoint> points;
  bool closed = false;
  WrapCount homology{0, 0};
  std::vector<Endpoint> endpoints;  // {Closed} or the two ends
};

struct EP {
  ParamPoint location{0, 0};
  std::pair<int, int> bands{1, 2};
  cd energy{0, 0};
  double residual = 0.0;  // normalised |discriminant|
  int order = 2;
  bool defective = true;
};

/// Point on a line of exceptional points (the discriminant vanishes along a
/// curve, so it has no isolated roots there).
struct ExceptionalLine {
  std::pair<int, int> bands{1, 2};
  std::vector<ParamPoint> points;
};

enum class EPRelationKind { Paired, Intersected, Disjointed };
std::string_view to_string(EPRelationKind k);

struct EPRelation {
  int a = 0, b = 0;
  EPRelationKind relation = EPRelationKind::Paired;
};

struct FeatureOptions {
  double separation = 1e-6;   // opposite-part split required on a PHL
  double ep_tol = 1e-9;       // normalised discriminant residual for an EP
  int newton_iters = 60;
};

struct EPResult {
  std::vector<EP> eps;
  std::vector<ExceptionalLine> lines;
  std::vector<std::string> warnings;  // dropped candidates
};

/// PHLs of one kind. With `band_pair` only lines between those ranks are kept.
std::vector<PHL> detect_phls(const GridScan& gs, PHLKind kind,
                             std::optional<std::pair<int, int>> band_pair = std::nullopt,
                             const std::vector<EP>& eps = {}, const FeatureOptions& fo = {});

/// Roots of the discriminant seeded from the grid and refined by damped 2D
/// Newton. Roots with a singular Jacobian are reported as exceptional lines.
EPResult detect_eps(const GridScan& gs, const FeatureOptions& fo = {});

/// Normalised discriminant |D| / max(1, rho)^(n (n - 1)).
double normalized_discriminant(const CMatrix& h);

std::vector<EPRelation> relate_eps(const std::vector<EP>& eps);

/// Follows the real PHL (Im (E_u - E_v)^2 = 0, Re < 0) that leaves `eps[id]`.
/// On a torus scanned over a restricted window, reaching the window edge
/// raises CompactnessViolation.
PHL trace_branch_cut(const std::vector<EP>& eps, int id, const GridScan& gs);

/// Spectral signature of pseudo-Hermiticity: eigenvalues are real or come in
/// complex-conjugate pairs within `tol`.
bool pseudo_hermitian_test(const CMatrix& m, double tol = 1e-9);

/// Ids of EPs enclosed by a PHL, where the plane is compactified to a sphere:
/// an open line ending at infinity is closed through the point at infinity
/// along the window boundary (counter-clockwise).
std::vector<int> enclosed_ep_ids(const PHL& phl, const std::vector<EP>& eps, const Window& w = {});

struct FeatureSet {
  std::vector<EP> eps;
  std::vector<ExceptionalLine> exceptional_lines;
  std::vector<PHL> phls;
  std::vector<PHL> branch_cuts;
  std::vector<EPRelation> relations;
  std::vector<std::string> warnings;
};

/// EPs, both PHL kinds, relations and branch cuts from one scan.
FeatureSet extract_features(const GridScan& gs, const FeatureOptions& fo = {}, bool trace_cuts = true);

/// Sorted list such as "imag(0,1)x1 real(0,1)x1" with canonical homology signs.
std::string phl_census(const std::vector<PHL>& phls, const std::vector<ExceptionalLine>& lines = {});

/// Number of EPs per band pair.
std::vector<std::pair<std::pair<int, int>, int>> ep_count_by_pair(const std::vector<EP>& eps);

} // namespace phtopo
