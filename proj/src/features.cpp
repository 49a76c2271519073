#include "phtopo/features.hpp"

#include "phtopo/errors.hpp"
#include "phtopo/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace phtopo {

std::string_view to_string(PHLKind k) { return k == PHLKind::Real ? "real" : "imag"; }

std::string_view to_string(EndpointKind k) {
  switch (k) {
  case EndpointKind::Closed:
    return "closed";
  case EndpointKind::AtEP:
    return "at_ep";
  case EndpointKind::AtBoundary:
    return "at_boundary";
  case EndpointKind::AtInfinity:
    return "at_infinity";
  case EndpointKind::Dangling:
    return "dangling";
  }
  return "dangling";
}

std::string_view to_string(EPRelationKind k) {
  switch (k) {
  case EPRelationKind::Paired:
    return "paired";
  case EPRelationKind::Intersected:
    return "intersected";
  case EPRelationKind::Disjointed:
    return "disjointed";
  }
  return "disjointed";
}

// ---------------------------------------------------------------- grid scan

double GridScan::dx() const { return (opts.window.x1 - opts.window.x0) / nx; }
double GridScan::dy() const { return (opts.window.y1 - opts.window.y0) / ny; }

ParamPoint GridScan::node(int i, int j) const {
  const auto fi = static_cast<double>(i), fj = static_cast<double>(j);
  return {opts.window.x0 + dx() * (fi + opts.offset), opts.window.y0 + dy() * (fj + opts.offset)};
}

namespace {

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

double noise_floor(const CVector& e) { return 1e-10 * std::max(1.0, spectral_radius<double>(e)); }

// Positive unless clearly negative, so exact zeros have a fixed side.
bool positive(double g, double noise) { return g > -noise; }

double part(cd z, PHLKind kind) { return kind == PHLKind::Real ? z.real() : z.imag(); }
double other_part(cd z, PHLKind kind) { return kind == PHLKind::Real ? z.imag() : z.real(); }

CVector reorder(const CVector& v, const Permutation& p) {
  CVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(p[static_cast<std::size_t>(i)]);
  return out;
}

CVector spectrum_at(const BlochModel& m, const ParamPoint& k, double tol) {
  return eigenvalues<double>(m.sample(k), tol).values;
}

/// Continuation of the spectrum along the straight segment a -> b.
struct SegmentTrace {
  std::vector<double> s;
  std::vector<CVector> e; // in the labels of a
  Permutation perm;       // label at a -> storage slot at b
  bool resolved = true;
};

SegmentTrace trace_segment(const BlochModel& model, const ParamPoint& a, const ParamPoint& b,
                           const CVector& ea, const CVector& eb, int max_refine, double tol,
                           bool keep_samples) {
  SegmentTrace st;
  CVector last = ea;
  if (keep_samples) {
    st.s.push_back(0.0);
    st.e.push_back(ea);
  }
  auto step = [&](auto&& self, double s0, double s1, int depth) -> void {
    const CVector e1 = s1 == 1.0 ? eb : spectrum_at(model, a + s1 * (b - a), tol);
    const Assignment m = match_spectra(last, e1, degeneracy_tolerance<double>(e1));
    if (m.ambiguous() && depth < max_refine) {
      const double mid = 0.5 * (s0 + s1);
      self(self, s0, mid, depth + 1);
      self(self, mid, s1, depth + 1);
      return;
    }
    if (m.ambiguous()) st.resolved = false;
    last = reorder(e1, m.perm);
    if (s1 == 1.0) st.perm = m.perm;
    if (keep_samples) {
      st.s.push_back(s1);
      st.e.push_back(last);
    }
  };
  step(step, 0.0, 1.0, 0);
  return st;
}

} // namespace

const CVector& GridScan::at(int i, int j) const {
  const int ii = wrap_x ? wrap_index(i, nx) : i;
  const int jj = wrap_y ? wrap_index(j, ny) : j;
  return energies[static_cast<std::size_t>(jj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ii)];
}

const EdgeMatch& GridScan::hedge(int i, int j) const {
  const int ii = wrap_x ? wrap_index(i, nx) : i;
  const int jj = wrap_y ? wrap_index(j, ny) : j;
  return hedges[static_cast<std::size_t>(jj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ii)];
}

const EdgeMatch& GridScan::vedge(int i, int j) const {
  const int ii = wrap_x ? wrap_index(i, nx) : i;
  const int jj = wrap_y ? wrap_index(j, ny) : j;
  return vedges[static_cast<std::size_t>(jj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ii)];
}

std::size_t GridScan::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
}

GridScan scan(const BlochModel& model, const ScanOptions& opts) {
  if (opts.nx < 32 || opts.ny < 32) throw InvalidParams("scan resolution must be at least 32 per axis");
  const Window& w = opts.window;
  if (!(w.x0 < w.x1 && w.y0 < w.y1)) throw InvalidParams("empty scan window");
  GridScan gs;
  gs.model = model;
  gs.opts = opts;
  gs.nx = opts.nx;
  gs.ny = opts.ny;
  gs.dim = model.dimension;
  gs.wrap_x = is_periodic(model.topology, Axis::X) && w.x0 == -kPi && w.x1 == kPi;
  gs.wrap_y = is_periodic(model.topology, Axis::Y) && w.y0 == -kPi && w.y1 == kPi;
  const std::size_t nodes = static_cast<std::size_t>(gs.nx) * static_cast<std::size_t>(gs.ny);
  gs.energies.resize(nodes);
  gs.disc.resize(nodes);
  gs.hedges.resize(nodes);
  gs.vedges.resize(nodes);

  parallel_for(gs.ny, opts.threads, [&](int j) {
    for (int i = 0; i < gs.nx; ++i) {
      const CMatrix h = model.sample(gs.node(i, j));
      const std::size_t idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(gs.nx) + static_cast<std::size_t>(i);
      gs.energies[idx] = eigenvalues<double>(h, opts.tol).values;
      gs.disc[idx] = matrix_discriminant(h);
    }
  });

  parallel_for(gs.ny, opts.threads, [&](int j) {
    for (int i = 0; i < gs.nx; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(gs.nx) + static_cast<std::size_t>(i);
      if (gs.has_hedge(i, j)) {
        auto st = trace_segment(model, gs.node(i, j), gs.node(i + 1, j), gs.at(i, j), gs.at(i + 1, j),
                                opts.max_refine, opts.tol, false);
        gs.hedges[idx] = {st.perm, st.resolved};
      }
      if (gs.has_vedge(i, j)) {
        auto st = trace_segment(model, gs.node(i, j), gs.node(i, j + 1), gs.at(i, j), gs.at(i, j + 1),
                                opts.max_refine, opts.tol, false);
        gs.vedges[idx] = {st.perm, st.resolved};
      }
    }
  });

  const int cx = gs.cells_x(), cy = gs.cells_y();
  gs.flagged.assign(static_cast<std::size_t>(cx) * static_cast<std::size_t>(cy), 0);
  gs.monodromy.resize(gs.flagged.size());
  for (int j = 0; j < cy; ++j)
    for (int i = 0; i < cx; ++i) {
      const auto& b = gs.hedge(i, j);
      const auto& r = gs.vedge(i + 1, j);
      const auto& t = gs.hedge(i, j + 1);
      const auto& l = gs.vedge(i, j);
      const Permutation via_right = compose(b.perm, r.perm);
      const Permutation via_left = compose(l.perm, t.perm);
      const std::size_t c = static_cast<std::size_t>(j) * static_cast<std::size_t>(cx) + static_cast<std::size_t>(i);
      gs.monodromy[c] = compose(via_right, inverse(via_left));
      const bool resolved = b.resolved && r.resolved && t.resolved && l.resolved;
      gs.flagged[c] = (!resolved || via_right != via_left) ? 1 : 0;
    }
  return gs;
}

// ---------------------------------------------------------------- PHLs

namespace {

struct Crossing {
  int dir = 0;   // 0: horizontal edge, 1: vertical edge
  int i = 0, j = 0;
  int p = 0, q = 0;  // band labels at the edge's start node
  ParamPoint pt{0, 0};
  std::pair<int, int> ranks{1, 2};
  int links[2] = {-1, -1};
};

std::pair<int, int> rank_pair(const CVector& e, int p, int q) {
  std::vector<int> order(static_cast<std::size_t>(e.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return band_order_less(e(a), e(b)); });
  int rp = 0, rq = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (order[r] == p) rp = static_cast<int>(r) + 1;
    if (order[r] == q) rq = static_cast<int>(r) + 1;
  }
  return {std::min(rp, rq), std::max(rp, rq)};
}

/// Refines the sign change of part(E_p - E_q) along one edge. Returns false
/// if the opposite part is not split at the crossing.
bool refine_crossing(const GridScan& gs, const ParamPoint& a, const ParamPoint& b, const CVector& ea,
                     const CVector& eb, int p, int q, PHLKind kind, double separation, Crossing& out) {
  const auto st = trace_segment(gs.model, a, b, ea, eb, gs.opts.max_refine, gs.opts.tol, true);
  const double noise = noise_floor(ea);
  auto g = [&](const CVector& e) { return part(e(p) - e(q), kind); };
  std::size_t k = 0;
  while (k + 1 < st.e.size() && positive(g(st.e[k]), noise) == positive(g(st.e[k + 1]), noise)) ++k;
  if (k + 1 >= st.e.size()) return false;

  double s0 = st.s[k], s1 = st.s[k + 1];
  CVector e0 = st.e[k];
  const bool side0 = positive(g(e0), noise);
  CVector em = e0;
  for (int it = 0; it < 60 && s1 - s0 > 1e-14; ++it) {
    const double sm = 0.5 * (s0 + s1);
    const CVector raw = spectrum_at(gs.model, a + sm * (b - a), gs.opts.tol);
    const CVector cand = reorder(raw, match_spectra(e0, raw, degeneracy_tolerance<double>(raw)).perm);
    if (positive(g(cand), noise) == side0) {
      s0 = sm;
      e0 = cand;
    } else {
      s1 = sm;
    }
    em = cand;
  }
  const double scale = std::max(1.0, spectral_radius<double>(em));
  if (std::abs(other_part(em(p) - em(q), kind)) <= separation * scale) return false;
  out.pt = a + 0.5 * (s0 + s1) * (b - a);
  out.ranks = rank_pair(em, p, q);
  return true;
}

struct CellEdges {
  // crossing ids per edge side: 0 bottom, 1 right, 2 top, 3 left
  std::vector<int> side[4];
};

} // namespace

std::vector<PHL> detect_phls(const GridScan& gs, PHLKind kind,
                             std::optional<std::pair<int, int>> band_pair, const std::vector<EP>& eps,
                             const FeatureOptions& fo) {
  const int n = gs.dim;
  if (n < 2) return {};

  // crossings on every edge, indexed per edge
  std::vector<Crossing> xs;
  std::map<std::tuple<int, int, int>, std::vector<int>> by_edge;
  for (int dir = 0; dir < 2; ++dir)
    for (int j = 0; j < gs.ny; ++j)
      for (int i = 0; i < gs.nx; ++i) {
        if (dir == 0 ? !gs.has_hedge(i, j) : !gs.has_vedge(i, j)) continue;
        const EdgeMatch& em = dir == 0 ? gs.hedge(i, j) : gs.vedge(i, j);
        const int i1 = dir == 0 ? i + 1 : i, j1 = dir == 0 ? j : j + 1;
        const CVector& ea = gs.at(i, j);
        const CVector& eb = gs.at(i1, j1);
        const double noise = noise_floor(ea);
        for (int p = 0; p < n; ++p)
          for (int q = p + 1; q < n; ++q) {
            const double ga = part(ea(p) - ea(q), kind);
            const double gb = part(eb(em.perm[static_cast<std::size_t>(p)]) - eb(em.perm[static_cast<std::size_t>(q)]), kind);
            if (positive(ga, noise) == positive(gb, noise)) continue;
            Crossing c;
            c.dir = dir;
            c.i = i;
            c.j = j;
            c.p = p;
            c.q = q;
            if (!refine_crossing(gs, gs.node(i, j), gs.node(i1, j1), ea, eb, p, q, kind, fo.separation, c))
              continue;
            by_edge[{dir, i, j}].push_back(static_cast<int>(xs.size()));
            xs.push_back(c);
          }
      }

  auto edge_crossings = [&](int dir, int i, int j) -> const std::vector<int>* {
    if (gs.wrap_x) i = wrap_index(i, gs.nx);
    if (gs.wrap_y) j = wrap_index(j, gs.ny);
    auto it = by_edge.find({dir, i, j});
    return it == by_edge.end() ? nullptr : &it->second;
  };
  auto link = [&](int a, int b) {
    for (int s = 0; s < 2; ++s)
      if (xs[static_cast<std::size_t>(a)].links[s] < 0) {
        xs[static_cast<std::size_t>(a)].links[s] = b;
        break;
      }
    for (int s = 0; s < 2; ++s)
      if (xs[static_cast<std::size_t>(b)].links[s] < 0) {
        xs[static_cast<std::size_t>(b)].links[s] = a;
        break;
      }
  };

  // link crossings cell by cell, grouped by band pair in corner-0 labels
  const int cx = gs.cells_x(), cy = gs.cells_y();
  for (int j = 0; j < cy; ++j)
    for (int i = 0; i < cx; ++i) {
      if (gs.flagged[static_cast<std::size_t>(j) * static_cast<std::size_t>(cx) + static_cast<std::size_t>(i)]) continue;
      const Permutation& sb = gs.hedge(i, j).perm;
      const Permutation& sl = gs.vedge(i, j).perm;
      const Permutation to_c0_from_c1 = inverse(sb);
      const Permutation to_c0_from_c3 = inverse(sl);
      std::map<std::pair<int, int>, CellEdges> groups;
      auto add = [&](const std::vector<int>* ids, int side, const Permutation* to_c0) {
        if (!ids) return;
        for (int id : *ids) {
          const Crossing& c = xs[static_cast<std::size_t>(id)];
          int a = c.p, b = c.q;
          if (to_c0) {
            a = (*to_c0)[static_cast<std::size_t>(a)];
            b = (*to_c0)[static_cast<std::size_t>(b)];
          }
          groups[{std::min(a, b), std::max(a, b)}].side[side].push_back(id);
        }
      };
      add(edge_crossings(0, i, j), 0, nullptr);
      add(edge_crossings(1, i + 1, j), 1, &to_c0_from_c1);
      add(edge_crossings(0, i, j + 1), 2, &to_c0_from_c3);
      add(edge_crossings(1, i, j), 3, nullptr);

      for (auto& [pair, ce] : groups) {
        std::vector<int> all;
        for (int s = 0; s < 4; ++s) all.insert(all.end(), ce.side[s].begin(), ce.side[s].end());
        if (all.size() == 2) {
          link(all[0], all[1]);
          continue;
        }
        if (all.size() != 4) continue;
        bool one_each = true;
        for (int s = 0; s < 4; ++s) one_each = one_each && ce.side[s].size() == 1;
        if (!one_each) continue;
        // saddle: decide by the sign at the cell centre, continued from corner 0
        const ParamPoint c0 = gs.node(i, j), c2 = gs.node(i + 1, j + 1);
        const ParamPoint mid = 0.5 * (c0 + c2);
        const CVector e_mid = spectrum_at(gs.model, mid, gs.opts.tol);
        const auto st = trace_segment(gs.model, c0, mid, gs.at(i, j), e_mid, gs.opts.max_refine,
                                      gs.opts.tol, false);
        const CVector tracked = reorder(e_mid, st.perm);
        const double noise = noise_floor(gs.at(i, j));
        const CVector& e0 = gs.at(i, j);
        const bool s0 = positive(part(e0(pair.first) - e0(pair.second), kind), noise);
        const bool sc = positive(part(tracked(pair.first) - tracked(pair.second), kind), noise);
        const int b = ce.side[0][0], r = ce.side[1][0], t = ce.side[2][0], l = ce.side[3][0];
        if (sc == s0) {
          link(b, r);
          link(t, l);
        } else {
          link(b, l);
          link(r, t);
        }
      }
    }

  // chains
  const SpaceTopology eff = gs.wrap_x ? (gs.wrap_y ? SpaceTopology::Torus : SpaceTopology::CylinderX)
                                      : (gs.wrap_y ? SpaceTopology::CylinderY : SpaceTopology::Plane);
  const bool full_window = gs.opts.window.full();
  std::vector<char> used(xs.size(), 0);

  auto cell_flagged = [&](int ci, int cj) {
    if (gs.wrap_x) ci = wrap_index(ci, cx);
    if (gs.wrap_y) cj = wrap_index(cj, cy);
    if (ci < 0 || cj < 0 || ci >= cx || cj >= cy) return false;
    return gs.flagged[static_cast<std::size_t>(cj) * static_cast<std::size_t>(cx) + static_cast<std::size_t>(ci)] != 0;
  };
  auto classify_end = [&](const Crossing& c) {
    // the two cells sharing this edge
    const int ci[2] = {c.i, c.dir == 0 ? c.i : c.i - 1};
    const int cj[2] = {c.dir == 0 ? c.j - 1 : c.j, c.j};
    Endpoint e;
    e.kind = EndpointKind::Dangling;
    for (int s = 0; s < 2; ++s) {
      const bool outside = (!gs.wrap_x && (ci[s] < 0 || ci[s] >= cx)) || (!gs.wrap_y && (cj[s] < 0 || cj[s] >= cy));
      if (outside) {
        e.kind = (eff == SpaceTopology::Plane && full_window) ? EndpointKind::AtInfinity : EndpointKind::AtBoundary;
        return e;
      }
    }
    for (int s = 0; s < 2; ++s) {
      if (!cell_flagged(ci[s], cj[s])) continue;
      e.kind = EndpointKind::AtEP;
      const ParamPoint centre = gs.node(ci[s], cj[s]) + ParamPoint(0.5 * gs.dx(), 0.5 * gs.dy());
      double best = 3.0 * std::max(gs.dx(), gs.dy());
      e.ep = -1;
      for (std::size_t k = 0; k < eps.size(); ++k) {
        const double d = distance(centre, eps[k].location, eff);
        if (d < best) {
          best = d;
          e.ep = static_cast<int>(k);
        }
      }
      return e;
    }
    return e;
  };

  std::vector<PHL> out;
  auto emit = [&](const std::vector<int>& chain, bool closed) {
    if (chain.size() < 2) return;
    PHL phl;
    phl.kind = kind;
    phl.closed = closed;
    std::map<std::pair<int, int>, int> votes;
    for (int id : chain) {
      const Crossing& c = xs[static_cast<std::size_t>(id)];
      phl.points.push_back(canonicalize(c.pt, eff));
      ++votes[c.ranks];
    }
    int best = -1;
    for (const auto& [pr, count] : votes)
      if (count > best) {
        best = count;
        phl.bands = pr;
      }
    if (band_pair && phl.bands != *band_pair) return;
    if (closed) {
      phl.homology = homology_class(phl.points, eff);
      phl.endpoints = {Endpoint{}};
    } else {
      phl.endpoints = {classify_end(xs[static_cast<std::size_t>(chain.front())]),
                       classify_end(xs[static_cast<std::size_t>(chain.back())])};
    }
    out.push_back(std::move(phl));
  };
  auto walk = [&](int start) {
    std::vector<int> chain{start};
    used[static_cast<std::size_t>(start)] = 1;
    int cur = start;
    for (;;) {
      const Crossing& c = xs[static_cast<std::size_t>(cur)];
      int next = -1;
      for (int cand : c.links)
        if (cand >= 0 && !used[static_cast<std::size_t>(cand)]) {
          next = cand;
          break;
        }
      if (next < 0) break;
      used[static_cast<std::size_t>(next)] = 1;
      chain.push_back(next);
      cur = next;
    }
    const Crossing& last = xs[static_cast<std::size_t>(cur)];
    const bool closed = chain.size() > 2 && (last.links[0] == start || last.links[1] == start);
    emit(chain, closed);
  };

  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto& c = xs[k];
    const int degree = (c.links[0] >= 0) + (c.links[1] >= 0);
    if (!used[k] && degree <= 1) walk(static_cast<int>(k));
  }
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (!used[k]) walk(static_cast<int>(k));
  return out;
}

// ---------------------------------------------------------------- EPs

double normalized_discriminant(const CMatrix& h) {
  const int n = static_cast<int>(h.rows());
  if (n < 2) return 1.0;
  const double rho = std::max(1.0, h.cwiseAbs().maxCoeff() * n);
  return std::abs(matrix_discriminant(h)) / std::pow(rho, n * (n - 1));
}

namespace {

struct Refined {
  bool converged = false;
  ParamPoint k{0, 0};
  double residual = 0.0;
  double condition = 0.0; // sigma_min / sigma_max of the Jacobian at the root
  Eigen::Vector2d null_dir{0, 0};
};

Refined newton_refine(const BlochModel& model, ParamPoint k, double ep_tol, int iters, double max_step) {
  // fixed normalisation so the target function is analytic in k
  const double norm = [&] {
    const CMatrix h = model.sample(k);
    const int n = static_cast<int>(h.rows());
    return std::pow(std::max(1.0, h.cwiseAbs().maxCoeff() * n), n * (n - 1));
  }();
  auto disc = [&](const ParamPoint& x) { return matrix_discriminant(CMatrix(model.sample(x))) / norm; };
  const double fd = 1e-6;
  auto jacobian = [&](const ParamPoint& x) {
    const cd dxp = disc(x + ParamPoint(fd, 0)), dxm = disc(x - ParamPoint(fd, 0));
    const cd dyp = disc(x + ParamPoint(0, fd)), dym = disc(x - ParamPoint(0, fd));
    const cd gx = (dxp - dxm) / (2 * fd), gy = (dyp - dym) / (2 * fd);
    Eigen::Matrix2d j;
    j << gx.real(), gy.real(), gx.imag(), gy.imag();
    return j;
  };
  Refined r;
  cd f = disc(k);
  for (int it = 0; it < iters && f != cd(0); ++it) {
    const Eigen::Matrix2d j = jacobian(k);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-8);
    Eigen::Vector2d step = -svd.solve(Eigen::Vector2d(f.real(), f.imag()));
    if (!std::isfinite(step.norm())) break;
    if (step.norm() > max_step) step *= max_step / step.norm();
    double damp = 1.0;
    bool improved = false;
    for (int h = 0; h < 20; ++h) {
      const ParamPoint cand = k + damp * step;
      const cd fc = disc(cand);
      if (std::abs(fc) < std::abs(f)) {
        k = cand;
        f = fc;
        improved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!improved) break;
  }
  r.k = k;
  r.residual = normalized_discriminant(model.sample(k));
  r.converged = r.residual < ep_tol;
  if (r.converged) {
    const Eigen::Matrix2d j = jacobian(k);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(j, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    r.condition = sv(0) > 0 ? sv(1) / sv(0) : 0.0;
    r.null_dir = svd.matrixV().col(1);
  }
  return r;
}

bool in_window(const GridScan& gs, const ParamPoint& p) {
  const Window& w = gs.opts.window;
  const bool px = gs.wrap_x, py = gs.wrap_y;
  return (px || (p.x() >= w.x0 && p.x() <= w.x1)) && (py || (p.y() >= w.y0 && p.y() <= w.y1));
}

SpaceTopology effective_topology(const GridScan& gs) {
  return gs.wrap_x ? (gs.wrap_y ? SpaceTopology::Torus : SpaceTopology::CylinderX)
                   : (gs.wrap_y ? SpaceTopology::CylinderY : SpaceTopology::Plane);
}

/// Ranks (by descending real part) of the `order` eigenvalues nearest to
/// `lambda` at a point shifted three cells along +kx.
std::pair<int, int> attribute_bands(const GridScan& gs, const ParamPoint& k, cd lambda) {
  const CVector e = spectrum_at(gs.model, k + ParamPoint(3.0 * gs.dx(), 0.0), gs.opts.tol);
  std::vector<int> idx(static_cast<std::size_t>(e.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(e(a) - lambda) < std::abs(e(b) - lambda); });
  // storage order is already (Re desc, Im desc), so the slot is the rank
  return {std::min(idx[0], idx[1]) + 1, std::max(idx[0], idx[1]) + 1};
}

/// Follows a curve of discriminant zeros through `start` in both directions,
/// one cell per step, until it closes or leaves the scanned window.
std::vector<ParamPoint> march_line(const GridScan& gs, const Refined& start, const FeatureOptions& fo) {
  const SpaceTopology eff = effective_topology(gs);
  const double h = std::min(gs.dx(), gs.dy());
  const int limit = 4 * (gs.nx + gs.ny);
  bool closed = false;
  auto march = [&](Eigen::Vector2d dir) {
    std::vector<ParamPoint> pts;
    ParamPoint p = start.k;
    for (int step = 0; step < limit; ++step) {
      const Refined r = newton_refine(gs.model, p + h * dir, fo.ep_tol, fo.newton_iters, 0.5 * h);
      if (!r.converged || r.condition >= 1e-6) break;
      const Eigen::Vector2d moved = r.k - p;
      if (moved.norm() < 0.25 * h) break;
      dir = moved.normalized();
      p = r.k;
      if (!in_window(gs, canonicalize(p, eff))) break;
      if (step > 2 && distance(p, start.k, eff) < 0.75 * h) {
        closed = true;
        break;
      }
      pts.push_back(canonicalize(p, eff));
    }
    return pts;
  };
  std::vector<ParamPoint> forward = march(start.null_dir);
  std::vector<ParamPoint> out;
  if (!closed) {
    std::vector<ParamPoint> backward = march(-start.null_dir);
    out.assign(backward.rbegin(), backward.rend());
  }
  out.push_back(canonicalize(start.k, eff));
  out.insert(out.end(), forward.begin(), forward.end());
  return out;
}

struct CoalescedPair {
  bool found = false;
  cd energy{0, 0};
  int order = 0;
  bool defective = false;
};

/// Closest pair of eigenvalues and everything that has coalesced with it.
/// Rounding splits an order-k EP by about eps^(1/k), so the cluster radius is
/// loose; defectiveness is read from the near-null space of h - E.
CoalescedPair coalesced_pair(const CMatrix& h) {
  CoalescedPair cp;
  const CVector e = eigenvalues<double>(h).values;
  const Eigen::Index n = e.size();
  if (n < 2) return cp;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  Eigen::Index a = 0, b = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(e(i) - e(j)) < std::abs(e(a) - e(b))) {
        a = i;
        b = j;
      }
  const double radius = 1e-4 * scale;
  if (std::abs(e(a) - e(b)) > radius) return cp;
  cp.found = true;
  cp.energy = 0.5 * (e(a) + e(b));
  cd sum(0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(e(i) - cp.energy) <= radius) {
      sum += e(i);
      ++cp.order;
    }
  cp.energy = sum / static_cast<double>(cp.order);
  const CMatrix shifted = h - cp.energy * CMatrix::Identity(n, n);
  const auto sv = Eigen::JacobiSVD<CMatrix>(shifted).singularValues();
  int small = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) small += sv(i) < 1e-3 * scale;
  cp.defective = small < cp.order;
  return cp;
}

} // namespace

EPResult detect_eps(const GridScan& gs, const FeatureOptions& fo) {
  EPResult res;
  const int n = gs.dim;
  if (n < 2) return res;
  const int nx = gs.nx, ny = gs.ny;
  const SpaceTopology eff = effective_topology(gs);

  std::vector<double> mag(gs.disc.size());
  for (std::size_t k = 0; k < gs.disc.size(); ++k) {
    const double rho = std::max(1.0, spectral_radius<double>(gs.energies[k]));
    mag[k] = std::abs(gs.disc[k]) / std::pow(rho, n * (n - 1));
  }
  auto disc_at = [&](int i, int j) -> cd {
    if (gs.wrap_x) i = wrap_index(i, nx);
    if (gs.wrap_y) j = wrap_index(j, ny);
    return gs.disc[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)];
  };

  std::vector<std::pair<ParamPoint, bool>> seeds; // (point, from a winding cell)
  // cells around which the discriminant winds
  for (int j = 0; j < gs.cells_y(); ++j)
    for (int i = 0; i < gs.cells_x(); ++i) {
      const cd c[4] = {disc_at(i, j), disc_at(i + 1, j), disc_at(i + 1, j + 1), disc_at(i, j + 1)};
      double total = 0.0;
      bool zero = false;
      for (int s = 0; s < 4; ++s) {
        if (c[s] == cd(0)) zero = true;
        else if (c[(s + 1) % 4] != cd(0)) total += std::arg(c[(s + 1) % 4] / c[s]);
      }
      if (zero || std::abs(total) > kPi)
        seeds.push_back({gs.node(i, j) + ParamPoint(0.5 * gs.dx(), 0.5 * gs.dy()), true});
    }
  // local minima of |D|
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double m = mag[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)];
      if (m > 0.05) continue;
      bool minimum = true, strict = false;
      for (int dj = -1; dj <= 1 && minimum; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!di && !dj) continue;
          int ii = i + di, jj = j + dj;
          if (gs.wrap_x) ii = wrap_index(ii, nx);
          if (gs.wrap_y) jj = wrap_index(jj, ny);
          if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
          const double o = mag[static_cast<std::size_t>(jj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ii)];
          if (o < m) {
            minimum = false;
            break;
          }
          if (o > m) strict = true;
        }
      if (minimum && strict) seeds.push_back({gs.node(i, j), false});
    }

  const double cell = std::max(gs.dx(), gs.dy());
  auto near_line = [&](const ParamPoint& k) {
    for (const auto& line : res.lines)
      for (const auto& q : line.points)
        if (distance(q, k, eff) < 2.0 * cell) return true;
    return false;
  };
  for (const auto& [seed, winding] : seeds) {
    const Refined r = newton_refine(gs.model, seed, fo.ep_tol, fo.newton_iters, 2.0 * cell);
    if (!r.converged) {
      // a shallow minimum of |D| that is not a root is not worth reporting
      if (!winding) continue;
      std::ostringstream msg;
      msg << "RefinementDiverged: seed (" << seed.x() << ", " << seed.y() << ") stopped at residual " << r.residual;
      res.warnings.push_back(msg.str());
      continue;
    }
    const ParamPoint k = canonicalize(r.k, eff);
    if (!in_window(gs, k)) continue;
    if (r.condition < 1e-6) {
      // does the discriminant stay zero along the null direction?
      const double along = normalized_discriminant(gs.model.sample(k + 0.05 * r.null_dir));
      if (along < 1e-6) {
        if (!near_line(k)) {
          ExceptionalLine line;
          line.points = march_line(gs, r, fo);
          const CoalescedPair cp = coalesced_pair(gs.model.sample(k));
          if (cp.found) line.bands = attribute_bands(gs, k, cp.energy);
          res.lines.push_back(std::move(line));
        }
        continue;
      }
    }
    bool dup = false;
    for (const EP& e : res.eps)
      if (distance(e.location, k, eff) < 1e-6) dup = true;
    if (dup) continue;
    const CoalescedPair cp = coalesced_pair(gs.model.sample(k));
    if (!cp.found) {
      res.warnings.push_back("discriminant root without a repeated eigenvalue dropped");
      continue;
    }
    if (!cp.defective) {
      res.warnings.push_back("non-defective degeneracy dropped");
      continue;
    }
    EP ep;
    ep.location = k;
    ep.energy = cp.energy;
    ep.residual = r.residual;
    ep.order = cp.order;
    ep.defective = true;
    ep.bands = attribute_bands(gs, k, ep.energy);
    res.eps.push_back(ep);
  }
  std::sort(res.eps.begin(), res.eps.end(), [](const EP& a, const EP& b) {
    if (a.location.x() != b.location.x()) return a.location.x() < b.location.x();
    return a.location.y() < b.location.y();
  });

  return res;
}

std::vector<EPRelation> relate_eps(const std::vector<EP>& eps) {
  std::vector<EPRelation> out;
  for (std::size_t a = 0; a < eps.size(); ++a)
    for (std::size_t b = a + 1; b < eps.size(); ++b) {
      const auto& x = eps[a].bands;
      const auto& y = eps[b].bands;
      int shared = 0;
      for (int u : {x.first, x.second})
        for (int v : {y.first, y.second}) shared += u == v;
      EPRelation r;
      r.a = static_cast<int>(a);
      r.b = static_cast<int>(b);
      r.relation = shared == 2 ? EPRelationKind::Paired
                               : (shared == 1 ? EPRelationKind::Intersected : EPRelationKind::Disjointed);
      out.push_back(r);
    }
  return out;
}

// ---------------------------------------------------------------- branch cuts

PHL trace_branch_cut(const std::vector<EP>& eps, int id, const GridScan& gs) {
  if (id < 0 || static_cast<std::size_t>(id) >= eps.size()) throw InvalidParams("no EP with id " + std::to_string(id));
  const EP& ep = eps[static_cast<std::size_t>(id)];
  const BlochModel& model = gs.model;
  const SpaceTopology eff = effective_topology(gs);
  const double tol = gs.opts.tol;
  const double h0 = 0.5 * std::min(gs.dx(), gs.dy());

  // Delta = (E_u - E_v)^2 for the two eigenvalues nearest to `near`
  auto pair_delta = [&](const CVector& e, cd near, int& u, int& v) {
    std::vector<int> idx(static_cast<std::size_t>(e.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(e(a) - near) < std::abs(e(b) - near); });
    u = idx[0];
    v = idx[1];
    const cd d = e(u) - e(v);
    return d * d;
  };
  auto delta_near = [&](const ParamPoint& k, cd near) {
    int u, v;
    return pair_delta(spectrum_at(model, k, tol), near, u, v);
  };

  const double s = 1e-5;
  const cd A = (delta_near(ep.location + ParamPoint(s, 0), ep.energy) -
                delta_near(ep.location - ParamPoint(s, 0), ep.energy)) / (2 * s);
  const cd B = (delta_near(ep.location + ParamPoint(0, s), ep.energy) -
                delta_near(ep.location - ParamPoint(0, s), ep.energy)) / (2 * s);
  double theta = std::atan2(-A.imag(), B.imag());
  if ((A * std::cos(theta) + B * std::sin(theta)).real() > 0) theta += kPi;
  Eigen::Vector2d dir(std::cos(theta), std::sin(theta));

  PHL cut;
  cut.kind = PHLKind::Real;
  cut.bands = ep.bands;
  cut.points.push_back(ep.location);
  Endpoint start;
  start.kind = EndpointKind::AtEP;
  start.ep = id;

  // tracked spectrum along the cut; the pair is the two slots nearest the EP
  ParamPoint p = ep.location;
  CVector tracked = spectrum_at(model, p + h0 * dir, tol);
  int u = 0, v = 1;
  pair_delta(tracked, ep.energy, u, v);

  auto delta_tracked = [&](const ParamPoint& k, CVector* keep) {
    const CVector raw = spectrum_at(model, k, tol);
    const CVector e = reorder(raw, match_spectra(tracked, raw, degeneracy_tolerance<double>(raw)).perm);
    if (keep) *keep = e;
    const cd d = e(u) - e(v);
    return d * d;
  };

  double h = h0;
  double length = 0.0;
  const double max_length = 8.0 * kTwoPi;
  for (int step = 0;; ++step) {
    if (h < 1e-6 * h0) throw TraceStalled("step collapsed near (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ")");
    if (length > max_length) throw TraceStalled("branch cut did not terminate");
    const Eigen::Vector2d normal(-dir.y(), dir.x());
    ParamPoint q = p + h * dir;
    bool ok = false;
    CVector eq;
    for (int it = 0; it < 12; ++it) {
      const cd d = delta_tracked(q, &eq);
      const double scale = std::max(1.0, std::abs(d));
      if (std::abs(d.imag()) < 1e-11 * scale) {
        ok = d.real() < 0;
        break;
      }
      const double fd = 1e-7;
      const double g1 = delta_tracked(q + fd * normal, nullptr).imag();
      const double g0 = delta_tracked(q - fd * normal, nullptr).imag();
      const double slope = (g1 - g0) / (2 * fd);
      if (slope == 0.0 || !std::isfinite(slope)) break;
      double t = -d.imag() / slope;
      t = std::clamp(t, -h, h);
      q += t * normal;
    }
    const Eigen::Vector2d moved = q - p;
    if (!ok || moved.dot(dir) < 0.3 * h || moved.norm() > 2.0 * h) {
      h *= 0.5;
      continue;
    }
    tracked = eq;
    dir = moved.normalized();
    p = q;
    length += moved.norm();
    cut.points.push_back(canonicalize(p, eff));
    h = std::min(h0, 1.5 * h);

    // termination at an EP
    int hit = -1;
    for (std::size_t k = 0; k < eps.size(); ++k) {
      if (static_cast<int>(k) == id && length < 4.0 * h0) continue;
      if (distance(p, eps[k].location, eff) < 1.5 * h0) hit = static_cast<int>(k);
    }
    if (hit >= 0) {
      cut.points.push_back(eps[static_cast<std::size_t>(hit)].location);
      Endpoint end;
      end.kind = EndpointKind::AtEP;
      end.ep = hit;
      cut.endpoints = {start, end};
      return cut;
    }
    // termination at the edge of the scanned domain
    const Window& w = gs.opts.window;
    const bool out_x = !gs.wrap_x && (p.x() < w.x0 || p.x() > w.x1);
    const bool out_y = !gs.wrap_y && (p.y() < w.y0 || p.y() > w.y1);
    if (out_x || out_y) {
      if (gs.model.topology == SpaceTopology::Torus)
        throw CompactnessViolation("branch cut from EP " + std::to_string(id) +
                                   " left the compact domain without reaching another EP: a single EP cannot exist on a torus");
      Endpoint end;
      end.kind = (eff == SpaceTopology::Plane && w.full()) ? EndpointKind::AtInfinity : EndpointKind::AtBoundary;
      cut.endpoints = {start, end};
      return cut;
    }
    (void)step;
  }
}

// ---------------------------------------------------------------- misc

bool pseudo_hermitian_test(const CMatrix& m, double tol) {
  const CVector e = eigenvalues<double>(m).values;
  const CVector c = e.conjugate();
  const Assignment a = match_spectra(e, c, degeneracy_tolerance<double>(c));
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (std::abs(c(a.perm[static_cast<std::size_t>(i)]) - e(i)) > tol * std::max(1.0, std::abs(e(i)))) return false;
  return true;
}

std::vector<int> enclosed_ep_ids(const PHL& phl, const std::vector<EP>& eps, const Window& w) {
  std::vector<ParamPoint> poly = phl.points;
  if (!phl.closed && poly.size() >= 2) {
    // close along the window boundary, counter-clockwise from the last point
    auto perimeter_pos = [&](const ParamPoint& p) {
      const double W = w.x1 - w.x0, H = w.y1 - w.y0;
      const double db = std::abs(p.y() - w.y0), dr = std::abs(p.x() - w.x1);
      const double dt = std::abs(p.y() - w.y1), dl = std::abs(p.x() - w.x0);
      const double m = std::min({db, dr, dt, dl});
      if (m == db) return std::clamp(p.x() - w.x0, 0.0, W);
      if (m == dr) return W + std::clamp(p.y() - w.y0, 0.0, H);
      if (m == dt) return W + H + std::clamp(w.x1 - p.x(), 0.0, W);
      return 2 * W + H + std::clamp(w.y1 - p.y(), 0.0, H);
    };
    const double W = w.x1 - w.x0, H = w.y1 - w.y0, P = 2 * (W + H);
    const double corners[4] = {W, W + H, 2 * W + H, P};
    const ParamPoint cpts[4] = {{w.x1, w.y0}, {w.x1, w.y1}, {w.x0, w.y1}, {w.x0, w.y0}};
    const double a = perimeter_pos(poly.back()), b = perimeter_pos(poly.front());
    double end = b < a ? b + P : b;
    for (int lap = 0; lap < 2; ++lap)
      for (int c = 0; c < 4; ++c) {
        const double pos = corners[c] + lap * P;
        if (pos > a && pos < end) poly.push_back(cpts[c]);
      }
  }
  std::vector<int> ids;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Eigen::Vector2d a = poly[i] - eps[k].location;
      const Eigen::Vector2d b = poly[(i + 1) % poly.size()] - eps[k].location;
      total += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    if (std::abs(total) > kPi) ids.push_back(static_cast<int>(k));
  }
  return ids;
}

FeatureSet extract_features(const GridScan& gs, const FeatureOptions& fo, bool trace_cuts) {
  FeatureSet fs;
  EPResult er = detect_eps(gs, fo);
  fs.eps = std::move(er.eps);
  fs.exceptional_lines = std::move(er.lines);
  fs.warnings = std::move(er.warnings);
  for (PHLKind kind : {PHLKind::Real, PHLKind::Imag}) {
    auto lines = detect_phls(gs, kind, std::nullopt, fs.eps, fo);
    fs.phls.insert(fs.phls.end(), lines.begin(), lines.end());
  }
  fs.relations = relate_eps(fs.eps);
  if (trace_cuts)
    for (std::size_t k = 0; k < fs.eps.size(); ++k) {
      try {
        fs.branch_cuts.push_back(trace_branch_cut(fs.eps, static_cast<int>(k), gs));
      } catch (const TraceStalled& e) {
        fs.warnings.push_back(e.what());
      }
    }
  return fs;
}

std::string phl_census(const std::vector<PHL>& phls, const std::vector<ExceptionalLine>& lines) {
  std::map<std::string, int> counts;
  for (const PHL& p : phls) {
    const WrapCount w = canonical_homology(p.homology);
    std::string key = std::string(to_string(p.kind)) + "(" + std::to_string(w[0]) + "," + std::to_string(w[1]) + ")";
    if (!p.closed) key += "open";
    ++counts[key];
  }
  if (!lines.empty()) counts["exceptional_line"] += static_cast<int>(lines.size());
  std::string out;
  for (const auto& [k, c] : counts) {
    if (!out.empty()) out += ' ';
    out += k + "x" + std::to_string(c);
  }
  return out.empty() ? "none" : out;
}

std::vector<std::pair<std::pair<int, int>, int>> ep_count_by_pair(const std::vector<EP>& eps) {
  std::map<std::pair<int, int>, int> counts;
  for (const EP& e : eps) ++counts[e.bands];
  return {counts.begin(), counts.end()};
}

} // namespace phtopo
