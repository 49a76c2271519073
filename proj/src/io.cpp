#include "phtopo/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace phtopo {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_string(std::string& out, const std::string& s) { out += json(s).dump(); }

void write(std::string& out, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
  case json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [k, v] : j.items()) { // std::map keeps keys sorted
      if (!first) out += ",\n";
      first = false;
      out += pad;
      write_string(out, k);
      out += ": ";
      write(out, v, depth + 1);
    }
    out += "\n" + close + "}";
    return;
  }
  case json::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    // short arrays of scalars stay on one line
    bool flat = j.size() <= 8;
    for (const auto& v : j) flat = flat && !v.is_structured();
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write(out, j[i], depth + 1);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      write(out, j[i], depth + 1);
    }
    out += "\n" + close + "]";
    return;
  }
  case json::value_t::number_float: {
    const double v = j.get<double>();
    out += std::isfinite(v) ? format_double(v) : "null";
    return;
  }
  default:
    out += j.dump();
  }
}

json point(const ParamPoint& p) { return json::array({p.x(), p.y()}); }
json complex(cd z) { return json::array({z.real(), z.imag()}); }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

std::string dump_json(const json& j) {
  std::string out;
  write(out, j, 0);
  out += "\n";
  return out;
}

json to_json(const EP& ep) {
  return {{"kx", ep.location.x()},
          {"ky", ep.location.y()},
          {"bands", {ep.bands.first, ep.bands.second}},
          {"residual", ep.residual},
          {"order", ep.order},
          {"energy", complex(ep.energy)},
          {"defective", ep.defective}};
}

json to_json(const PHL& phl) {
  json ends = json::array();
  for (const auto& e : phl.endpoints) {
    json x = {{"kind", std::string(to_string(e.kind))}};
    if (e.kind == EndpointKind::AtEP) x["ep"] = e.ep;
    ends.push_back(x);
  }
  json pts = json::array();
  for (const auto& p : phl.points) pts.push_back(point(p));
  return {{"kind", std::string(to_string(phl.kind))},
          {"bands", {phl.bands.first, phl.bands.second}},
          {"homology", {phl.homology[0], phl.homology[1]}},
          {"closed", phl.closed},
          {"endpoints", ends},
          {"points", pts}};
}

json to_json(const FeatureSet& fs) {
  json out;
  out["eps"] = json::array();
  for (const auto& e : fs.eps) out["eps"].push_back(to_json(e));
  out["phls"] = json::array();
  for (const auto& p : fs.phls) out["phls"].push_back(to_json(p));
  out["branch_cuts"] = json::array();
  for (const auto& p : fs.branch_cuts) out["branch_cuts"].push_back(to_json(p));
  out["relations"] = json::array();
  for (const auto& r : fs.relations)
    out["relations"].push_back({{"a", r.a}, {"b", r.b}, {"relation", std::string(to_string(r.relation))}});
  out["exceptional_lines"] = json::array();
  for (const auto& l : fs.exceptional_lines) {
    json pts = json::array();
    for (const auto& p : l.points) pts.push_back(point(p));
    out["exceptional_lines"].push_back({{"bands", {l.bands.first, l.bands.second}}, {"points", pts}});
  }
  out["warnings"] = fs.warnings;
  out["census"] = phl_census(fs.phls, fs.exceptional_lines);
  return out;
}

json to_json(const LoopClass& lc, const TrackedBands& tb) {
  json w = json::array();
  for (const auto& x : lc.windings)
    w.push_back({{"W", x.W}, {"C", x.C}, {"band", x.band}, {"phase", x.phase}, {"residual", x.residual},
                 {"e_ref", complex(x.e_ref)}});
  json verts = json::array();
  for (const auto& v : tb.loop.vertices) verts.push_back(point(v));
  json start = json::array();
  for (Eigen::Index i = 0; i < tb.start().size(); ++i) start.push_back(complex(tb.start()(i)));
  return {{"cycle_type", lc.cycle_type},
          {"permutation", lc.permutation},
          {"cycles", lc.cycles},
          {"windings", w},
          {"basepoint", point(tb.loop.basepoint())},
          {"basepoint_energies", start},
          {"loop", {{"vertices", verts}, {"wraps", {tb.loop.wraps[0], tb.loop.wraps[1]}}, {"steps", tb.points.size() - 1}}},
          {"refinements", tb.refinements}};
}

std::vector<std::string> sweep_columns(const SweepResult& r) {
  std::vector<std::string> cols;
  for (const auto& o : r.spec.observables) cols.push_back(o.name());
  return cols;
}

json to_json(const SweepResult& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    json x = {{"value", s.value}, {"valid", s.valid}, {"observables", s.observables}, {"details", s.details}};
    if (!s.valid) x["error"] = s.error;
    samples.push_back(x);
  }
  json trans = json::array();
  for (const auto& t : r.transitions)
    trans.push_back({{"observable", t.observable},
                     {"value", t.value},
                     {"bracket", {t.lo, t.hi}},
                     {"before", t.before},
                     {"after", t.after},
                     {"resolved", t.resolved},
                     {"description", t.description}});
  return {{"model", r.spec.model},
          {"base_params", r.spec.base_params},
          {"parameter", r.spec.parameter},
          {"range", {r.spec.lo, r.spec.hi}},
          {"observables", sweep_columns(r)},
          {"tolerance", r.spec.tol},
          {"resolution", {r.spec.scan.nx, r.spec.scan.ny}},
          {"samples", samples},
          {"transitions", trans}};
}

void write_spectrum_csv(std::ostream& out, const GridScan& gs) {
  const int n = gs.dim;
  // slot[label] at every node
  std::vector<Permutation> slot(gs.energies.size());
  auto idx = [&](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(gs.nx) + static_cast<std::size_t>(i); };
  Permutation id(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) id[static_cast<std::size_t>(b)] = b;
  slot[idx(0, 0)] = id;
  for (int i = 0; i + 1 < gs.nx; ++i) slot[idx(i + 1, 0)] = compose(slot[idx(i, 0)], gs.hedge(i, 0).perm);
  for (int j = 0; j + 1 < gs.ny; ++j)
    for (int i = 0; i < gs.nx; ++i) slot[idx(i, j + 1)] = compose(slot[idx(i, j)], gs.vedge(i, j).perm);

  out << "kx,ky,band,re_e,im_e\n";
  for (int j = 0; j < gs.ny; ++j)
    for (int i = 0; i < gs.nx; ++i) {
      const ParamPoint k = gs.node(i, j);
      const CVector& e = gs.energies[idx(i, j)];
      for (int b = 0; b < n; ++b) {
        const cd z = e(slot[idx(i, j)][static_cast<std::size_t>(b)]);
        out << format_double(k.x()) << ',' << format_double(k.y()) << ',' << b + 1 << ','
            << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
      }
    }
}

void write_trajectory_csv(std::ostream& out, const TrackedBands& tb) {
  out << "step,t,kx,ky,band,re_e,im_e\n";
  for (std::size_t k = 0; k < tb.energies.size(); ++k)
    for (Eigen::Index b = 0; b < tb.energies[k].size(); ++b) {
      const cd z = tb.energies[k](b);
      out << k << ',' << format_double(tb.t[k]) << ',' << format_double(tb.points[k].x()) << ','
          << format_double(tb.points[k].y()) << ',' << b + 1 << ',' << format_double(z.real()) << ','
          << format_double(z.imag()) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  const auto cols = sweep_columns(r);
  out << "parameter,valid";
  for (const auto& c : cols) out << ',' << csv_cell(c);
  out << '\n';
  for (const auto& s : r.samples) {
    out << format_double(s.value) << ',' << (s.valid ? 1 : 0);
    for (const auto& c : cols) {
      auto it = s.observables.find(c);
      out << ',' << csv_cell(it == s.observables.end() ? "" : it->second);
    }
    out << '\n';
  }
}

} // namespace phtopo
