#include "phtopo/registry.hpp"

#include "phtopo/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace phtopo {

using nlohmann::json;

cd complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidParams("expected a number or [re, im], got " + j.dump());
}

namespace {

std::vector<cd> complex_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidParams(what + " must be a list");
  std::vector<cd> out;
  for (const auto& v : j) out.push_back(complex_from_json(v));
  return out;
}

using Coeffs = std::array<double, 5>;

/// c + cx cos kx + sx sin kx + cy cos ky + sy sin ky
double trig(const Coeffs& c, const ParamPoint& k) {
  return c[0] + c[1] * std::cos(k.x()) + c[2] * std::sin(k.x()) + c[3] * std::cos(k.y()) + c[4] * std::sin(k.y());
}

Coeffs coeff_row(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 5) throw InvalidParams(what + " rows need 5 coefficients [c, cx, sx, cy, sy]");
  Coeffs c{};
  for (std::size_t i = 0; i < 5; ++i) {
    if (!j[i].is_number()) throw InvalidParams(what + " coefficients must be numbers");
    c[i] = j[i].get<double>();
  }
  return c;
}

std::array<Coeffs, 3> coeff_table(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw InvalidParams(what + " needs 3 rows (x, y, z)");
  return {coeff_row(j[0], what), coeff_row(j[1], what), coeff_row(j[2], what)};
}

json zero_table() { return json::array({json::array({0, 0, 0, 0, 0}), json::array({0, 0, 0, 0, 0}), json::array({0, 0, 0, 0, 0})}); }

std::vector<ModelEntry> build_registry() {
  std::vector<ModelEntry> r;
  r.push_back({"three_band_interp",
               "three-band lattice interpolated towards h(pi, ky) and h(kx, pi)",
               {{"s1", "number", 0.5, "weight of h(pi, ky)"}, {"s2", "number", 0.0, "weight of h(kx, pi)"}},
               [](const json& p) { return make_three_band_interp(p["s1"].get<double>(), p["s2"].get<double>()); }});
  r.push_back({"bilayer_square",
               "non-Hermitian bilayer square lattice",
               {{"alpha", "number", 1.0, "interlayer offset"}},
               [](const json& p) { return make_bilayer_square(p["alpha"].get<double>()); }});
  r.push_back({"hn_folded",
               "Hatano-Nelson lattice with an m-site unit cell",
               {{"m", "integer", 1, "sites per unit cell (1, 2, 3)"},
                {"t_x", "number", 1.0, "hopping along x"},
                {"t_y", "number", 1.0, "hopping along y"},
                {"eps0", "number", 0.0, "onsite +-eps0 (m = 2)"},
                {"gamma0", "number", 0.0, "onsite +-i gamma0 (nnn model)"},
                {"nnn", "boolean", false, "next-nearest-neighbour three-site model"}},
               [](const json& p) {
                 HNParams h;
                 h.cell_size = p["m"].get<int>();
                 h.t_x = p["t_x"].get<double>();
                 h.t_y = p["t_y"].get<double>();
                 h.eps0 = p["eps0"].get<double>();
                 h.gamma0 = p["gamma0"].get<double>();
                 h.nnn = p["nnn"].get<bool>();
                 return make_hn_folded(h);
               }});
  r.push_back({"two_band_alt",
               "two-band model with onsite +-eps0",
               {{"t_x", "number", 1.0, "hopping along x"},
                {"t_y", "number", 0.5, "hopping along y"},
                {"eps0", "number", 1.0, "onsite splitting"}},
               [](const json& p) {
                 return make_two_band_alt(p["t_x"].get<double>(), p["t_y"].get<double>(), p["eps0"].get<double>());
               }});
  r.push_back({"two_band_dvector",
               "H = d.sigma + d0; each component is c + cx cos kx + sx sin kx + cy cos ky + sy sin ky",
               {{"d_real", "coefficient_table", zero_table(), "rows x, y, z of Re d"},
                {"d_imag", "coefficient_table", zero_table(), "rows x, y, z of Im d"},
                {"d0", "coefficient_table", json::array({json::array({0, 0, 0, 0, 0}), json::array({0, 0, 0, 0, 0})}),
                 "rows re, im of d0"}},
               [](const json& p) {
                 const auto dr = coeff_table(p["d_real"], "d_real");
                 const auto di = coeff_table(p["d_imag"], "d_imag");
                 if (!p["d0"].is_array() || p["d0"].size() != 2) throw InvalidParams("d0 needs 2 rows (re, im)");
                 const Coeffs d0r = coeff_row(p["d0"][0], "d0"), d0i = coeff_row(p["d0"][1], "d0");
                 DVectorField f;
                 f.d_real = [dr](const ParamPoint& k) { return Eigen::Vector3d(trig(dr[0], k), trig(dr[1], k), trig(dr[2], k)); };
                 f.d_imag = [di](const ParamPoint& k) { return Eigen::Vector3d(trig(di[0], k), trig(di[1], k), trig(di[2], k)); };
                 f.d0 = [d0r, d0i](const ParamPoint& k) { return cd(trig(d0r, k), trig(d0i, k)); };
                 BlochModel m = make_two_band_dvector(f, SpaceTopology::Torus);
                 m.params = {{"d_real", p["d_real"]}, {"d_imag", p["d_imag"]}, {"d0", p["d0"]}};
                 return m;
               }});
  r.push_back({"constant_diagonal",
               "k-independent diagonal matrix",
               {{"values", "complex_list", json::array({1.0, 2.0, 3.0}), "diagonal entries, numbers or [re, im]"}},
               [](const json& p) { return make_constant_diagonal(complex_list(p["values"], "values")); }});
  return r;
}

bool type_ok(const std::string& type, const json& v) {
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer() || (v.is_number() && std::floor(v.get<double>()) == v.get<double>());
  if (type == "boolean") return v.is_boolean();
  return v.is_array();
}

} // namespace

const std::vector<ModelEntry>& model_registry() {
  static const std::vector<ModelEntry> r = build_registry();
  return r;
}

const ModelEntry& find_model(const std::string& name) {
  for (const auto& e : model_registry())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : model_registry()) known += (known.empty() ? "" : ", ") + e.name;
  throw InvalidParams("unknown model '" + name + "' (known: " + known + ")");
}

json resolve_params(const std::string& name, const json& params) {
  const ModelEntry& e = find_model(name);
  if (!params.is_object() && !params.is_null()) throw InvalidParams("params must be an object");
  json out = json::object();
  for (const auto& s : e.params) out[s.name] = s.default_value;
  for (const auto& [key, value] : params.items()) {
    if (key == "onsite") {
      complex_list(value, "onsite");
      out[key] = value;
      continue;
    }
    auto it = std::find_if(e.params.begin(), e.params.end(), [&](const ParamSchema& s) { return s.name == key; });
    if (it == e.params.end()) throw InvalidParams("model '" + name + "' has no parameter '" + key + "'");
    if (!type_ok(it->type, value)) throw InvalidParams("parameter '" + key + "' must be " + it->type);
    out[key] = it->type == "integer" ? json(static_cast<int>(value.get<double>())) : value;
  }
  return out;
}

BlochModel make_model(const std::string& name, const json& params, std::optional<SpaceTopology> topology) {
  const json p = resolve_params(name, params);
  BlochModel m = find_model(name).build(p);
  if (p.contains("onsite")) m = with_onsite(std::move(m), complex_list(p["onsite"], "onsite"));
  if (topology) m = with_topology(std::move(m), *topology);
  return m;
}

json registry_json() {
  json out = json::array();
  for (const auto& e : model_registry()) {
    json params = json::array();
    for (const auto& s : e.params)
      params.push_back({{"name", s.name}, {"type", s.type}, {"default", s.default_value}, {"description", s.description}});
    params.push_back({{"name", "onsite"}, {"type", "complex_list"}, {"default", nullptr},
                      {"description", "optional diagonal shift, one entry per band"}});
    out.push_back({{"name", e.name}, {"description", e.description}, {"params", params}});
  }
  return out;
}

} // namespace phtopo
