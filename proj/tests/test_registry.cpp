#include "oracles.hpp"

#include "phtopo/config.hpp"
#include "phtopo/errors.hpp"
#include "phtopo/io.hpp"
#include "phtopo/registry.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace phtopo;
using nlohmann::json;

TEST_CASE("registry builds every model with its defaults") {
  for (const auto& e : model_registry()) {
    CAPTURE(e.name);
    const BlochModel m = make_model(e.name);
    CHECK(m.dimension >= 1);
    CHECK(m.sample({0.3, -0.7}).rows() == m.dimension);
    const json p = resolve_params(e.name, json::object());
    for (const auto& s : e.params) CHECK(p.contains(s.name));
  }
}

TEST_CASE("registry rejects unknown names, keys and types") {
  CHECK_THROWS_AS(make_model("no_such_model"), InvalidParams);
  CHECK_THROWS_AS(make_model("bilayer_square", {{"beta", 1.0}}), InvalidParams);
  CHECK_THROWS_AS(make_model("bilayer_square", {{"alpha", "one"}}), InvalidParams);
  CHECK_THROWS_AS(make_model("hn_folded", {{"m", 1.5}}), InvalidParams);
  CHECK_THROWS_AS(make_model("hn_folded", {{"m", 4}}), InvalidParams);
  CHECK_THROWS_AS(make_model("bilayer_square", {{"onsite", json::array({1.0})}}), InvalidParams);
}

TEST_CASE("registry parameters reach the model") {
  const BlochModel a = make_model("three_band_interp", {{"s1", 0.25}, {"s2", 0.1}});
  const BlochModel b = make_three_band_interp(0.25, 0.1);
  for (const ParamPoint k : {ParamPoint(0.1, 0.2), ParamPoint(-2.0, 1.3)})
    CHECK((a.sample(k) - b.sample(k)).norm() < 1e-14);

  const BlochModel s = make_model("bilayer_square", {{"alpha", 2.0}, {"onsite", json::array({json::array({0.5, 0.1}), 0.0})}});
  const BlochModel r = make_bilayer_square(2.0);
  const CMatrix d = s.sample({0.4, 0.9}) - r.sample({0.4, 0.9});
  CHECK(std::abs(d(0, 0) - cd(0.5, 0.1)) < 1e-14);
  CHECK(std::abs(d(1, 1)) < 1e-14);
  CHECK(std::abs(d(0, 1)) < 1e-14);

  const BlochModel t = make_model("bilayer_square", {}, SpaceTopology::Plane);
  CHECK(t.topology == SpaceTopology::Plane);
}

TEST_CASE("d-vector coefficient tables") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  auto row = [&] { return json::array({u(rng), u(rng), u(rng), u(rng), u(rng)}); };
  const json dr = json::array({row(), row(), row()});
  const json di = json::array({row(), row(), row()});
  const json d0 = json::array({row(), row()});
  const BlochModel m = make_model("two_band_dvector", {{"d_real", dr}, {"d_imag", di}, {"d0", d0}});
  auto trig = [](const json& c, const ParamPoint& k) {
    return c[0].get<double>() + c[1].get<double>() * std::cos(k.x()) + c[2].get<double>() * std::sin(k.x()) +
           c[3].get<double>() * std::cos(k.y()) + c[4].get<double>() * std::sin(k.y());
  };
  for (int n = 0; n < 20; ++n) {
    const ParamPoint k(u(rng) * kPi, u(rng) * kPi);
    cd d[3];
    for (int a = 0; a < 3; ++a) d[a] = cd(trig(dr[a], k), trig(di[a], k));
    const cd e0(trig(d0[0], k), trig(d0[1], k));
    CMatrix h(2, 2);
    h << e0 + d[2], d[0] - cd(0, 1) * d[1], d[0] + cd(0, 1) * d[1], e0 - d[2];
    CHECK((m.sample(k) - h).norm() < 1e-13);
  }
  CHECK_THROWS_AS(make_model("two_band_dvector", {{"d_real", json::array({row(), row()})}}), InvalidParams);
}

TEST_CASE("registry listing") {
  const json j = registry_json();
  REQUIRE(j.is_array());
  CHECK(j.size() == model_registry().size());
  for (const auto& e : j) {
    CHECK(e.contains("name"));
    CHECK(e.contains("params"));
  }
}

TEST_CASE("parse_angle") {
  CHECK(parse_angle(1.25) == 1.25);
  CHECK(parse_angle("pi") == doctest::Approx(kPi));
  CHECK(parse_angle("-pi") == doctest::Approx(-kPi));
  CHECK(parse_angle("pi/2") == doctest::Approx(kPi / 2));
  CHECK(parse_angle("-pi/3") == doctest::Approx(-kPi / 3));
  CHECK(parse_angle("3pi/2") == doctest::Approx(1.5 * kPi));
  CHECK(parse_angle("0.25pi") == doctest::Approx(0.25 * kPi));
  CHECK_THROWS_AS(parse_angle("tau"), ConfigError);
  CHECK_THROWS_AS(parse_angle(json::array()), ConfigError);
}

TEST_CASE("config parsing") {
  const json base = {{"model", "two_band_alt"}, {"params", {{"eps0", 0.8}}}};
  const RunConfig c = parse_config(base);
  CHECK(c.model == "two_band_alt");
  CHECK(c.nx == 201);
  CHECK(c.output == "out");
  CHECK(c.build_model().params["eps0"] == 0.8);

  json g = base;
  g["grid"] = {{"nx", 64}, {"ny", 48}, {"window", {{"kx", {-1.0, 1.0}}, {"ky", {"-pi", "pi"}}}}};
  g["topology"] = "plane";
  const RunConfig cg = parse_config(g);
  CHECK(cg.nx == 64);
  CHECK(cg.ny == 48);
  CHECK(cg.topology == SpaceTopology::Plane);
  CHECK(cg.scan_options(1).nx == 64);

  for (const json& bad : {json{{"model", "two_band_alt"}, {"colour", 1}},
                          json{{"model", "two_band_alt"}, {"grid", {{"nx", 8}}}},
                          json{{"model", "two_band_alt"}, {"grid", {{"nz", 64}}}},
                          json{{"model", "two_band_alt"}, {"tolerances", {{"ambiguity_ratio", 0.5}}}},
                          json{{"params", json::object()}}}) {
    CAPTURE(bad.dump());
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
  }
  CHECK_THROWS_AS(parse_config({{"model", "two_band_alt"}, {"params", {{"eps", 1}}}}), InvalidParams);
  CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ConfigError);
}

TEST_CASE("onsite perturbation is reproducible from the seed") {
  const json j = {{"model", "hn_folded"}, {"params", {{"m", 2}}}, {"seed", 7}, {"perturbation", {{"onsite", 0.05}}}};
  const CMatrix a = parse_config(j).build_model().sample({0.2, 0.3});
  const CMatrix b = parse_config(j).build_model().sample({0.2, 0.3});
  CHECK((a - b).norm() == 0.0);
  json k = j;
  k["seed"] = 8;
  const CMatrix c = parse_config(k).build_model().sample({0.2, 0.3});
  CHECK((a - c).norm() > 0.0);
  const CMatrix clean = make_model("hn_folded", {{"m", 2}}).sample({0.2, 0.3});
  for (int i = 0; i < 2; ++i) CHECK(std::abs(a(i, i) - clean(i, i)) <= 0.05 + 1e-15);
}

TEST_CASE("parse_loop") {
  const LoopSpec a = parse_loop({{"kind", "coordinate"}, {"axis", "kx"}, {"fixed", "pi/2"}, {"n_steps", 64}});
  CHECK(a.axis == Axis::X);
  CHECK(a.fixed == doctest::Approx(kPi / 2));
  const LoopPath p = build_loop(a, SpaceTopology::Torus);
  CHECK(p.steps() == 64u);
  CHECK(p.wraps == WrapCount{1, 0});
  CHECK(p.vertices.front().x() == doctest::Approx(-kPi));

  const LoopSpec s = parse_loop({{"kind", "coordinate"}, {"axis", "ky"}, {"fixed", 0}, {"start", 0}});
  const LoopPath q = build_loop(s, SpaceTopology::Torus);
  CHECK(q.vertices.front().y() == doctest::Approx(0.0));
  CHECK(q.vertices.back().y() == doctest::Approx(kTwoPi));

  const LoopSpec c = parse_loop({{"kind", "circle"}, {"center", {1.0, 2.0}}, {"radius", 0.2}});
  CHECK(build_loop(c, SpaceTopology::Torus).wraps == WrapCount{0, 0});

  const LoopSpec poly = parse_loop({{"kind", "polygon"}, {"vertices", {{0, 0}, {1, 0}, {1, 1}}}});
  const LoopPath pp = build_loop(poly, SpaceTopology::Torus);
  CHECK(pp.vertices.size() == 4u);
  CHECK((pp.vertices.back() - pp.vertices.front()).norm() == 0.0);

  CHECK_THROWS_AS(parse_loop({{"kind", "square"}}), ConfigError);
  CHECK_THROWS_AS(parse_loop({{"kind", "coordinate"}, {"axis", "kz"}}), ConfigError);
  CHECK_THROWS_AS(parse_loop({{"kind", "circle"}, {"center", {0, 0}}, {"radius", -1}}), ConfigError);
  CHECK_THROWS_AS(parse_loop({{"kind", "coordinate"}, {"n_steps", 4}}), ConfigError);
  CHECK_THROWS_AS(parse_loop({{"kind", "coordinate"}, {"radius", 1}}), ConfigError);
}

TEST_CASE("dump_json is sorted, exact and stable") {
  json j = {{"b", 0.1}, {"a", {1, 2, 3}}, {"c", {{"z", true}, {"y", nullptr}}}, {"d", std::nan("")}};
  const std::string s = dump_json(j);
  CHECK(s == dump_json(json::parse(json(j).dump())));
  CHECK(s.back() == '\n');
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("\"d\": null") != std::string::npos);
  CHECK(s.find("[1, 2, 3]") != std::string::npos);
  // %.17g round-trips every double
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 100; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("spectrum CSV matches the analytic bilayer spectrum") {
  const BlochModel m = make_bilayer_square(1.0);
  ScanOptions o;
  o.nx = 33;
  o.ny = 35;
  const GridScan gs = scan(m, o);
  std::ostringstream out;
  write_spectrum_csv(out, gs);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "kx,ky,band,re_e,im_e");
  int rows = 0;
  double worst = 0;
  while (std::getline(in, line)) {
    double kx, ky, re, im;
    int band;
    char c;
    std::istringstream r(line);
    r >> kx >> c >> ky >> c >> band >> c >> re >> c >> im;
    const CVector e = m.analytic_spectrum({kx, ky});
    double best = 1e300;
    for (Eigen::Index b = 0; b < e.size(); ++b) best = std::min(best, std::abs(e(b) - cd(re, im)));
    worst = std::max(worst, best);
    ++rows;
  }
  CHECK(rows == 33 * 35 * 2);
  CHECK(worst < 1e-9);
}

TEST_CASE("feature JSON carries the census and EP fields") {
  const BlochModel m = make_two_band_alt(1.0, 0.5, 1.0);
  ScanOptions o;
  o.nx = o.ny = 64;
  const FeatureSet fs = extract_features(scan(m, o), {}, true);
  const json j = to_json(fs);
  REQUIRE(j["eps"].size() == 2u);
  for (const auto& e : j["eps"]) {
    CHECK(e["order"] == 2);
    CHECK(e["defective"] == true);
    CHECK(e["bands"] == json::array({1, 2}));
  }
  CHECK(j["census"].is_string());
  CHECK(dump_json(j) == dump_json(to_json(extract_features(scan(m, o), {}, true))));
}
