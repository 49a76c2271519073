#include "phtopo/geometry.hpp"

#include "phtopo/errors.hpp"

#include <cmath>

namespace phtopo {

std::string_view to_string(SpaceTopology topo) {
  switch (topo) {
  case SpaceTopology::Plane:
    return "plane";
  case SpaceTopology::CylinderX:
    return "cylinder_x";
  case SpaceTopology::CylinderY:
    return "cylinder_y";
  case SpaceTopology::Torus:
    return "torus";
  }
  return "torus";
}

SpaceTopology topology_from_string(std::string_view name) {
  if (name == "plane") return SpaceTopology::Plane;
  if (name == "cylinder_x") return SpaceTopology::CylinderX;
  if (name == "cylinder_y") return SpaceTopology::CylinderY;
  if (name == "torus") return SpaceTopology::Torus;
  throw ConfigError("unknown topology '" + std::string(name) + "'");
}

double wrap_angle(double x) {
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r - kPi;
}

ParamPoint canonicalize(const ParamPoint& p, SpaceTopology topo) {
  ParamPoint q = p;
  if (is_periodic(topo, Axis::X)) q.x() = wrap_angle(p.x());
  if (is_periodic(topo, Axis::Y)) q.y() = wrap_angle(p.y());
  return q;
}

Eigen::Vector2d nearest_image_delta(const ParamPoint& a, const ParamPoint& b,
                                    SpaceTopology topo) {
  Eigen::Vector2d d = b - a;
  if (is_periodic(topo, Axis::X)) d.x() = std::remainder(d.x(), kTwoPi);
  if (is_periodic(topo, Axis::Y)) d.y() = std::remainder(d.y(), kTwoPi);
  return d;
}

double distance(const ParamPoint& a, const ParamPoint& b, SpaceTopology topo) {
  return nearest_image_delta(a, b, topo).norm();
}

LoopPath LoopPath::reversed() const {
  LoopPath r;
  r.vertices.assign(vertices.rbegin(), vertices.rend());
  r.closed = closed;
  r.wraps = {-wraps[0], -wraps[1]};
  return r;
}

LoopPath coordinate_loop(Axis axis, double fixed_value, int n_steps,
                         SpaceTopology topo) {
  if (!is_periodic(topo, axis))
    throw NonPeriodicAxis(std::string("axis ") + (axis == Axis::X ? "X" : "Y") +
                          " is not periodic on " + std::string(to_string(topo)));
  if (n_steps < 8) throw InvalidParams("coordinate_loop needs n_steps >= 8");

  LoopPath loop;
  loop.vertices.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (int j = 0; j <= n_steps; ++j) {
    const double t = -kPi + kTwoPi * j / n_steps;
    loop.vertices.push_back(axis == Axis::X ? ParamPoint(t, fixed_value)
                                            : ParamPoint(fixed_value, t));
  }
  loop.wraps = axis == Axis::X ? WrapCount{1, 0} : WrapCount{0, 1};
  return loop;
}

LoopPath circle_loop(const ParamPoint& center, double radius, int n_steps) {
  if (n_steps < 8) throw InvalidParams("circle_loop needs n_steps >= 8");
  LoopPath loop;
  loop.vertices.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (int j = 0; j <= n_steps; ++j) {
    const double a = kTwoPi * (j % n_steps) / n_steps;
    loop.vertices.push_back(center + radius * Eigen::Vector2d(std::cos(a), std::sin(a)));
  }
  return loop;
}

WrapCount homology_class(const std::vector<ParamPoint>& poly, SpaceTopology topo) {
  if (poly.size() < 2) return {0, 0};
  Eigen::Vector2d total = Eigen::Vector2d::Zero();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ParamPoint& a = poly[i];
    const ParamPoint& b = poly[(i + 1) % n];
    Eigen::Vector2d d = b - a;
    for (int ax = 0; ax < 2; ++ax) {
      if (!is_periodic(topo, static_cast<Axis>(ax))) continue;
      const double r = std::remainder(d[ax], kTwoPi);
      // |r| == pi is a half-turn with no preferred direction
      if (std::abs(r) >= kPi - 1e-12)
        throw AmbiguousWrap("segment " + std::to_string(i) + " jumps by pi or more");
      total[ax] += r;
    }
  }
  WrapCount w{0, 0};
  for (int ax = 0; ax < 2; ++ax)
    w[static_cast<std::size_t>(ax)] = static_cast<int>(std::lround(total[ax] / kTwoPi));
  return w;
}

WrapCount canonical_homology(WrapCount w) {
  if (w[0] < 0 || (w[0] == 0 && w[1] < 0)) return {-w[0], -w[1]};
  return w;
}

} // namespace phtopo
