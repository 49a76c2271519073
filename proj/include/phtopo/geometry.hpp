#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace phtopo {

/// A point (kx, ky) of the two-dimensional parameter space, in radians.
using ParamPoint = Eigen::Vector2d;

enum class SpaceTopology { Plane, CylinderX, CylinderY, Torus };

enum class Axis { X = 0, Y = 1 };

/// Signed 2pi crossings along (kx, ky).
using WrapCount = std::array<int, 2>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// CylinderX is periodic along kx, CylinderY along ky.
constexpr bool is_periodic(SpaceTopology topo, Axis axis) {
  switch (topo) {
  case SpaceTopology::Torus:
    return true;
  case SpaceTopology::CylinderX:
    return axis == Axis::X;
  case SpaceTopology::CylinderY:
    return axis == Axis::Y;
  case SpaceTopology::Plane:
    return false;
  }
  return false;
}

std::string_view to_string(SpaceTopology topo);
SpaceTopology topology_from_string(std::string_view name);

/// Reduces x into the half-open interval [-pi, pi).
double wrap_angle(double x);

/// Representative of p in the fundamental domain; periodic axes land in
/// [-pi, pi), non-periodic axes are left untouched.
ParamPoint canonicalize(const ParamPoint& p, SpaceTopology topo);

/// Displacement b - a using the nearest periodic image on periodic axes.
Eigen::Vector2d nearest_image_delta(const ParamPoint& a, const ParamPoint& b,
                                    SpaceTopology topo);

double distance(const ParamPoint& a, const ParamPoint& b, SpaceTopology topo);

struct LoopPath {
  std::vector<ParamPoint> vertices; // unwrapped; the model is sampled here
  bool closed = true;
  WrapCount wraps{0, 0};

  std::size_t steps() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  const ParamPoint& basepoint() const { return vertices.front(); }

  /// Same path traversed backwards; wraps are negated.
  LoopPath reversed() const;
};

/// Straight non-contractible loop along `axis` at the given value of the other
/// coordinate, sweeping [-pi, pi] in `n_steps` uniform steps.
LoopPath coordinate_loop(Axis axis, double fixed_value, int n_steps,
                         SpaceTopology topo);

/// Counter-clockwise circle, starting at angle zero.
LoopPath circle_loop(const ParamPoint& center, double radius, int n_steps);

/// Signed wrap counts of a closed polyline; the closing segment from the last
/// vertex back to the first is implied. Throws AmbiguousWrap when any segment
/// jumps by pi or more along a periodic coordinate.
WrapCount homology_class(const std::vector<ParamPoint>& poly, SpaceTopology topo);

/// Flips the sign so the first non-zero component is positive.
WrapCount canonical_homology(WrapCount w);

} // namespace phtopo
