#pragma once

#include "phtopo/geometry.hpp"
#include "phtopo/spectrum.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace phtopo {

using Sampler = std::function<CMatrix(const ParamPoint&)>;
using SpectrumOracle = std::function<CVector(const ParamPoint&)>;

/// A Hamiltonian family evaluated at a parameter point. Immutable once built;
/// sampling is pure and may run concurrently.
struct BlochModel {
  std::string name;
  int dimension = 0;
  nlohmann::json params = nlohmann::json::object();
  SpaceTopology topology = SpaceTopology::Torus;
  Sampler sampler;
  SpectrumOracle analytic_spectrum; // empty when no closed form is known

  CMatrix sample(const ParamPoint& k) const { return sampler(k); }
  bool has_analytic() const { return static_cast<bool>(analytic_spectrum); }
};

/// Interpolated three-band model
///   H = (1 - s1 - s2) h(kx, ky) + s1 h(pi, ky) + s2 h(kx, pi).
BlochModel make_three_band_interp(double s1, double s2);

/// The 3x3 building block h(kx, ky) of the interpolated model.
CMatrix three_band_block(double kx, double ky);

/// Non-Hermitian bilayer square lattice with a removable real-crossing ring.
BlochModel make_bilayer_square(double alpha);

/// Hatano-Nelson lattice with an m-site unit cell along x.
struct HNParams {
  int cell_size = 1;   // m in {1, 2, 3}
  double t_x = 1.0;
  double t_y = 1.0;
  double eps0 = 0.0;   // +-eps0 onsite, m = 2 only
  double gamma0 = 0.0; // +-i gamma0 onsite, next-nearest-neighbour model only
  bool nnn = false;    // m = 3 with next-nearest-neighbour hopping
};
BlochModel make_hn_folded(const HNParams& p);

/// Two-band model with hoppings t_x + t_y and t_x e^{ikx} + t_y e^{iky} and
/// onsite +-eps0.
BlochModel make_two_band_alt(double t_x, double t_y, double eps0);

struct DVectorField {
  std::function<Eigen::Vector3d(const ParamPoint&)> d_real;
  std::function<Eigen::Vector3d(const ParamPoint&)> d_imag;
  std::function<cd(const ParamPoint&)> d0;
};
BlochModel make_two_band_dvector(DVectorField field, SpaceTopology topo);

/// k-independent diagonal matrix; the trivially separable reference model.
BlochModel make_constant_diagonal(const std::vector<cd>& values);

/// Adds a constant diagonal (onsite) term. The analytic oracle is dropped
/// because it no longer applies.
BlochModel with_onsite(BlochModel model, const std::vector<cd>& onsite);

/// Same model with a different parameter-space topology.
BlochModel with_topology(BlochModel model, SpaceTopology topo);

} // namespace phtopo
