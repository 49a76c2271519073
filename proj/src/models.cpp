#include "phtopo/models.hpp"

#include "phtopo/errors.hpp"

#include <cmath>

namespace phtopo {

namespace {

constexpr cd kI{0.0, 1.0};

cd phase(double k) { return std::polar(1.0, k); }

CMatrix block_from_phases(cd ex, cd ey) {
  const double r = 1.0 + 2.0 * std::sqrt(2.0);
  CMatrix h(3, 3);
  h << r - ex, -kI * (1.0 + ex), 0.0,
       -kI * (1.0 + ex), ex - ey, -kI * (1.0 + ey),
       0.0, -kI * (1.0 + ey), -r + ey;
  return h;
}

} // namespace

CMatrix three_band_block(double kx, double ky) {
  return block_from_phases(phase(kx), phase(ky));
}

BlochModel make_three_band_interp(double s1, double s2) {
  BlochModel m;
  m.name = "three_band_interp";
  m.dimension = 3;
  m.params = {{"s1", s1}, {"s2", s2}};
  m.topology = SpaceTopology::Torus;
  m.sampler = [s1, s2](const ParamPoint& k) {
    const cd ex = phase(k.x()), ey = phase(k.y());
    // h(pi, .) uses e^{i pi} = -1 exactly
    return CMatrix((1.0 - s1 - s2) * block_from_phases(ex, ey) +
                   s1 * block_from_phases(-1.0, ey) + s2 * block_from_phases(ex, -1.0));
  };
  return m;
}

BlochModel make_bilayer_square(double alpha) {
  BlochModel m;
  m.name = "bilayer_square";
  m.dimension = 2;
  m.params = {{"alpha", alpha}};
  m.sampler = [alpha](const ParamPoint& k) {
    const double c = std::cos(k.x()) + std::cos(k.y());
    const cd diag = -c - kI;
    const cd off = alpha - c - kI;
    CMatrix h(2, 2);
    h << diag, off, off, diag;
    return h;
  };
  m.analytic_spectrum = [alpha](const ParamPoint& k) {
    CVector e(2);
    e << cd(-alpha), alpha - 2.0 * std::cos(k.x()) - 2.0 * std::cos(k.y()) - 2.0 * kI;
    return e;
  };
  return m;
}

BlochModel make_hn_folded(const HNParams& p) {
  if (p.cell_size < 1 || p.cell_size > 3)
    throw InvalidParams("hn_folded cell_size must be 1, 2 or 3");
  if (p.eps0 != 0.0 && p.cell_size != 2)
    throw InvalidParams("hn_folded eps0 is only defined for cell_size 2");
  if (p.nnn && p.cell_size != 3)
    throw InvalidParams("hn_folded nnn hopping is only defined for cell_size 3");
  if (p.gamma0 != 0.0 && !p.nnn)
    throw InvalidParams("hn_folded gamma0 requires the next-nearest-neighbour model (nnn)");

  BlochModel m;
  m.name = "hn_folded";
  m.dimension = p.cell_size;
  m.params = {{"m", p.cell_size}, {"t_x", p.t_x},   {"t_y", p.t_y},
              {"eps0", p.eps0},    {"gamma0", p.gamma0}, {"nnn", p.nnn}};
  const double tx = p.t_x, ty = p.t_y, e0 = p.eps0, g0 = p.gamma0;

  switch (p.cell_size) {
  case 1:
    m.sampler = [tx, ty](const ParamPoint& k) {
      CMatrix h(1, 1);
      h << tx * phase(k.x()) + 2.0 * ty * std::cos(k.y());
      return h;
    };
    m.analytic_spectrum = [tx, ty](const ParamPoint& k) {
      CVector e(1);
      e << tx * phase(k.x()) + 2.0 * ty * std::cos(k.y());
      return e;
    };
    break;
  case 2:
    m.sampler = [tx, ty, e0](const ParamPoint& k) {
      const double d = 2.0 * ty * std::cos(k.y());
      CMatrix h(2, 2);
      h << d + e0, tx, tx * phase(k.x()), d - e0;
      return h;
    };
    m.analytic_spectrum = [tx, ty, e0](const ParamPoint& k) {
      const double d = 2.0 * ty * std::cos(k.y());
      const cd r = std::sqrt(e0 * e0 + tx * tx * phase(k.x()));
      CVector e(2);
      e << d + r, d - r;
      return e;
    };
    break;
  case 3:
    if (p.nnn) {
      m.sampler = [tx, ty, g0](const ParamPoint& k) {
        const double d = 2.0 * ty * std::cos(k.y());
        const cd t = tx * phase(k.x());
        CMatrix h(3, 3);
        h << d + kI * g0, tx, tx,
             t, d, tx,
             t, t, d - kI * g0;
        return h;
      };
    } else {
      m.sampler = [tx, ty](const ParamPoint& k) {
        const double d = 2.0 * ty * std::cos(k.y());
        CMatrix h = CMatrix::Zero(3, 3);
        h.diagonal().setConstant(d);
        h(0, 1) = tx;
        h(1, 2) = tx;
        h(2, 0) = tx * phase(k.x());
        return h;
      };
      m.analytic_spectrum = [tx, ty](const ParamPoint& k) {
        const double d = 2.0 * ty * std::cos(k.y());
        CVector e(3);
        for (int j = 0; j < 3; ++j) e(j) = d + tx * phase((k.x() + kTwoPi * j) / 3.0);
        return e;
      };
    }
    break;
  }
  return m;
}

BlochModel make_two_band_alt(double t_x, double t_y, double eps0) {
  BlochModel m;
  m.name = "two_band_alt";
  m.dimension = 2;
  m.params = {{"t_x", t_x}, {"t_y", t_y}, {"eps0", eps0}};
  m.sampler = [t_x, t_y, eps0](const ParamPoint& k) {
    CMatrix h(2, 2);
    h << eps0, t_x + t_y, t_x * phase(k.x()) + t_y * phase(k.y()), -eps0;
    return h;
  };
  m.analytic_spectrum = [t_x, t_y, eps0](const ParamPoint& k) {
    const cd r = std::sqrt(eps0 * eps0 + (t_x + t_y) * (t_x * phase(k.x()) + t_y * phase(k.y())));
    CVector e(2);
    e << r, -r;
    return e;
  };
  return m;
}

BlochModel make_two_band_dvector(DVectorField field, SpaceTopology topo) {
  if (!field.d_real || !field.d_imag) throw InvalidParams("d-vector components are required");
  if (!field.d0) field.d0 = [](const ParamPoint&) { return cd(0.0); };
  BlochModel m;
  m.name = "two_band_dvector";
  m.dimension = 2;
  m.topology = topo;
  auto eval = [field](const ParamPoint& k) {
    DVector d;
    d.d_real = field.d_real(k);
    d.d_imag = field.d_imag(k);
    d.d0 = field.d0(k);
    return d;
  };
  m.sampler = [eval](const ParamPoint& k) { return eval(k).matrix(); };
  m.analytic_spectrum = [eval](const ParamPoint& k) {
    const auto [ep, em] = two_band_energies(eval(k));
    CVector e(2);
    e << ep, em;
    return e;
  };
  return m;
}

BlochModel make_constant_diagonal(const std::vector<cd>& values) {
  if (values.empty() || values.size() > static_cast<std::size_t>(kMaxDimension))
    throw InvalidParams("constant_diagonal needs 1.." + std::to_string(kMaxDimension) + " values");
  BlochModel m;
  m.name = "constant_diagonal";
  m.dimension = static_cast<int>(values.size());
  nlohmann::json vals = nlohmann::json::array();
  for (const cd& v : values) vals.push_back({v.real(), v.imag()});
  m.params = {{"values", vals}};
  CVector diag(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) diag(static_cast<Eigen::Index>(i)) = values[i];
  m.sampler = [diag](const ParamPoint&) { return CMatrix(diag.asDiagonal()); };
  m.analytic_spectrum = [diag](const ParamPoint&) { return diag; };
  return m;
}

BlochModel with_onsite(BlochModel model, const std::vector<cd>& onsite) {
  if (onsite.size() != static_cast<std::size_t>(model.dimension))
    throw InvalidParams("onsite needs " + std::to_string(model.dimension) + " entries");
  CVector shift(model.dimension);
  nlohmann::json vals = nlohmann::json::array();
  for (int i = 0; i < model.dimension; ++i) {
    shift(i) = onsite[static_cast<std::size_t>(i)];
    vals.push_back({shift(i).real(), shift(i).imag()});
  }
  model.params["onsite"] = vals;
  model.sampler = [inner = std::move(model.sampler), shift](const ParamPoint& k) {
    CMatrix h = inner(k);
    h.diagonal() += shift;
    return h;
  };
  model.analytic_spectrum = nullptr;
  return model;
}

BlochModel with_topology(BlochModel model, SpaceTopology topo) {
  model.topology = topo;
  return model;
}

} // namespace phtopo
