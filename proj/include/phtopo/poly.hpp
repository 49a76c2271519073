#pragma once

// Characteristic polynomials, polynomial roots and discriminants for small
// complex matrices. Coefficient vectors are stored highest degree first, so
// [1, b, c] is z^2 + b z + c.

#include "phtopo/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace phtopo {

template <typename Scalar>
using CMatrixT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMatrix = CMatrixT<double>;
using CVector = CVectorT<double>;
using cd = std::complex<double>;

inline constexpr int kMaxDimension = 6;

template <typename Scalar>
struct Spectrum {
  CVectorT<Scalar> values;    // (Re desc, Im desc)
  RVectorT<Scalar> residuals; // |p(lambda)| after polishing
};

/// Storage order used everywhere: real part descending, then imaginary part
/// descending.
template <typename Scalar>
bool band_order_less(const std::complex<Scalar>& a, const std::complex<Scalar>& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

/// det(z I - m) by the Berkowitz recurrence (division free).
template <typename Derived>
CVectorT<typename Derived::RealScalar> char_poly(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::RealScalar;
  using C = std::complex<Scalar>;
  const Eigen::Index n = m.rows();
  if (n != m.cols() || n < 1) throw InvalidParams("char_poly needs a square matrix");
  if (n > kMaxDimension)
    throw DimensionTooLarge("n = " + std::to_string(n) + " exceeds " +
                            std::to_string(kMaxDimension));

  CVectorT<Scalar> p(2);
  p << C(1), -C(m(0, 0));
  for (Eigen::Index r = 1; r < n; ++r) {
    const auto lead = m.topLeftCorner(r, r);
    const CVectorT<Scalar> col = m.col(r).head(r);
    const Eigen::Matrix<C, 1, Eigen::Dynamic> row = m.row(r).head(r);

    CVectorT<Scalar> t(r + 2);
    t(0) = C(1);
    t(1) = -C(m(r, r));
    CVectorT<Scalar> v = col;
    for (Eigen::Index k = 0; k < r; ++k) {
      t(k + 2) = -(row * v)(0);
      v = (lead * v).eval();
    }
    CVectorT<Scalar> next = CVectorT<Scalar>::Zero(r + 2);
    for (Eigen::Index i = 0; i < r + 2; ++i)
      for (Eigen::Index j = 0; j <= std::min(i, r); ++j) next(i) += t(i - j) * p(j);
    p = next;
  }
  return p;
}

template <typename Scalar>
std::complex<Scalar> poly_eval(const CVectorT<Scalar>& c, const std::complex<Scalar>& z) {
  std::complex<Scalar> acc(0);
  for (Eigen::Index i = 0; i < c.size(); ++i) acc = acc * z + c(i);
  return acc;
}

/// p(z) and p'(z) in one Horner pass.
template <typename Scalar>
std::pair<std::complex<Scalar>, std::complex<Scalar>> poly_eval_d(
    const CVectorT<Scalar>& c, const std::complex<Scalar>& z) {
  std::complex<Scalar> p(0), dp(0);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    dp = dp * z + p;
    p = p * z + c(i);
  }
  return {p, dp};
}

/// sum |c_i| |z|^i, the scale against which |p(z)| is a backward error.
template <typename Scalar>
Scalar poly_magnitude(const CVectorT<Scalar>& c, const std::complex<Scalar>& z) {
  const Scalar r = std::abs(z);
  Scalar acc(0);
  for (Eigen::Index i = 0; i < c.size(); ++i) acc = acc * r + std::abs(c(i));
  return acc;
}

/// Monic polynomial with the given roots.
template <typename Scalar>
CVectorT<Scalar> poly_from_roots(const CVectorT<Scalar>& roots) {
  CVectorT<Scalar> c = CVectorT<Scalar>::Zero(roots.size() + 1);
  c(0) = 1;
  for (Eigen::Index k = 0; k < roots.size(); ++k)
    for (Eigen::Index i = k + 1; i >= 1; --i) c(i) -= roots(k) * c(i - 1);
  return c;
}

template <typename Scalar>
CMatrixT<Scalar> companion_matrix(const CVectorT<Scalar>& c) {
  const Eigen::Index n = c.size() - 1;
  CMatrixT<Scalar> m = CMatrixT<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) m(0, j) = -c(j + 1) / c(0);
  for (Eigen::Index i = 1; i < n; ++i) m(i, i - 1) = 1;
  return m;
}

/// Coefficients of p'.
template <typename Scalar>
CVectorT<Scalar> poly_derivative(const CVectorT<Scalar>& c) {
  const Eigen::Index n = c.size() - 1;
  if (n < 1) return CVectorT<Scalar>::Zero(1);
  CVectorT<Scalar> d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = c(i) * Scalar(n - i);
  return d;
}

/// A computed k-fold root splits into k roots about eps^(1/k) apart. Groups
/// of nearby roots whose centre is a root of p, p', ..., p^(k-1) up to
/// rounding are replaced by that centre, so multiple roots come out exactly
/// equal.
///
/// `scale` is the size of the underlying matrix entries; coefficient j then
/// carries rounding error of order eps * scale^j.
template <typename Scalar>
void collapse_multiple_roots(const CVectorT<Scalar>& coeffs, Spectrum<Scalar>& s, Scalar scale) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = s.values.size();
  if (n < 2) return;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, Scalar(std::abs(s.values(i))));
  const Scalar link = Scalar(1e-3) * std::max(Scalar(1), scale);

  std::vector<CVectorT<Scalar>> derivs{coeffs};
  for (Eigen::Index k = 1; k < n; ++k) derivs.push_back(poly_derivative(derivs.back()));

  auto try_collapse = [&](const std::vector<Eigen::Index>& group) {
    const std::size_t k = group.size();
    C m(0);
    for (auto i : group) m += s.values(i);
    m /= Scalar(k);
    // the centre is a simple root of p^(k-1)
    const auto& top = derivs[k - 1];
    for (int it = 0; it < 3; ++it) {
      auto [p, dp] = poly_eval_d(top, m);
      if (dp == C(0)) break;
      m -= p / dp;
    }
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const Scalar r = std::abs(poly_eval(derivs[j], m));
      const Scalar floor = std::pow(scale, Scalar(n - static_cast<Eigen::Index>(j))) *
                           std::pow(Scalar(n), Scalar(j));
      if (r > Scalar(16) * eps * std::max(poly_magnitude(derivs[j], m), floor)) return false;
    }
    const Scalar res = std::abs(poly_eval(coeffs, m));
    for (auto i : group) {
      s.values(i) = m;
      s.residuals(i) = res;
    }
    return true;
  };

  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(s.values(i) - s.values(j)) < link) {
        const int from = label[static_cast<std::size_t>(j)], to = label[static_cast<std::size_t>(i)];
        for (auto& l : label)
          if (l == from) l = to;
      }
  for (int g = 0; g < n; ++g) {
    std::vector<Eigen::Index> group;
    for (Eigen::Index i = 0; i < n; ++i)
      if (label[static_cast<std::size_t>(i)] == g) group.push_back(i);
    if (group.size() < 2 || try_collapse(group) || group.size() == 2) continue;
    // fall back to the closest pair inside the group
    Eigen::Index a = group[0], b = group[1];
    for (std::size_t x = 0; x < group.size(); ++x)
      for (std::size_t y = x + 1; y < group.size(); ++y)
        if (std::abs(s.values(group[x]) - s.values(group[y])) < std::abs(s.values(a) - s.values(b))) {
          a = group[x];
          b = group[y];
        }
    try_collapse({a, b});
  }
}

/// All roots of a monic polynomial by Ehrlich-Aberth simultaneous iteration
/// started on a perturbed circle of radius 1 + max|c_i|, followed by guarded
/// Newton polishing and collapse of numerically multiple roots. Throws
/// NoConvergence if a root neither meets `tol` nor reaches a backward error
/// near machine precision. `scale` (optional) is
/// the entry size of the matrix the polynomial came from.
template <typename Scalar>
Spectrum<Scalar> poly_roots(const CVectorT<Scalar>& coeffs, Scalar tol, Scalar scale = Scalar(0)) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = coeffs.size() - 1;
  if (n < 1) throw InvalidParams("poly_roots needs degree >= 1");
  if (coeffs(0) != C(1)) throw InvalidParams("poly_roots needs a monic polynomial");

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  CVectorT<Scalar> z(n);
  if (n == 1) {
    z(0) = -coeffs(1);
  } else {
    Scalar bound(0);
    for (Eigen::Index i = 1; i <= n; ++i) bound = std::max(bound, Scalar(std::abs(coeffs(i))));
    const Scalar radius = 1 + bound;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Scalar angle = Scalar(2 * 3.14159265358979323846) * Scalar(k) / Scalar(n) + Scalar(0.4);
      const Scalar r = radius * (1 + Scalar(0.01) * Scalar(k));
      z(k) = std::polar(r, angle);
    }

    constexpr int kMaxIter = 800;
    for (int it = 0; it < kMaxIter; ++it) {
      Scalar largest(0);
      for (Eigen::Index i = 0; i < n; ++i) {
        auto [p, dp] = poly_eval_d(coeffs, z(i));
        if (p == C(0)) continue;
        const C ratio = p / dp;
        C sum(0);
        for (Eigen::Index j = 0; j < n; ++j)
          if (j != i) sum += C(1) / (z(i) - z(j));
        const C w = ratio / (C(1) - ratio * sum);
        if (!std::isfinite(std::abs(w))) continue;
        z(i) -= w;
        largest = std::max(largest, Scalar(std::abs(w) / (1 + std::abs(z(i)))));
      }
      if (largest < 4 * eps) break;
    }
  }

  Spectrum<Scalar> out;
  out.values = z;
  out.residuals.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Newton polish; a step is kept only if it lowers |p| and stays nearer to
    // this root than to its neighbours.
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) nearest = std::min(nearest, Scalar(std::abs(z(i) - z(j))));
    C x = z(i);
    Scalar px = std::abs(poly_eval(coeffs, x));
    for (int k = 0; k < 3 && px > 0; ++k) {
      auto [p, dp] = poly_eval_d(coeffs, x);
      if (dp == C(0)) break;
      const C y = x - p / dp;
      const Scalar py = std::abs(poly_eval(coeffs, y));
      if (!(py < px) || std::abs(y - z(i)) > nearest / 2) break;
      x = y;
      px = py;
    }
    out.values(i) = x;
    out.residuals(i) = px;
  }

  collapse_multiple_roots(coeffs, out, scale);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar backward =
        out.residuals(i) / std::max({poly_magnitude(coeffs, out.values(i)),
                                     std::pow(scale, Scalar(n)), Scalar(1e-300)});
    if (!(out.residuals(i) < tol) && !(backward < 1e3 * eps))
      throw NoConvergence("root " + std::to_string(i) + " has residual " +
                          std::to_string(static_cast<double>(out.residuals(i))));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return band_order_less(out.values(a), out.values(b));
  });
  Spectrum<Scalar> sorted;
  sorted.values.resize(n);
  sorted.residuals.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    sorted.values(k) = out.values(order[static_cast<std::size_t>(k)]);
    sorted.residuals(k) = out.residuals(order[static_cast<std::size_t>(k)]);
  }
  return sorted;
}

/// Resultant of two polynomials via the Sylvester determinant.
template <typename Scalar>
std::complex<Scalar> resultant(const CVectorT<Scalar>& p, const CVectorT<Scalar>& q) {
  const Eigen::Index m = p.size() - 1, n = q.size() - 1;
  const Eigen::Index size = m + n;
  if (size == 0) return std::complex<Scalar>(1);
  CMatrixT<Scalar> s = CMatrixT<Scalar>::Zero(size, size);
  for (Eigen::Index r = 0; r < n; ++r) s.row(r).segment(r, m + 1) = p.transpose();
  for (Eigen::Index r = 0; r < m; ++r) s.row(n + r).segment(r, n + 1) = q.transpose();
  return s.partialPivLu().determinant();
}

/// prod_{i<j} (z_i - z_j)^2 for a monic polynomial of degree 2..6, computed as
/// (-1)^{n(n-1)/2} Res(p, p').
template <typename Scalar>
std::complex<Scalar> discriminant(const CVectorT<Scalar>& c) {
  const Eigen::Index n = c.size() - 1;
  if (n < 2 || n > kMaxDimension)
    throw InvalidParams("discriminant needs degree 2.." + std::to_string(kMaxDimension));
  if (n == 2) return c(1) * c(1) - Scalar(4) * c(2);
  const std::complex<Scalar> r = resultant(c, poly_derivative(c));
  return ((n * (n - 1) / 2) % 2 == 0 ? r : -r) / c(0);
}

/// Closed form for z^3 + a z^2 + b z + c.
template <typename Scalar>
std::complex<Scalar> cubic_discriminant(const CVectorT<Scalar>& coeffs) {
  const auto a = coeffs(1), b = coeffs(2), c = coeffs(3);
  return a * a * b * b - Scalar(4) * b * b * b - Scalar(4) * a * a * a * c -
         Scalar(27) * c * c + Scalar(18) * a * b * c;
}

/// Discriminant of det(z - m) with the cheapest exact route for the size.
template <typename Derived>
std::complex<typename Derived::RealScalar> matrix_discriminant(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::RealScalar;
  const CVectorT<Scalar> c = char_poly(m);
  if (c.size() == 2) return std::complex<Scalar>(1);
  if (c.size() == 3) return c(1) * c(1) - Scalar(4) * c(2);
  if (c.size() == 4) return cubic_discriminant<Scalar>(c);
  return discriminant<Scalar>(c);
}

} // namespace phtopo
