#pragma once

#include "phtopo/poly.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <utility>
#include <vector>

namespace phtopo {

/// Root tolerance used when callers do not pass one.
inline constexpr double kRootTol = 1e-10;

/// Relative degeneracy tolerance: |z_i - z_j| < kDegeneracyTol * max(1, rho).
inline constexpr double kDegeneracyTol = 1e-8;

/// Relative pivot threshold for the numerical rank of (m - z I).
inline constexpr double kRankThreshold = 1e-8;

template <typename Scalar>
Scalar spectral_radius(const CVectorT<Scalar>& values) {
  Scalar r(0);
  for (Eigen::Index i = 0; i < values.size(); ++i) r = std::max(r, Scalar(std::abs(values(i))));
  return r;
}

template <typename Scalar>
Scalar degeneracy_tolerance(const CVectorT<Scalar>& values) {
  return Scalar(kDegeneracyTol) * std::max(Scalar(1), spectral_radius(values));
}

template <typename Scalar>
Spectrum<Scalar> eigenvalues(const CMatrixT<Scalar>& m, Scalar tol = Scalar(kRootTol)) {
  return poly_roots<Scalar>(char_poly(m), tol, m.cwiseAbs().maxCoeff());
}

/// A group of eigenvalues closer than the degeneracy tolerance.
template <typename Scalar>
struct Cluster {
  std::complex<Scalar> value;  // mean of the members
  std::vector<int> members;    // indices into Spectrum::values
  int geometric_multiplicity = 1;
  bool defective() const { return geometric_multiplicity < static_cast<int>(members.size()); }
};

template <typename Scalar>
struct EigenSystem {
  Spectrum<Scalar> spectrum;
  /// Unit right eigenvectors; column i belongs to spectrum.values(i). Columns
  /// of a defective cluster beyond its geometric multiplicity are zero.
  CMatrixT<Scalar> vectors;
  std::vector<Cluster<Scalar>> clusters; // only clusters with >= 2 members
  bool defective = false;
};

/// Numerical rank by column-pivoted QR with a relative pivot threshold.
template <typename Scalar>
int numerical_rank(const CMatrixT<Scalar>& a, Scalar threshold = Scalar(kRankThreshold)) {
  Eigen::ColPivHouseholderQR<CMatrixT<Scalar>> qr(a);
  qr.setThreshold(threshold);
  return static_cast<int>(qr.rank());
}

/// Groups eigenvalues into clusters by single linkage at the degeneracy
/// tolerance.
template <typename Scalar>
std::vector<std::vector<int>> degenerate_groups(const CVectorT<Scalar>& values, Scalar tol) {
  const int n = static_cast<int>(values.size());
  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(values(i) - values(j)) < tol) {
        const int from = label[static_cast<std::size_t>(j)], to = label[static_cast<std::size_t>(i)];
        for (auto& l : label)
          if (l == from) l = to;
      }
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (auto& g : groups)
      if (label[static_cast<std::size_t>(g.front())] == label[static_cast<std::size_t>(i)]) {
        g.push_back(i);
        placed = true;
      }
    if (!placed) groups.push_back({i});
  }
  return groups;
}

/// Eigenvalues from the characteristic polynomial plus right eigenvectors from
/// the null space of (m - z I). A cluster with fewer independent eigenvectors
/// than members raises DefectiveCluster unless `allow_defective` is set, in
/// which case it is reported in the result.
template <typename Scalar>
EigenSystem<Scalar> eigensystem(const CMatrixT<Scalar>& m, Scalar tol = Scalar(kRootTol),
                                bool allow_defective = false) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = m.rows();
  EigenSystem<Scalar> es;
  es.spectrum = eigenvalues<Scalar>(m, tol);
  es.vectors = CMatrixT<Scalar>::Zero(n, n);

  const Scalar dtol = degeneracy_tolerance(es.spectrum.values);
  for (const auto& group : degenerate_groups(es.spectrum.values, dtol)) {
    C mean(0);
    for (int i : group) mean += es.spectrum.values(i);
    mean /= Scalar(group.size());

    const CMatrixT<Scalar> shifted = m - (group.size() == 1 ? es.spectrum.values(group[0]) : mean) *
                                             CMatrixT<Scalar>::Identity(n, n);
    Eigen::JacobiSVD<CMatrixT<Scalar>> svd(shifted, Eigen::ComputeFullV);
    const int nullity = group.size() == 1
                            ? 1
                            : static_cast<int>(n) - numerical_rank<Scalar>(shifted);
    const int usable = std::min<int>(std::max(nullity, 1), static_cast<int>(group.size()));
    for (int k = 0; k < usable; ++k) {
      CVectorT<Scalar> v = svd.matrixV().col(n - 1 - k);
      v.normalize();
      es.vectors.col(group[static_cast<std::size_t>(k)]) = v;
    }
    if (group.size() > 1) {
      Cluster<Scalar> c;
      c.value = mean;
      c.members = group;
      c.geometric_multiplicity = std::max(nullity, 1);
      if (c.defective()) es.defective = true;
      es.clusters.push_back(std::move(c));
    }
  }
  if (es.defective && !allow_defective)
    throw DefectiveCluster("repeated eigenvalue without a full set of eigenvectors");
  return es;
}

/// Two-band Hamiltonian d . sigma + d0 sigma_0 with d = d_R + i d_I.
template <typename Scalar>
struct DVectorT {
  Eigen::Matrix<Scalar, 3, 1> d_real = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Matrix<Scalar, 3, 1> d_imag = Eigen::Matrix<Scalar, 3, 1>::Zero();
  std::complex<Scalar> d0{0};

  Eigen::Matrix<std::complex<Scalar>, 3, 1> d() const {
    return d_real.template cast<std::complex<Scalar>>() +
           std::complex<Scalar>(0, 1) * d_imag.template cast<std::complex<Scalar>>();
  }

  CMatrixT<Scalar> matrix() const {
    using C = std::complex<Scalar>;
    const auto v = d();
    const C i(0, 1);
    CMatrixT<Scalar> h(2, 2);
    h << d0 + v(2), v(0) - i * v(1),
         v(0) + i * v(1), d0 - v(2);
    return h;
  }
};
using DVector = DVectorT<double>;

/// d0 +- sqrt(d_R^2 - d_I^2 + 2 i d_R . d_I), principal root; the "+" branch
/// comes first.
template <typename Scalar>
std::pair<std::complex<Scalar>, std::complex<Scalar>> two_band_energies(const DVectorT<Scalar>& d) {
  const std::complex<Scalar> rad(d.d_real.squaredNorm() - d.d_imag.squaredNorm(),
                                 2 * d.d_real.dot(d.d_imag));
  const auto root = std::sqrt(rad);
  return {d.d0 + root, d.d0 - root};
}

} // namespace phtopo
