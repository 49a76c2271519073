#pragma once

// Independent reference computations used only by the tests.

#include "phtopo/poly.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using phtopo::CMatrix;
using phtopo::CVector;
using phtopo::cd;

inline CVector eigenvalues(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  return es.eigenvalues();
}

/// Largest pairwise distance under the best matching of two multisets
/// (brute force over permutations).
inline double multiset_distance(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) return 1e300;
  std::vector<int> p(static_cast<std::size_t>(a.size()));
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double worst = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a(i) - b(p[static_cast<std::size_t>(i)])));
    best = std::min(best, worst);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

inline CMatrix random_matrix(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cd(g(rng), g(rng));
  return m;
}

/// Cycle lengths of a permutation by direct orbit walking.
inline std::vector<int> cycle_lengths(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  std::vector<int> out;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) {
      seen[j] = true;
      ++len;
    }
    out.push_back(len);
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace oracle
