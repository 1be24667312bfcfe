// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "qelab/common.hpp"
#include "qelab/multi_index.hpp"

namespace qelab {

// Point of CP^n stored as a unit representative in C^{n+1}.  All symbol
// evaluations divide by the appropriate |w| powers, so any nonzero
// representative is accepted and normalized on construction.
struct FiberPoint {
  Vec w;

  explicit FiberPoint(Vec rep) : w(std::move(rep)) {
    require(w.size() >= 2, "FiberPoint: need at least 2 homogeneous coordinates");
    const double norm = w.norm();
    require(norm > 0.0, "FiberPoint: zero representative");
    w /= norm;
  }

  int n() const { return static_cast<int>(w.size()) - 1; }

  // Index of the largest coordinate, a chart in which the point is
  // comfortably represented.
  int chart() const {
    int best = 0;
    for (int j = 1; j < w.size(); ++j)
      if (std::abs(w[j]) > std::abs(w[best])) best = j;
    return best;
  }

  // Affine coordinates in chart l (the n entries w_j / w_l, j != l).
  Vec affine(int l) const {
    require(l >= 0 && l < w.size(), "FiberPoint::affine: chart out of range");
    require(std::abs(w[l]) > 1e-14, "FiberPoint::affine: coordinate vanishes in this chart");
    Vec z(w.size() - 1);
    int k = 0;
    for (int j = 0; j < w.size(); ++j)
      if (j != l) z[k++] = w[j] / w[l];
    return z;
  }

  // w^gamma * conj(w)^delta for exponent vectors over homogeneous coords.
  cplx monomial(const MultiIndex& g, const MultiIndex& d) const {
    cplx v = 1.0;
    for (int j = 0; j < w.size(); ++j) {
      for (int e = 0; e < g[j]; ++e) v *= w[j];
      for (int e = 0; e < d[j]; ++e) v *= std::conj(w[j]);
    }
    return v;
  }
};

inline FiberPoint from_affine(int l, const Vec& z) {
  Vec w(z.size() + 1);
  int k = 0;
  for (int j = 0; j < w.size(); ++j) w[j] = (j == l) ? cplx(1.0) : z[k++];
  return FiberPoint(w);
}

inline FiberPoint random_fiber_point(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vec w(n + 1);
  for (int j = 0; j <= n; ++j) w[j] = cplx(gauss(rng), gauss(rng));
  return FiberPoint(std::move(w));
}

}  // namespace qelab
