// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/fiber_point.hpp"
#include "qelab/multi_index.hpp"

namespace qelab {

// Monomial basis of the degree-p holomorphic sections over CP^n, with the
// exact squared L2 norms under the unit-mass Fubini-Study volume:
//   ||w^alpha||^2 = n! alpha! / (p+n)!.
// All operator matrices downstream are taken in this basis divided by the
// norms, i.e. in an orthonormal frame.
struct FiberBasis {
  int n = 1;
  int p = 1;
  std::vector<MultiIndex> indices;
  std::vector<double> norms;  // squared norms, same order as indices

  int dim() const { return static_cast<int>(indices.size()); }

  // Orthonormalized section value at a unit representative.
  cplx value(int i, const FiberPoint& w) const {
    cplx v = 1.0;
    const MultiIndex& a = indices[i];
    for (int j = 0; j <= n; ++j)
      for (int e = 0; e < a[j]; ++e) v *= w.w[j];
    return v / std::sqrt(norms[i]);
  }
};

inline int bergman_dim(int n, int p) {
  require(n >= 1 && p >= 1, "bergman_dim: need n >= 1 and p >= 1");
  return static_cast<int>(binomial(p + n, n));
}

inline FiberBasis enumerate_basis(int n, int p) {
  require(n >= 1 && p >= 1, "enumerate_basis: need n >= 1 and p >= 1");
  FiberBasis b;
  b.n = n;
  b.p = p;
  b.indices = enumerate_multi_indices(p, n + 1);
  const double lg_head = std::lgamma(n + 1.0) - std::lgamma(p + n + 1.0);
  b.norms.reserve(b.indices.size());
  for (const auto& a : b.indices) b.norms.push_back(std::exp(lg_head + mi_log_factorial(a)));
  return b;
}

}  // namespace qelab
