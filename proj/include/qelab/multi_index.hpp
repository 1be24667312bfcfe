// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <vector>

#include "qelab/common.hpp"

namespace qelab {

// Exponent vector over the n+1 homogeneous coordinates of CP^n.
using MultiIndex = std::vector<int>;

inline int mi_degree(const MultiIndex& a) {
  return std::accumulate(a.begin(), a.end(), 0);
}

inline double mi_log_factorial(const MultiIndex& a) {
  double s = 0.0;
  for (int e : a) s += std::lgamma(e + 1.0);
  return s;
}

// All alpha >= 0 with |alpha| = p over `len` slots, enumerated with the
// first entry slowest and ascending.  Fixed order; everything downstream
// (matrix rows, diagonals) refers to it.
inline std::vector<MultiIndex> enumerate_multi_indices(int p, int len) {
  require(p >= 0 && len >= 1, "enumerate_multi_indices: need p >= 0, len >= 1");
  std::vector<MultiIndex> out;
  MultiIndex cur(len, 0);
  auto rec = [&](auto&& self, int slot, int rem) -> void {
    if (slot == len - 1) {
      cur[slot] = rem;
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= rem; ++e) {
      cur[slot] = e;
      self(self, slot + 1, rem - e);
    }
  };
  rec(rec, 0, p);
  return out;
}

}  // namespace qelab
