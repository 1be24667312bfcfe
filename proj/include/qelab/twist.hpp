// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/multi_index.hpp"
#include "qelab/common.hpp"

namespace qelab {

// Flat twist of the fiber bundle over the r-torus.  The fundamental group is
// abelian, so commuting unitary images are simultaneously diagonal: generator
// j acts on coordinate l of C^{n+1} by the phase 2*pi*phi(j,l), hence on the
// weight-alpha line of the symmetric power by 2*pi*(phi*alpha).  In Fourier
// coordinates that weight line lives on the shifted lattice Z^r + phi*alpha.
class Twist {
 public:
  int r{1}, n{1};
  Eigen::MatrixXd phi;  // r x (n+1) generator phases

  Twist(int r_, int n_, Eigen::MatrixXd ph) : r(r_), n(n_), phi(std::move(ph)) {
    require(r >= 1 && n >= 1, "Twist: bad dimensions");
    require(phi.rows() == r && phi.cols() == n + 1, "Twist: phase matrix shape");
  }

  static Twist zero(int r_, int n_) {
    return Twist(r_, n_, Eigen::MatrixXd::Zero(r_, n_ + 1));
  }

  bool is_zero() const { return phi.cwiseAbs().maxCoeff() == 0.0; }

  // lattice offset of the weight-alpha block, reduced to (-1/2, 1/2]; the
  // integer part of phi*alpha only relabels the Fourier lattice, and keeping
  // it would push the physical window off any fixed cutoff as p grows
  RVec theta(const MultiIndex& alpha) const {
    require(int(alpha.size()) == n + 1, "Twist::theta: weight length");
    RVec t = RVec::Zero(r);
    for (int j = 0; j < r; ++j) {
      for (int l = 0; l <= n; ++l) t[j] += phi(j, l) * alpha[l];
      t[j] -= std::round(t[j]);
    }
    return t;
  }

  // generator of parallel transport in direction j: moving by dx_j multiplies
  // coordinate l by exp(-i*dx_j*phi(j,l))
  Vec transport_generator(int j) const {
    require(j >= 0 && j < r, "Twist: direction out of range");
    Vec g(n + 1);
    for (int l = 0; l <= n; ++l) g[l] = phi(j, l);
    return g;
  }
};

}  // namespace qelab
