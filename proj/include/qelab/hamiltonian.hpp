// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/lie_element.hpp"
#include "qelab/mixed_op.hpp"
#include "qelab/ode.hpp"

namespace qelab {

// H(x, xi, w) = kinetic * |xi|^2 + sum_i c_i(x, xi) <mu, a_i>(w) on the torus
// phase space times CP^n.  Coupling coefficients are restricted to xi-order
// <= 1 so the kinetic term dominates at infinity; with kinetic > 0 that makes
// H elliptic with any margin below the kinetic coefficient, which is what the
// margin field records.
struct HamiltonianSpec {
  int r = 1;
  int n = 1;
  double kinetic = 1.0;
  std::vector<std::pair<BaseSymbol, LieElement>> perts;
  double margin = 1.0;
};

inline HamiltonianSpec make_hamiltonian_spec(
    int r, int n, double kinetic,
    std::vector<std::pair<BaseSymbol, LieElement>> perts) {
  require(r >= 1 && n >= 1, "make_hamiltonian_spec: bad dimensions");
  require(kinetic > 0.0, "make_hamiltonian_spec: kinetic term must be positive");
  for (const auto& [c, a] : perts) {
    require(c.r == r, "make_hamiltonian_spec: coefficient rank mismatch");
    require(a.n() == n, "make_hamiltonian_spec: generator size mismatch");
    require(c.order <= 1,
            "make_hamiltonian_spec: coupling of xi-order >= 2 breaks ellipticity");
    require(c.is_real(), "make_hamiltonian_spec: coupling must be real");
  }
  return {r, n, kinetic, std::move(perts), kinetic};
}

inline MixedSymbol hamiltonian_symbol(const HamiltonianSpec& hs) {
  MixedSymbol h = cplx(hs.kinetic) * mixed_kinetic(hs.r, hs.n);
  for (const auto& [c, a] : hs.perts)
    h = h + mixed_from_base(c, hs.n) * mixed_moment(hs.r, a);
  return h;
}

// (Op + Op^*)/2; assembly of a real symbol is already Hermitian through the
// frequency-midpoint rule, so this is exact band bookkeeping, not a repair.
inline MixedOperator build_hamiltonian(const HamiltonianSpec& hs, int p, int K,
                                       const Twist& tw) {
  require(hs.kinetic > 0.0 && hs.margin > 0.0, "build_hamiltonian: spec not elliptic");
  const MixedSymbol sym = hamiltonian_symbol(hs);
  certify(sym.is_real(1e-11), "build_hamiltonian: symbol failed the realness probe");
  const MixedOperator op = mixed_op(sym, p, K, tw);
  MixedOperator herm = mixed_axpy(1.0, op.adjoint(), op);
  for (auto& [m, band] : herm.blocks)
    for (Mat& b : band) b *= 0.5;
  return herm;
}

// Hamiltonian vector field on (x, xi, w): dx = dH/dxi, dxi = -dH/dx,
// dw = -(1/2pi) (sum_i c_i a_i) w.  State layout: [x, xi, Re w, Im w],
// flowing FORWARD; the fiber generator is anti-Hermitian so |w| is conserved.
class TorusFlow {
 public:
  explicit TorusFlow(const HamiltonianSpec& hs) : r_(hs.r), n_(hs.n), kin_(hs.kinetic) {
    for (const auto& [c, a] : hs.perts) {
      Pert p;
      p.a = a.a;
      for (const auto& [m, fn] : c.modes) {
        PertMode pm;
        pm.m = m;
        pm.fn = fn;
        for (int j = 0; j < r_; ++j) pm.dfn.push_back(fn.deriv(j));
        p.modes.push_back(std::move(pm));
      }
      perts_.push_back(std::move(p));
    }
  }

  int state_size() const { return 2 * r_ + 2 * (n_ + 1); }

  Eigen::VectorXd pack(const RVec& x, const RVec& xi, const Vec& w) const {
    Eigen::VectorXd y(state_size());
    y.segment(0, r_) = x;
    y.segment(r_, r_) = xi;
    y.segment(2 * r_, n_ + 1) = w.real();
    y.segment(2 * r_ + n_ + 1, n_ + 1) = w.imag();
    return y;
  }

  void unpack(const Eigen::VectorXd& y, RVec& x, RVec& xi, Vec& w) const {
    x = y.segment(0, r_);
    xi = y.segment(r_, r_);
    w = y.segment(2 * r_, n_ + 1) + iu * y.segment(2 * r_ + n_ + 1, n_ + 1);
  }

  void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    RVec x, xi;
    Vec w;
    unpack(y, x, xi, w);
    dy.setZero(state_size());
    dy.segment(0, r_) = 2.0 * kin_ * xi;
    Vec wdot = Vec::Zero(n_ + 1);
    for (const auto& p : perts_) {
      const double mu = mu_value(p.a, w);
      cplx c = 0.0;
      for (const auto& pm : p.modes) {
        double mx = 0.0;
        for (int j = 0; j < r_; ++j) mx += pm.m[j] * x[j];
        const cplx phase = std::exp(iu * mx);
        const cplx v = pm.fn.eval(xi);
        c += phase * v;
        for (int j = 0; j < r_; ++j) {
          dy[r_ + j] -= (iu * double(pm.m[j]) * phase * v).real() * mu;
          dy[j] += (phase * pm.dfn[j].eval(xi)).real() * mu;
        }
      }
      wdot -= (c.real() / (2.0 * pi)) * (p.a * w);
    }
    dy.segment(2 * r_, n_ + 1) = wdot.real();
    dy.segment(2 * r_ + n_ + 1, n_ + 1) = wdot.imag();
  }

  OdeRhs as_ode() const {
    return [this](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { rhs(y, dy); };
  }

  static double mu_value(const Mat& a, const Vec& w) {
    const cplx q = (w.adjoint() * a * w)(0, 0);
    return (-q / (2.0 * pi * iu)).real() / w.squaredNorm();
  }

 private:
  struct PertMode {
    BaseMode m;
    XiFn fn{1, {}};
    std::vector<XiFn> dfn;
  };
  struct Pert {
    Mat a;
    std::vector<PertMode> modes;
  };
  int r_, n_;
  double kin_;
  std::vector<Pert> perts_;
};

}  // namespace qelab
