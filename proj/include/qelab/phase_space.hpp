// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/fiber_quadrature.hpp"
#include "qelab/hamiltonian.hpp"

namespace qelab {

// Deterministic quadrature oracles over [0,2pi]^r x R^r x CP^n against
// dx dxi dnu with the unit-mass fiber volume.  Every oracle integrates twice
// at doubled resolution and certifies the difference, so a returned value is
// always a checked one.

namespace detail {

// x: trapezoid on the torus (spectrally accurate for smooth periodic
// integrands); xi: Gauss-Legendre on [-L, L]; fiber: the exact rule.
template <class F>
cplx phase_space_pass(const F& f, int r, int n, double L, int nx, int nxi,
                      int fiber_deg) {
  std::vector<double> gx, gw;
  gauss_legendre_01(nxi, gx, gw);
  const QuadratureRule fiber = fubini_study_rule(n, fiber_deg);
  std::vector<int> ix(r, 0), ixi(r, 0);
  RVec x(r), xi(r);
  cplx total = 0.0;
  for (;;) {  // odometer over the x grid
    for (int j = 0; j < r; ++j) x[j] = 2.0 * pi * ix[j] / nx;
    cplx xipart = 0.0;
    std::fill(ixi.begin(), ixi.end(), 0);
    for (;;) {  // odometer over the xi grid
      double wxi = 1.0;
      for (int j = 0; j < r; ++j) {
        xi[j] = -L + 2.0 * L * gx[ixi[j]];
        wxi *= 2.0 * L * gw[ixi[j]];
      }
      cplx fib = 0.0;
      for (size_t q = 0; q < fiber.nodes.size(); ++q)
        fib += fiber.weights[q] * f(x, xi, fiber.nodes[q]);
      xipart += wxi * fib;
      int j = 0;
      while (j < r && ++ixi[j] == nxi) ixi[j++] = 0;
      if (j == r) break;
    }
    total += xipart;
    int j = 0;
    while (j < r && ++ix[j] == nx) ix[j++] = 0;
    if (j == r) break;
  }
  return total * std::pow(2.0 * pi / nx, r);
}

}  // namespace detail

// Integral of f(x, xi, w); L must cover the xi-decay of the integrand.
template <class F>
cplx integrate_phase_space(const F& f, int r, int n, double L, double tol = 1e-8,
                           int nx = 24, int nxi = 32, int fiber_deg = 12) {
  const cplx coarse = detail::phase_space_pass(f, r, n, L, nx, nxi, fiber_deg);
  const cplx fine = detail::phase_space_pass(f, r, n, L, 2 * nx, 2 * nxi, fiber_deg + 6);
  certify(std::abs(fine - coarse) <= tol * std::max(1.0, std::abs(fine)),
          "integrate_phase_space: quadrature did not certify");
  return fine;
}

// Potential part V(x, w) = sum_i c_i(x) <mu, a_i>(w) of a spec whose
// couplings are xi-free, so energy sections in xi have closed form.
class PotentialEval {
 public:
  explicit PotentialEval(const HamiltonianSpec& hs) : r_(hs.r), kinetic_(hs.kinetic) {
    for (const auto& [c, a] : hs.perts) {
      require(c.order == 0, "PotentialEval: xi-dependent coupling has no closed energy section");
      for (const auto& [m, fn] : c.modes)
        require(std::abs(fn.eval(RVec::Zero(r_)) - fn.eval(RVec::Ones(r_))) <= 1e-14,
                "PotentialEval: coupling declared order 0 but varies in xi");
      terms_.push_back({c, a.a});
    }
  }

  double kinetic() const { return kinetic_; }

  double operator()(const RVec& x, const FiberPoint& w) const {
    const RVec xi0 = RVec::Zero(r_);
    double v = 0.0;
    for (const auto& [c, a] : terms_)
      v += c.eval(x, xi0).real() * TorusFlow::mu_value(a, w.w);
    return v;
  }

 private:
  int r_;
  double kinetic_;
  std::vector<std::pair<BaseSymbol, Mat>> terms_;
};

namespace detail {

template <class G>
cplx sublevel_pass(const PotentialEval& V, double a, int r, int n, int nx,
                   int fiber_deg, const G& section) {
  const QuadratureRule fiber = fubini_study_rule(n, fiber_deg);
  std::vector<int> ix(r, 0);
  RVec x(r);
  cplx total = 0.0;
  for (;;) {
    for (int j = 0; j < r; ++j) x[j] = 2.0 * pi * ix[j] / nx;
    for (size_t q = 0; q < fiber.nodes.size(); ++q)
      total += fiber.weights[q] * section(x, fiber.nodes[q], a - V(x, fiber.nodes[q]));
    int j = 0;
    while (j < r && ++ix[j] == nx) ix[j++] = 0;
    if (j == r) break;
  }
  return total * std::pow(2.0 * pi / nx, r);
}

}  // namespace detail

// Vol{(x, xi, w) : H <= a}; r = 1 gives xi-length 2 sqrt(s/kin), r = 2 the
// disk area pi s / kin, with s = a - V(x, w) clamped at 0.
inline double sublevel_volume(const HamiltonianSpec& hs, double a, double tol = 1e-8,
                              int nx = 32, int fiber_deg = 12) {
  require(hs.r <= 2, "sublevel_volume: closed xi-sections implemented for r <= 2");
  const PotentialEval V(hs);
  auto section = [&](const RVec&, const FiberPoint&, double s) -> cplx {
    if (s <= 0.0) return 0.0;
    return (hs.r == 1) ? 2.0 * std::sqrt(s / hs.kinetic) : pi * s / hs.kinetic;
  };
  const cplx coarse = detail::sublevel_pass(V, a, hs.r, hs.n, nx, fiber_deg, section);
  const cplx fine = detail::sublevel_pass(V, a, hs.r, hs.n, 2 * nx, fiber_deg + 6, section);
  certify(std::abs(fine - coarse) <= tol * std::max(1.0, std::abs(fine)),
          "sublevel_volume: quadrature did not certify");
  return fine.real();
}

namespace detail {

// integral of g over the xi-section {xi : kin xi^2 + V in [a, b]} at fixed
// (x, w): two symmetric Gauss-Legendre segments.
template <class G>
cplx shell_section(const G& g, const RVec& x, const FiberPoint& w, double kin,
                   double lo2, double hi2, const std::vector<double>& gx,
                   const std::vector<double>& gw) {
  if (hi2 <= 0.0) return 0.0;
  const double lo = std::sqrt(std::max(lo2, 0.0) / kin);
  const double hi = std::sqrt(hi2 / kin);
  cplx s = 0.0;
  RVec xi(1);
  for (size_t q = 0; q < gx.size(); ++q) {
    const double t = lo + (hi - lo) * gx[q];
    const double wq = (hi - lo) * gw[q];
    xi[0] = t;
    s += wq * g(x, xi, w);
    xi[0] = -t;
    s += wq * g(x, xi, w);
  }
  return s;
}

template <class G>
cplx shell_pass(const PotentialEval& V, const G& g, double a, double b, int n,
                int nx, int nxi, int fiber_deg) {
  std::vector<double> gx, gw;
  gauss_legendre_01(nxi, gx, gw);
  const QuadratureRule fiber = fubini_study_rule(n, fiber_deg);
  RVec x(1);
  cplx total = 0.0;
  for (int i = 0; i < nx; ++i) {
    x[0] = 2.0 * pi * i / nx;
    for (size_t q = 0; q < fiber.nodes.size(); ++q) {
      const double v = V(x, fiber.nodes[q]);
      total += fiber.weights[q] *
               shell_section(g, x, fiber.nodes[q], V.kinetic(), a - v, b - v, gx, gw);
    }
  }
  return total * (2.0 * pi / nx);
}

}  // namespace detail

// integral of g(x, xi, w) over H^{-1}([a, b]), r = 1.
template <class G>
cplx shell_integral(const HamiltonianSpec& hs, double a, double b, const G& g,
                    double tol = 1e-8, int nx = 32, int nxi = 24, int fiber_deg = 12) {
  require(hs.r == 1, "shell_integral: implemented for r = 1");
  require(b > a, "shell_integral: window must be nonempty");
  const PotentialEval V(hs);
  const cplx coarse = detail::shell_pass(V, g, a, b, hs.n, nx, nxi, fiber_deg);
  const cplx fine = detail::shell_pass(V, g, a, b, hs.n, 2 * nx, 2 * nxi, fiber_deg + 6);
  certify(std::abs(fine - coarse) <= tol * std::max(1.0, std::abs(fine)),
          "shell_integral: quadrature did not certify");
  return fine;
}

inline double shell_volume(const HamiltonianSpec& hs, double a, double b) {
  return shell_integral(hs, a, b,
                        [](const RVec&, const RVec&, const FiberPoint&) -> cplx {
                          return 1.0;
                        })
      .real();
}

// microcanonical average of a symbol over H^{-1}([a, b])
inline cplx microcanonical_average(const HamiltonianSpec& hs, double a, double b,
                                   const MixedSymbol& A) {
  const double vol = shell_volume(hs, a, b);
  certify(vol > 1e-12, "microcanonical_average: energy shell has no volume");
  const cplx num = shell_integral(
      hs, a, b,
      [&](const RVec& x, const RVec& xi, const FiberPoint& w) { return A.eval(x, xi, w); });
  return num / vol;
}

}  // namespace qelab
