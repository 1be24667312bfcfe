// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/base_symbol.hpp"
#include "qelab/fiber_symbol.hpp"

namespace qelab {

// Fiber pair table whose coefficients vary with the base covector.
using MixedCoeff = std::map<std::pair<MultiIndex, MultiIndex>, XiFn>;

// Symbol on (torus phase space) x CP^n: a finite Fourier table over base
// modes m whose values are fiber tables of bidegree (deg, deg) with
// xi-dependent coefficients.  Closed under sums, products, base and fiber
// derivatives, and the product-manifold Poisson bracket.
struct MixedSymbol {
  int r = 1;
  int n = 1;
  int deg = 0;
  int order = 0;
  std::map<BaseMode, MixedCoeff> modes;

  MixedSymbol(int r_, int n_, int deg_, int order_, std::map<BaseMode, MixedCoeff> m)
      : r(r_), n(n_), deg(deg_), order(order_), modes(std::move(m)) {
    require(r >= 1 && n >= 1 && deg >= 0, "MixedSymbol: bad dimensions");
    for (const auto& [bm, coef] : modes) {
      require(int(bm.size()) == r, "MixedSymbol: base mode length");
      for (const auto& [k, fn] : coef) {
        require(int(k.first.size()) == n + 1 && int(k.second.size()) == n + 1,
                "MixedSymbol: exponent length mismatch");
        require(mi_degree(k.first) == deg && mi_degree(k.second) == deg,
                "MixedSymbol: entry off the declared bidegree");
        require(fn.r == r, "MixedSymbol: coefficient rank mismatch");
      }
    }
  }

  cplx eval(const RVec& x, const RVec& xi, const FiberPoint& w) const {
    require(int(x.size()) == r && int(xi.size()) == r && w.n() == n,
            "MixedSymbol::eval: dimension mismatch");
    cplx s = 0.0;
    for (const auto& [bm, coef] : modes) {
      double mx = 0.0;
      for (int j = 0; j < r; ++j) mx += bm[j] * x[j];
      cplx fib = 0.0;
      for (const auto& [k, fn] : coef) fib += fn.eval(xi) * w.monomial(k.first, k.second);
      s += std::exp(iu * mx) * fib;
    }
    return s;
  }

  // fiber part of one Fourier coefficient, frozen at a covector value
  FiberSymbol fiber_at(const BaseMode& bm, const RVec& xi) const {
    PairTable t;
    auto it = modes.find(bm);
    if (it != modes.end())
      for (const auto& [k, fn] : it->second) detail::table_accum(t, k.first, k.second, fn.eval(xi));
    return {n, deg, std::move(t)};
  }

  int fourier_radius() const {
    int rad = 0;
    for (const auto& [bm, coef] : modes)
      for (int j = 0; j < r; ++j) rad = std::max(rad, std::abs(bm[j]));
    return rad;
  }

  bool fiberwise_constant() const { return deg == 0; }

  MixedSymbol conjugate() const {
    std::map<BaseMode, MixedCoeff> out;
    for (const auto& [bm, coef] : modes) {
      BaseMode neg = bm;
      for (int& e : neg) e = -e;
      MixedCoeff& oc = out[neg];
      for (const auto& [k, fn] : coef) {
        XiFn cf = fn.conjugate();
        auto [it, fresh] = oc.try_emplace({k.second, k.first}, cf);
        if (!fresh) it->second = it->second + cf;
      }
    }
    return {r, n, deg, order, std::move(out)};
  }

  bool is_real(double tol = 1e-10) const {
    auto rng = make_rng(177);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 2.0 * pi);
    double worst = 0.0, scale = 1e-300;
    for (int trial = 0; trial < 24; ++trial) {
      RVec x(r), xi(r);
      for (int j = 0; j < r; ++j) {
        x[j] = unif(rng);
        xi[j] = gauss(rng);
      }
      const FiberPoint w = random_fiber_point(n, rng);
      const cplx v = eval(x, xi, w);
      worst = std::max(worst, std::abs(v.imag()));
      scale = std::max(scale, std::abs(v));
    }
    return worst <= tol * std::max(1.0, scale);
  }

  // same function at a higher fiber bidegree via |w|^2 factors
  MixedSymbol promote(int new_deg) const {
    require(new_deg >= deg, "MixedSymbol::promote: degree can only grow");
    if (new_deg == deg) return *this;
    const PairTable pad = detail::norm_power(n + 1, new_deg - deg);
    std::map<BaseMode, MixedCoeff> out;
    for (const auto& [bm, coef] : modes) {
      MixedCoeff& oc = out[bm];
      for (const auto& [k, fn] : coef)
        for (const auto& [pk, pc] : pad) {
          MultiIndex g = k.first, d = k.second;
          for (size_t j = 0; j < g.size(); ++j) {
            g[j] += pk.first[j];
            d[j] += pk.second[j];
          }
          XiFn scaled = pc * fn;
          auto [it, fresh] = oc.try_emplace({g, d}, scaled);
          if (!fresh) it->second = it->second + scaled;
        }
    }
    return {r, n, new_deg, order, std::move(out)};
  }
};

inline void mixed_accum(MixedSymbol& s, const BaseMode& bm, const MultiIndex& g,
                        const MultiIndex& d, const XiFn& fn) {
  require(int(bm.size()) == s.r, "mixed_accum: base mode length");
  require(mi_degree(g) == s.deg && mi_degree(d) == s.deg, "mixed_accum: bidegree");
  auto [it, fresh] = s.modes[bm].try_emplace({g, d}, fn);
  if (!fresh) it->second = it->second + fn;
}

inline MixedSymbol mixed_from_base(const BaseSymbol& b, int n) {
  const MultiIndex zero(n + 1, 0);
  MixedSymbol out{b.r, n, 0, b.order, {}};
  for (const auto& [bm, fn] : b.modes) mixed_accum(out, bm, zero, zero, fn);
  return out;
}

inline MixedSymbol mixed_from_fiber(const FiberSymbol& f, int r) {
  MixedSymbol out{r, f.n, f.deg, 0, {}};
  const BaseMode zero(r, 0);
  for (const auto& [k, c] : f.table) mixed_accum(out, zero, k.first, k.second, xi_constant(r, c));
  return out;
}

// <mu_L, a>, constant along the base
inline MixedSymbol mixed_moment(int r, const LieElement& a) {
  return mixed_from_fiber(moment_map_symbol(a), r);
}

// |xi|^2
inline MixedSymbol mixed_kinetic(int r, int n) {
  XiFn k2 = xi_coordinate(r, 0) * xi_coordinate(r, 0);
  for (int j = 1; j < r; ++j) k2 = k2 + xi_coordinate(r, j) * xi_coordinate(r, j);
  MixedSymbol out{r, n, 0, 2, {}};
  const MultiIndex zero(n + 1, 0);
  mixed_accum(out, BaseMode(r, 0), zero, zero, k2);
  return out;
}

inline MixedSymbol operator*(cplx c, const MixedSymbol& a) {
  MixedSymbol out{a.r, a.n, a.deg, a.order, {}};
  for (const auto& [bm, coef] : a.modes)
    for (const auto& [k, fn] : coef) mixed_accum(out, bm, k.first, k.second, c * fn);
  return out;
}

inline MixedSymbol operator+(const MixedSymbol& a, const MixedSymbol& b) {
  require(a.r == b.r && a.n == b.n, "MixedSymbol sum: dimension mismatch");
  const int d = std::max(a.deg, b.deg);
  MixedSymbol out = a.promote(d);
  out.order = std::max(a.order, b.order);
  const MixedSymbol bb = b.promote(d);
  for (const auto& [bm, coef] : bb.modes)
    for (const auto& [k, fn] : coef) mixed_accum(out, bm, k.first, k.second, fn);
  return out;
}

inline MixedSymbol operator-(const MixedSymbol& a, const MixedSymbol& b) {
  return a + (cplx(-1.0) * b);
}

inline MixedSymbol operator*(const MixedSymbol& a, const MixedSymbol& b) {
  require(a.r == b.r && a.n == b.n, "MixedSymbol product: dimension mismatch");
  MixedSymbol out{a.r, a.n, a.deg + b.deg, a.order + b.order, {}};
  for (const auto& [ma, ca] : a.modes)
    for (const auto& [mb, cb] : b.modes) {
      BaseMode m = ma;
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      for (const auto& [ka, fa] : ca)
        for (const auto& [kb, fb] : cb) {
          MultiIndex g = ka.first, d = ka.second;
          for (size_t j = 0; j < g.size(); ++j) {
            g[j] += kb.first[j];
            d[j] += kb.second[j];
          }
          mixed_accum(out, m, g, d, fa * fb);
        }
    }
  return out;
}

// base derivatives: d/dx_j is multiplication by i m_j on modes
inline MixedSymbol mixed_dx(const MixedSymbol& a, int j) {
  require(j >= 0 && j < a.r, "mixed_dx: direction out of range");
  MixedSymbol out{a.r, a.n, a.deg, a.order, {}};
  for (const auto& [bm, coef] : a.modes) {
    if (bm[j] == 0) continue;
    const cplx fac = iu * double(bm[j]);
    for (const auto& [k, fn] : coef) mixed_accum(out, bm, k.first, k.second, fac * fn);
  }
  return out;
}

inline MixedSymbol mixed_dxi(const MixedSymbol& a, int j) {
  require(j >= 0 && j < a.r, "mixed_dxi: direction out of range");
  MixedSymbol out{a.r, a.n, a.deg, std::max(0, a.order - 1), {}};
  for (const auto& [bm, coef] : a.modes)
    for (const auto& [k, fn] : coef) mixed_accum(out, bm, k.first, k.second, fn.deriv(j));
  return out;
}

// Poisson bracket of the product symplectic structure: the canonical base
// bracket plus, pointwise in (x, xi), the fiber Fubini-Study bracket.  Both
// parts drive the commutator at the same order p^{-1} once h = p^{-1}.
inline MixedSymbol mixed_poisson_bracket(const MixedSymbol& a, const MixedSymbol& b) {
  require(a.r == b.r && a.n == b.n, "mixed_poisson_bracket: dimension mismatch");
  // {A, A} = 0; skip the assembly so the zero is exact, not a cancellation
  if (&a == &b) return MixedSymbol{a.r, a.n, a.deg + b.deg + 1, a.order + b.order, {}};
  MixedSymbol base{a.r, a.n, a.deg + b.deg, a.order + b.order, {}};
  bool base_any = false;
  for (int j = 0; j < a.r; ++j) {
    const MixedSymbol term = mixed_dxi(a, j) * mixed_dx(b, j) - mixed_dx(a, j) * mixed_dxi(b, j);
    if (!term.modes.empty()) base_any = true;
    base = base + term;
  }

  MixedSymbol fib{a.r, a.n, a.deg + b.deg + 1, a.order + b.order, {}};
  const int len = a.n + 1;
  for (const auto& [ma, ca] : a.modes)
    for (const auto& [mb, cb] : b.modes) {
      BaseMode m = ma;
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      for (const auto& [ka, fa] : ca)
        for (const auto& [kb, fb] : cb) {
          PairTable ta, tb;
          ta[{ka.first, ka.second}] = 1.0;
          tb[{kb.first, kb.second}] = 1.0;
          const FiberSymbol br =
              poisson_bracket(FiberSymbol{a.n, a.deg, std::move(ta)},
                              FiberSymbol{a.n, b.deg, std::move(tb)});
          if (br.table.empty()) continue;
          const XiFn fn = fa * fb;
          for (const auto& [k, c] : br.table) mixed_accum(fib, m, k.first, k.second, c * fn);
        }
    }
  (void)len;
  if (!base_any) return fib;
  return base + fib;
}

// Order-one star-product correction (1/2i) sum_j (dxi A dx B - dx A dxi B),
// valid as the full correction only when one factor is fiberwise constant,
// where the fiberwise expansion contributes nothing at this order.
inline MixedSymbol mixed_moyal1(const MixedSymbol& a, const MixedSymbol& b) {
  require(a.fiberwise_constant() || b.fiberwise_constant(),
          "mixed_moyal1: needs one fiberwise-constant factor");
  MixedSymbol out{a.r, a.n, a.deg + b.deg, a.order + b.order, {}};
  for (int j = 0; j < a.r; ++j)
    out = out + mixed_dxi(a, j) * mixed_dx(b, j) - mixed_dx(a, j) * mixed_dxi(b, j);
  return cplx(1.0 / (2.0 * iu)) * out;
}

// (1/Vol N) integral of A over [0,2pi]^r x R^r x CP^n against dx dxi and the
// unit-mass Fubini-Study volume; exact through the coefficient line
// integrals and the monomial moments.
inline cplx phase_space_integral(const MixedSymbol& a) {
  cplx s = 0.0;
  const auto it = a.modes.find(BaseMode(a.r, 0));
  if (it == a.modes.end()) return s;
  const double lg_head = std::lgamma(a.n + 1.0) - std::lgamma(a.n + a.deg + 1.0);
  for (const auto& [k, fn] : it->second)
    if (k.first == k.second)
      s += fn.integral() * std::exp(lg_head + mi_log_factorial(k.first));
  return std::pow(2.0 * pi, a.r) * s;
}

}  // namespace qelab
