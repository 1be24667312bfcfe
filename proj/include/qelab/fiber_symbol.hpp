// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <utility>

#include "qelab/fiber_point.hpp"
#include "qelab/lie_element.hpp"
#include "qelab/multi_index.hpp"

namespace qelab {

// Polynomial in (w, conj w) over C^{n+1} with free bidegrees, used as an
// intermediate for derivative formulas.  Keys are (holomorphic exponents,
// antiholomorphic exponents).
using PairTable = std::map<std::pair<MultiIndex, MultiIndex>, cplx>;

namespace detail {

inline void table_accum(PairTable& t, const MultiIndex& g, const MultiIndex& d, cplx c) {
  if (c == cplx(0.0)) return;
  auto [it, fresh] = t.try_emplace({g, d}, c);
  if (!fresh) {
    it->second += c;
    if (it->second == cplx(0.0)) t.erase(it);
  }
}

inline PairTable table_product(const PairTable& a, const PairTable& b) {
  PairTable out;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) {
      MultiIndex g = ka.first, d = ka.second;
      for (size_t j = 0; j < g.size(); ++j) {
        g[j] += kb.first[j];
        d[j] += kb.second[j];
      }
      table_accum(out, g, d, ca * cb);
    }
  return out;
}

inline PairTable table_dw(const PairTable& a, int j, bool bar) {
  PairTable out;
  for (const auto& [k, c] : a) {
    MultiIndex g = k.first, d = k.second;
    int& e = bar ? d[j] : g[j];
    if (e == 0) continue;
    const int old = e--;
    table_accum(out, g, d, c * double(old));
  }
  return out;
}

inline PairTable table_conj(const PairTable& a) {
  PairTable out;
  for (const auto& [k, c] : a) out[{k.second, k.first}] = std::conj(c);
  return out;
}

// |w|^(2k) expanded as a table.
inline PairTable norm_power(int len, int k) {
  PairTable out;
  for (const auto& m : enumerate_multi_indices(k, len)) {
    const double c = std::exp(std::lgamma(k + 1.0) - mi_log_factorial(m));
    out[{m, m}] = std::round(c);
  }
  return out;
}

}  // namespace detail

// Smooth function on CP^n represented as P(w, conj w) / |w|^(2 deg) with P
// of bidegree (deg, deg).  The class is closed under sums, products and the
// Poisson bracket of the normalized Fubini-Study form, and Toeplitz matrix
// elements against it reduce to monomial integrals.
struct FiberSymbol {
  int n = 1;
  int deg = 0;
  PairTable table;

  FiberSymbol(int n_, int deg_, PairTable t) : n(n_), deg(deg_), table(std::move(t)) {
    require(n >= 1 && deg >= 0, "FiberSymbol: need n >= 1, deg >= 0");
    for (const auto& [k, c] : table) {
      require(static_cast<int>(k.first.size()) == n + 1 &&
                  static_cast<int>(k.second.size()) == n + 1,
              "FiberSymbol: exponent length mismatch");
      require(mi_degree(k.first) == deg && mi_degree(k.second) == deg,
              "FiberSymbol: table entry off the declared bidegree");
    }
  }

  cplx eval(const FiberPoint& w) const {
    cplx s = 0.0;
    for (const auto& [k, c] : table) s += c * w.monomial(k.first, k.second);
    return s;  // |w| = 1 by construction of FiberPoint
  }

  bool is_real(double tol = 1e-12) const {
    double worst = 0.0, scale = 1e-300;
    for (const auto& [k, c] : table) {
      scale = std::max(scale, std::abs(c));
      auto it = table.find({k.second, k.first});
      const cplx other = (it == table.end()) ? cplx(0.0) : it->second;
      worst = std::max(worst, std::abs(c - std::conj(other)));
    }
    return worst <= tol * scale;
  }

  FiberSymbol conjugate() const { return {n, deg, detail::table_conj(table)}; }

  // Same function, represented at a higher degree via |w|^2 factors.
  FiberSymbol promote(int new_deg) const {
    require(new_deg >= deg, "FiberSymbol::promote: degree can only grow");
    if (new_deg == deg) return *this;
    return {n, new_deg, detail::table_product(table, detail::norm_power(n + 1, new_deg - deg))};
  }
};

inline FiberSymbol fiber_constant(int n, cplx c) {
  PairTable t;
  if (c != cplx(0.0)) t[{MultiIndex(n + 1, 0), MultiIndex(n + 1, 0)}] = c;
  return {n, 0, std::move(t)};
}

inline FiberSymbol operator*(const FiberSymbol& f, const FiberSymbol& g) {
  require(f.n == g.n, "FiberSymbol product: dimension mismatch");
  return {f.n, f.deg + g.deg, detail::table_product(f.table, g.table)};
}

inline FiberSymbol operator*(cplx c, const FiberSymbol& f) {
  PairTable t;
  if (c != cplx(0.0))
    for (const auto& [k, v] : f.table) t[k] = c * v;
  return {f.n, f.deg, std::move(t)};
}

inline FiberSymbol operator+(const FiberSymbol& f, const FiberSymbol& g) {
  require(f.n == g.n, "FiberSymbol sum: dimension mismatch");
  const int d = std::max(f.deg, g.deg);
  FiberSymbol a = f.promote(d), b = g.promote(d);
  for (const auto& [k, c] : b.table) detail::table_accum(a.table, k.first, k.second, c);
  return a;
}

inline FiberSymbol operator-(const FiberSymbol& f, const FiberSymbol& g) {
  return f + (cplx(-1.0) * g);
}

// Hamiltonian of the U(n+1) action on the prequantized fiber: for
// anti-Hermitian a, mu_a(w) = -(w* a w) / (2 pi i |w|^2).  Real valued, and
// the generator identities below are exact:
//   d/dt mu_b(e^{ta} w) |_{t=0} = -mu_{[a,b]}(w),
//   {mu_a, mu_b} = (1 / 2 pi) mu_{[a,b]}.
inline FiberSymbol moment_map_symbol(const LieElement& a) {
  PairTable t;
  const int n = a.n();
  for (int j = 0; j <= n; ++j)
    for (int k = 0; k <= n; ++k) {
      if (a.a(j, k) == cplx(0.0)) continue;
      MultiIndex g(n + 1, 0), d(n + 1, 0);
      g[k] = 1;
      d[j] = 1;
      detail::table_accum(t, g, d, iu * a.a(j, k) / (2.0 * pi));
    }
  return {n, 1, std::move(t)};
}

// Moment map of the same action on the determinant line; for traceless a it
// is (n+1) times the one above, with no additive constant.
inline FiberSymbol det_moment_map_symbol(const LieElement& a) {
  return cplx(a.n() + 1.0) * moment_map_symbol(a);
}

inline double moment_map(const LieElement& a, const FiberPoint& w) {
  return moment_map_symbol(a).eval(w).real();
}

inline double det_moment_map(const LieElement& a, const FiberPoint& w) {
  return det_moment_map_symbol(a).eval(w).real();
}

// Poisson bracket for the Fubini-Study form normalized to total area 1 on
// each line (2 pi times the unit-c1 form).  Computed on the degree-0
// homogeneous extensions f = P_f / |w|^(2 df):
//   {f, g}(w) = (1/i) sum_j (d_{w_j} f d_{wbar_j} g - d_{wbar_j} f d_{w_j} g)
// restricted to |w| = 1.  The numerator below has bidegree (df+dg+1, df+dg+1)
// and agrees with that restriction, so it defines the result symbol.
inline FiberSymbol poisson_bracket(const FiberSymbol& f, const FiberSymbol& g) {
  require(f.n == g.n, "poisson_bracket: dimension mismatch");
  const int len = f.n + 1;
  const PairTable one = detail::norm_power(len, 1);
  PairTable acc;
  for (int j = 0; j < len; ++j) {
    PairTable fj = detail::table_product(detail::table_dw(f.table, j, false), one);
    PairTable fbj = detail::table_product(detail::table_dw(f.table, j, true), one);
    PairTable gj = detail::table_product(detail::table_dw(g.table, j, false), one);
    PairTable gbj = detail::table_product(detail::table_dw(g.table, j, true), one);
    for (const auto& [k, c] : f.table) {
      MultiIndex gg = k.first, dd = k.second;
      ++dd[j];
      detail::table_accum(fj, gg, dd, -double(f.deg) * c);
      gg = k.first; dd = k.second;
      ++gg[j];
      detail::table_accum(fbj, gg, dd, -double(f.deg) * c);
    }
    for (const auto& [k, c] : g.table) {
      MultiIndex gg = k.first, dd = k.second;
      ++dd[j];
      detail::table_accum(gj, gg, dd, -double(g.deg) * c);
      gg = k.first; dd = k.second;
      ++gg[j];
      detail::table_accum(gbj, gg, dd, -double(g.deg) * c);
    }
    for (const auto& [k, c] : detail::table_product(fj, gbj))
      detail::table_accum(acc, k.first, k.second, c / iu);
    for (const auto& [k, c] : detail::table_product(fbj, gj))
      detail::table_accum(acc, k.first, k.second, -c / iu);
  }
  return {f.n, f.deg + g.deg + 1, std::move(acc)};
}

// Restriction to the affine chart w_l = 1: a rational function
// P(z, conj z) / (1 + |z|^2)^pow in n complex variables, closed under
// d/dz_j and d/dzbar_j.  Used for pointwise derivatives of fiber symbols.
struct ChartRational {
  int n = 1;
  int pow = 0;
  PairTable num;  // exponents over the n affine coordinates

  cplx eval(const Vec& z) const {
    require(static_cast<int>(z.size()) == n, "ChartRational::eval: wrong size");
    cplx s = 0.0;
    for (const auto& [k, c] : num) {
      cplx m = c;
      for (int j = 0; j < n; ++j) {
        for (int e = 0; e < k.first[j]; ++e) m *= z[j];
        for (int e = 0; e < k.second[j]; ++e) m *= std::conj(z[j]);
      }
      s += m;
    }
    return s / std::pow(1.0 + z.squaredNorm(), pow);
  }

  ChartRational deriv(int j, bool bar) const {
    // d/dz_j of P/(1+|z|^2)^m = [dP (1+|z|^2) - m zbar_j P] / (1+|z|^2)^{m+1}
    ChartRational out{n, pow + 1, {}};
    PairTable dp = detail::table_dw(num, j, bar);
    for (const auto& [k, c] : dp) {
      detail::table_accum(out.num, k.first, k.second, c);
      for (int l = 0; l < n; ++l) {
        MultiIndex g = k.first, d = k.second;
        ++g[l];
        ++d[l];
        detail::table_accum(out.num, g, d, c);
      }
    }
    for (const auto& [k, c] : num) {
      MultiIndex g = k.first, d = k.second;
      ++(bar ? g[j] : d[j]);
      detail::table_accum(out.num, g, d, -double(pow) * c);
    }
    return out;
  }
  ChartRational dz(int j) const { return deriv(j, false); }
  ChartRational dzbar(int j) const { return deriv(j, true); }
};

inline ChartRational to_chart(const FiberSymbol& f, int l) {
  require(l >= 0 && l <= f.n, "to_chart: chart index out of range");
  ChartRational out{f.n, f.deg, {}};
  for (const auto& [k, c] : f.table) {
    MultiIndex g, d;
    for (int j = 0; j <= f.n; ++j)
      if (j != l) {
        g.push_back(k.first[j]);
        d.push_back(k.second[j]);
      }
    detail::table_accum(out.num, g, d, c);
  }
  return out;
}

// Exact integral against the unit-mass Fubini-Study volume, from the
// closed-form monomial moments: only gamma = delta terms survive, each
// contributing n! gamma! / (n + deg)!.
inline cplx exact_fiber_integral(const FiberSymbol& f) {
  cplx s = 0.0;
  const double lg_head = std::lgamma(f.n + 1.0) - std::lgamma(f.n + f.deg + 1.0);
  for (const auto& [k, c] : f.table)
    if (k.first == k.second) s += c * std::exp(lg_head + mi_log_factorial(k.first));
  return s;
}

// Pointwise Poisson bracket, evaluated in the affine chart holding the
// largest coordinate of w (so the excluded hyperplane is never hit).  Same
// normalization as poisson_bracket above; the two paths cross-check each
// other in the tests.  Inverse metric of i ddbar log(1+|z|^2):
// g^{kbar j} = (1+|z|^2)(delta_jk + z_j zbar_k).
inline double fs_poisson_bracket(const FiberSymbol& f, const FiberSymbol& g,
                                 const FiberPoint& w) {
  require(f.n == g.n && f.n == w.n(), "fs_poisson_bracket: dimension mismatch");
  const int l = w.chart();
  const Vec z = w.affine(l);
  const int n = f.n;
  const ChartRational fc = to_chart(f, l), gc = to_chart(g, l);
  Vec fz(n), fzb(n), gz(n), gzb(n);
  for (int j = 0; j < n; ++j) {
    fz[j] = fc.dz(j).eval(z);
    fzb[j] = fc.dzbar(j).eval(z);
    gz[j] = gc.dz(j).eval(z);
    gzb[j] = gc.dzbar(j).eval(z);
  }
  const double s = 1.0 + z.squaredNorm();
  cplx acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const cplx ginv = s * (cplx(j == k ? 1.0 : 0.0) + z[j] * std::conj(z[k]));
      acc += ginv * (fz[j] * gzb[k] - fzb[k] * gz[j]);
    }
  return (acc / iu).real();
}

}  // namespace qelab
