// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>

#include "qelab/xi_function.hpp"

namespace qelab {

using BaseMode = std::vector<int>;  // Fourier mode in Z^r

// Symbol A(x, xi) on the cotangent bundle of the r-torus, as a finite
// Fourier sum A = sum_m A_m(xi) e^{i m.x}.  `order` is the declared decay
// order marker of the class; derivatives in xi are analytic through XiFn.
struct BaseSymbol {
  int r = 1;
  std::map<BaseMode, XiFn> modes;
  int order = 0;

  cplx eval(const RVec& x, const RVec& xi) const {
    cplx s = 0.0;
    for (const auto& [m, fn] : modes) {
      double phase = 0.0;
      for (int j = 0; j < r; ++j) phase += m[j] * x[j];
      s += fn.eval(xi) * std::exp(iu * phase);
    }
    return s;
  }

  int fourier_radius() const {
    int rad = 0;
    for (const auto& [m, fn] : modes)
      for (int j = 0; j < r; ++j) rad = std::max(rad, std::abs(m[j]));
    return rad;
  }

  BaseSymbol conjugate() const {
    BaseSymbol out{r, {}, order};
    for (const auto& [m, fn] : modes) {
      BaseMode neg(m);
      for (int& e : neg) e = -e;
      out.modes[neg] = fn.conjugate();
    }
    return out;
  }

  // Reality means A_{-m} = conj(A_m); XiFn has no canonical form, so the
  // check probes random xi values.
  bool is_real(int probes = 24, std::uint64_t seed = 99) const {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss;
    const BaseSymbol c = conjugate();
    for (int t = 0; t < probes; ++t) {
      RVec xi(r);
      for (int j = 0; j < r; ++j) xi[j] = 2.0 * gauss(rng);
      for (const auto& [m, fn] : modes) {
        const auto it = c.modes.find(m);
        const cplx other = (it == c.modes.end()) ? cplx(0.0) : it->second.eval(xi);
        if (std::abs(fn.eval(xi) - other) > 1e-10 * (1.0 + std::abs(other)))
          return false;
      }
    }
    return true;
  }
};

inline void base_accum(BaseSymbol& s, const BaseMode& m, const XiFn& fn) {
  if (fn.zero()) return;
  auto [it, fresh] = s.modes.try_emplace(m, fn);
  if (!fresh) it->second = it->second + fn;
}

inline BaseSymbol operator+(const BaseSymbol& a, const BaseSymbol& b) {
  require(a.r == b.r, "BaseSymbol sum: dimension mismatch");
  BaseSymbol out = a;
  out.order = std::max(a.order, b.order);
  for (const auto& [m, fn] : b.modes) base_accum(out, m, fn);
  return out;
}

inline BaseSymbol operator*(cplx c, const BaseSymbol& a) {
  BaseSymbol out{a.r, {}, a.order};
  if (c == cplx(0.0)) return out;
  for (const auto& [m, fn] : a.modes) out.modes[m] = c * fn;
  return out;
}

inline BaseSymbol operator-(const BaseSymbol& a, const BaseSymbol& b) {
  return a + (cplx(-1.0) * b);
}

inline BaseSymbol base_product(const BaseSymbol& a, const BaseSymbol& b) {
  require(a.r == b.r, "base_product: dimension mismatch");
  BaseSymbol out{a.r, {}, a.order + b.order};
  for (const auto& [ma, fa] : a.modes)
    for (const auto& [mb, fb] : b.modes) {
      BaseMode m(ma);
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      base_accum(out, m, fa * fb);
    }
  return out;
}

// Moyal expansion terms.  Order 0 is the product; order 1 is
//   (1 / 2i) sum_j (d_{xi_j} A d_{x_j} B - d_{x_j} A d_{xi_j} B),
// with x-derivatives acting as multiplication by i m_j on mode m.
inline BaseSymbol moyal_terms(const BaseSymbol& a, const BaseSymbol& b, int order) {
  require(order == 0 || order == 1, "moyal_terms: order must be 0 or 1");
  if (order == 0) return base_product(a, b);
  BaseSymbol out{a.r, {}, a.order + b.order};
  for (const auto& [ma, fa] : a.modes)
    for (const auto& [mb, fb] : b.modes) {
      BaseMode m(ma);
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      for (int j = 0; j < a.r; ++j) {
        XiFn term = (cplx(iu * double(mb[j])) * (fa.deriv(j) * fb)) -
                    (cplx(iu * double(ma[j])) * (fa * fb.deriv(j)));
        base_accum(out, m, cplx(1.0 / (2.0 * iu)) * term);
      }
    }
  return out;
}

// Convenience builders for the test batteries.
inline BaseSymbol base_from_xi(const XiFn& fn, int order = 0) {
  BaseSymbol out{fn.r, {}, order};
  base_accum(out, BaseMode(fn.r, 0), fn);
  return out;
}

// c * e^{i m.x} * fn(xi)
inline BaseSymbol base_wave(const BaseMode& m, const XiFn& fn, cplx c = 1.0) {
  BaseSymbol out{static_cast<int>(m.size()), {}, 0};
  base_accum(out, m, c * fn);
  return out;
}

// sin(x_j) and cos(x_j) as two-mode symbols
inline BaseSymbol base_sin(int r, int j, const XiFn& fn) {
  BaseMode m(r, 0);
  m[j] = 1;
  BaseSymbol out = base_wave(m, cplx(1.0 / (2.0 * iu)) * fn);
  m[j] = -1;
  base_accum(out, m, cplx(-1.0 / (2.0 * iu)) * fn);
  return out;
}

inline BaseSymbol base_cos(int r, int j, const XiFn& fn) {
  BaseMode m(r, 0);
  m[j] = 1;
  BaseSymbol out = base_wave(m, cplx(0.5) * fn);
  m[j] = -1;
  base_accum(out, m, cplx(0.5) * fn);
  return out;
}

}  // namespace qelab
