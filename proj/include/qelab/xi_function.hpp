// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "qelab/common.hpp"

namespace qelab {

// One-dimensional factor of a xi-coefficient function.  The family is kept
// closed under d/dt so symbol derivatives are analytic, never numerical.
class XiFactor {
 public:
  virtual ~XiFactor() = default;
  virtual cplx eval(double t) const = 0;
  virtual std::shared_ptr<const XiFactor> deriv() const = 0;
  virtual std::shared_ptr<const XiFactor> conjugate() const = 0;
  // Integral over the real line; throws when the factor is not integrable.
  virtual cplx integral() const = 0;
  // Pointwise product when representable in the same family, else null.
  virtual std::shared_ptr<const XiFactor> multiply(const XiFactor&) const { return nullptr; }
};

using XiFactorPtr = std::shared_ptr<const XiFactor>;

// P(t) * exp(q2 t^2 + q1 t + q0) with Re q2 <= 0: polynomials, Gaussians and
// their products.  Closed under derivative and product; the line integral
// has a closed form through shifted Gaussian moments.
class PolyExpFactor : public XiFactor {
 public:
  std::vector<cplx> poly;  // coefficient of t^k at index k
  cplx q2{0.0}, q1{0.0}, q0{0.0};

  PolyExpFactor(std::vector<cplx> p, cplx a2, cplx a1, cplx a0)
      : poly(std::move(p)), q2(a2), q1(a1), q0(a0) {
    require(q2.real() <= 1e-12, "PolyExpFactor: need Re q2 <= 0");
    while (poly.size() > 1 && poly.back() == cplx(0.0)) poly.pop_back();
    if (poly.empty()) poly.push_back(0.0);
  }

  cplx eval(double t) const override {
    cplx p = 0.0;
    for (size_t k = poly.size(); k-- > 0;) p = p * t + poly[k];
    return p * std::exp((q2 * t + q1) * t + q0);
  }

  std::shared_ptr<const XiFactor> deriv() const override {
    // (P e^q)' = (P' + P (2 q2 t + q1)) e^q
    std::vector<cplx> d(std::max<size_t>(poly.size() + 1, 1), 0.0);
    for (size_t k = 1; k < poly.size(); ++k) d[k - 1] += double(k) * poly[k];
    for (size_t k = 0; k < poly.size(); ++k) {
      d[k + 1] += 2.0 * q2 * poly[k];
      d[k] += q1 * poly[k];
    }
    return std::make_shared<PolyExpFactor>(std::move(d), q2, q1, q0);
  }

  std::shared_ptr<const XiFactor> conjugate() const override {
    std::vector<cplx> p(poly.size());
    for (size_t k = 0; k < poly.size(); ++k) p[k] = std::conj(poly[k]);
    return std::make_shared<PolyExpFactor>(std::move(p), std::conj(q2),
                                           std::conj(q1), std::conj(q0));
  }

  cplx integral() const override {
    certify(q2.real() < -1e-12,
            "PolyExpFactor::integral: factor does not decay on the line");
    // complete the square: t = s + c with c = -q1/(2 q2)
    const cplx c = -q1 / (2.0 * q2);
    const cplx head = std::exp(q0 - q1 * q1 / (4.0 * q2));
    // rewrite P(s + c) in powers of s; avoid std::pow(0+0i, 0) = nan
    std::vector<cplx> cpow(poly.size(), 1.0);
    for (size_t e = 1; e < cpow.size(); ++e) cpow[e] = cpow[e - 1] * c;
    std::vector<cplx> ps(poly.size(), 0.0);
    for (size_t k = 0; k < poly.size(); ++k) {
      cplx b = poly[k];
      for (size_t j = 0; j <= k; ++j) {
        ps[j] += b * binomial(int(k), int(j)) * cpow[k - j];
      }
    }
    // Gaussian moments: M_0 = sqrt(pi / -q2), M_1 = 0,
    // M_k = (k-1)/(-2 q2) M_{k-2}
    std::vector<cplx> mom(ps.size(), 0.0);
    mom[0] = std::sqrt(pi / -q2);
    if (mom.size() > 1) mom[1] = 0.0;
    for (size_t k = 2; k < mom.size(); ++k)
      mom[k] = (double(k) - 1.0) / (-2.0 * q2) * mom[k - 2];
    cplx s = 0.0;
    for (size_t k = 0; k < ps.size(); ++k) s += ps[k] * mom[k];
    return head * s;
  }

  std::shared_ptr<const XiFactor> multiply(const XiFactor& other) const override {
    const auto* o = dynamic_cast<const PolyExpFactor*>(&other);
    if (!o) return nullptr;
    std::vector<cplx> p(poly.size() + o->poly.size() - 1, 0.0);
    for (size_t a = 0; a < poly.size(); ++a)
      for (size_t b = 0; b < o->poly.size(); ++b) p[a + b] += poly[a] * o->poly[b];
    return std::make_shared<PolyExpFactor>(std::move(p), q2 + o->q2, q1 + o->q1,
                                           q0 + o->q0);
  }
};

// sum_m P_m(t) * g^(m)(t^2) for a Gaussian bump g(u) = e^{-((u-c)/s)^2}:
// the shape of phi(|xi|^2) and its Taylor companions for Schwartz phi.  Via
// g^(m)(u) = (-1/s)^m H_m((u-c)/s) e^{-((u-c)/s)^2} (Hermite), the family is
// closed under d/dt:  (P_m g^(m))' = P_m' g^(m) + 2t P_m g^(m+1).
class GaussSquareFactor : public XiFactor {
 public:
  double c, s;
  std::vector<std::vector<cplx>> polys;  // polys[m] multiplies g^(m)(t^2)

  GaussSquareFactor(double center, double width, std::vector<std::vector<cplx>> p)
      : c(center), s(width), polys(std::move(p)) {
    require(s > 0.0, "GaussSquareFactor: width must be positive");
    if (polys.empty()) polys.push_back({0.0});
  }

  cplx eval(double t) const override {
    const double y = (t * t - c) / s;
    const double e = std::exp(-y * y);
    double hm1 = 0.0, hm = 1.0;  // Hermite H_{m-1}, H_m
    double fac = 1.0;            // (-1/s)^m
    cplx out = 0.0;
    for (size_t m = 0; m < polys.size(); ++m) {
      cplx p = 0.0;
      for (size_t k = polys[m].size(); k-- > 0;) p = p * t + polys[m][k];
      out += p * fac * hm;
      const double next = 2.0 * y * hm - 2.0 * double(m) * hm1;
      hm1 = hm;
      hm = next;
      fac *= -1.0 / s;
    }
    return out * e;
  }

  std::shared_ptr<const XiFactor> deriv() const override {
    std::vector<std::vector<cplx>> d(polys.size() + 1);
    for (size_t m = 0; m < polys.size(); ++m) {
      auto& dm = d[m];
      if (dm.size() < std::max<size_t>(polys[m].size(), 2) - 1)
        dm.resize(std::max<size_t>(polys[m].size(), 2) - 1, 0.0);
      for (size_t k = 1; k < polys[m].size(); ++k) dm[k - 1] += double(k) * polys[m][k];
      auto& dn = d[m + 1];
      if (dn.size() < polys[m].size() + 1) dn.resize(polys[m].size() + 1, 0.0);
      for (size_t k = 0; k < polys[m].size(); ++k) dn[k + 1] += 2.0 * polys[m][k];
    }
    return std::make_shared<GaussSquareFactor>(c, s, std::move(d));
  }

  std::shared_ptr<const XiFactor> conjugate() const override {
    std::vector<std::vector<cplx>> p(polys.size());
    for (size_t m = 0; m < polys.size(); ++m) {
      p[m].reserve(polys[m].size());
      for (const cplx& v : polys[m]) p[m].push_back(std::conj(v));
    }
    return std::make_shared<GaussSquareFactor>(c, s, std::move(p));
  }

  cplx integral() const override {
    // e^{-((t^2-c)/s)^2} dies super-Gaussianly; Simpson on a certified range.
    const double T = std::sqrt(std::max(c, 0.0) + 10.0 * s) + 2.0;
    cplx sums[2] = {0.0, 0.0};
    for (int pass = 0; pass < 2; ++pass) {
      const int N = 4000 * (pass + 1);
      const double dt = 2.0 * T / N;
      cplx acc = eval(-T) + eval(T);
      for (int i = 1; i < N; ++i) acc += ((i % 2) ? 4.0 : 2.0) * eval(-T + i * dt);
      sums[pass] = acc * dt / 3.0;
    }
    certify(std::abs(sums[1] - sums[0]) <= 1e-11 * (1.0 + std::abs(sums[1])),
            "GaussSquareFactor::integral: quadrature did not certify");
    return sums[1];
  }

  std::shared_ptr<const XiFactor> multiply(const XiFactor& other) const override {
    const auto* o = dynamic_cast<const PolyExpFactor*>(&other);
    if (!o || o->q2 != cplx(0.0) || o->q1 != cplx(0.0)) return nullptr;
    const cplx head = std::exp(o->q0);
    std::vector<std::vector<cplx>> p(polys.size());
    for (size_t m = 0; m < polys.size(); ++m) {
      p[m].assign(polys[m].size() + o->poly.size() - 1, 0.0);
      for (size_t a = 0; a < polys[m].size(); ++a)
        for (size_t b = 0; b < o->poly.size(); ++b)
          p[m][a + b] += head * polys[m][a] * o->poly[b];
    }
    return std::make_shared<GaussSquareFactor>(c, s, std::move(p));
  }
};

inline XiFactorPtr polyexp(std::vector<cplx> p, cplx q2 = 0.0, cplx q1 = 0.0,
                           cplx q0 = 0.0) {
  return std::make_shared<PolyExpFactor>(std::move(p), q2, q1, q0);
}

// g^(m)(t^2) for the Gaussian bump above; m = 0 gives phi(t^2) itself.
inline XiFactorPtr gauss_of_square(double center, double width, int m = 0, cplx coeff = 1.0) {
  std::vector<std::vector<cplx>> polys(m + 1);
  for (int j = 0; j < m; ++j) polys[j] = {0.0};
  polys[m] = {coeff};
  return std::make_shared<GaussSquareFactor>(center, width, std::move(polys));
}

inline XiFactorPtr unit_factor() { return polyexp({1.0}); }

// Coefficient function of xi over R^r: a sum of tensor-product terms, one
// factor per dimension.
struct XiTerm {
  cplx coeff{1.0};
  std::vector<XiFactorPtr> factors;
};

struct XiFn {
  int r = 1;
  std::vector<XiTerm> terms;

  cplx eval(const RVec& xi) const {
    require(static_cast<int>(xi.size()) == r, "XiFn::eval: dimension mismatch");
    cplx s = 0.0;
    for (const auto& t : terms) {
      cplx v = t.coeff;
      for (int j = 0; j < r && v != cplx(0.0); ++j) v *= t.factors[j]->eval(xi[j]);
      s += v;
    }
    return s;
  }

  XiFn deriv(int dim) const {
    require(dim >= 0 && dim < r, "XiFn::deriv: dimension out of range");
    XiFn out{r, {}};
    out.terms.reserve(terms.size());
    for (const auto& t : terms) {
      XiTerm d = t;
      d.factors[dim] = t.factors[dim]->deriv();
      out.terms.push_back(std::move(d));
    }
    return out;
  }

  cplx integral() const {
    cplx s = 0.0;
    for (const auto& t : terms) {
      cplx v = t.coeff;
      for (int j = 0; j < r; ++j) v *= t.factors[j]->integral();
      s += v;
    }
    return s;
  }

  XiFn conjugate() const {
    XiFn out{r, {}};
    out.terms.reserve(terms.size());
    for (const auto& t : terms) {
      XiTerm c;
      c.coeff = std::conj(t.coeff);
      for (const auto& f : t.factors) c.factors.push_back(f->conjugate());
      out.terms.push_back(std::move(c));
    }
    return out;
  }

  bool zero() const { return terms.empty(); }
};

inline XiFn operator+(const XiFn& a, const XiFn& b) {
  require(a.r == b.r, "XiFn sum: dimension mismatch");
  XiFn out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

inline XiFn operator*(cplx c, const XiFn& a) {
  if (c == cplx(0.0)) return XiFn{a.r, {}};
  XiFn out = a;
  for (auto& t : out.terms) t.coeff *= c;
  return out;
}

inline XiFn operator-(const XiFn& a, const XiFn& b) { return a + (cplx(-1.0) * b); }

inline XiFn operator*(const XiFn& a, const XiFn& b) {
  require(a.r == b.r, "XiFn product: dimension mismatch");
  XiFn out{a.r, {}};
  out.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      XiTerm t;
      t.coeff = ta.coeff * tb.coeff;
      t.factors.reserve(a.r);
      for (int j = 0; j < a.r; ++j) {
        auto prod = ta.factors[j]->multiply(*tb.factors[j]);
        if (!prod) prod = tb.factors[j]->multiply(*ta.factors[j]);
        certify(prod != nullptr, "XiFn product: factors outside the closed family");
        t.factors.push_back(std::move(prod));
      }
      out.terms.push_back(std::move(t));
    }
  return out;
}

inline XiFn xi_constant(int r, cplx c) {
  if (c == cplx(0.0)) return XiFn{r, {}};
  XiTerm t;
  t.coeff = c;
  for (int j = 0; j < r; ++j) t.factors.push_back(unit_factor());
  return XiFn{r, {std::move(t)}};
}

// The coordinate function xi_dim.
inline XiFn xi_coordinate(int r, int dim) {
  XiTerm t;
  for (int j = 0; j < r; ++j)
    t.factors.push_back(j == dim ? polyexp({0.0, 1.0}) : unit_factor());
  return XiFn{r, {std::move(t)}};
}

// exp(-|xi - center|^2 / width^2)
inline XiFn xi_gaussian(int r, const RVec& center, double width) {
  require(width > 0.0, "xi_gaussian: width must be positive");
  XiTerm t;
  const double a = 1.0 / (width * width);
  for (int j = 0; j < r; ++j)
    t.factors.push_back(
        polyexp({1.0}, -a, 2.0 * a * center[j], -a * center[j] * center[j]));
  return XiFn{r, {std::move(t)}};
}

}  // namespace qelab
