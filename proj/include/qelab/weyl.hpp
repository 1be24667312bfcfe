// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/base_symbol.hpp"

namespace qelab {

// Exact Weyl quantization on the mode lattice {k in Z^r : |k|_inf <= K} of
// the r-torus: mode k is sent to sum_m A_m(h(k + theta + m/2)) (mode k+m).
// Stored band-wise (one diagonal per Fourier mode of the symbol); matrix
// action masks targets outside the lattice.
struct WeylOperator {
  int r = 1;
  double h = 1.0;
  int K = 1;
  RVec theta;
  std::map<BaseMode, std::vector<cplx>> bands;  // band[m][column index]

  int side() const { return 2 * K + 1; }
  int dim() const {
    int d = 1;
    for (int j = 0; j < r; ++j) d *= side();
    return d;
  }

  BaseMode mode_of(int idx) const {
    BaseMode k(r);
    for (int j = 0; j < r; ++j) {
      k[j] = idx % side() - K;
      idx /= side();
    }
    return k;
  }

  // Flattened index of k, or -1 if outside the lattice.
  int index_of(const BaseMode& k) const {
    int idx = 0, stride = 1;
    for (int j = 0; j < r; ++j) {
      if (std::abs(k[j]) > K) return -1;
      idx += (k[j] + K) * stride;
      stride *= side();
    }
    return idx;
  }

  // Flattened offset of a band and the per-column validity of its target,
  // without allocating: k_j is recovered by stride arithmetic.
  int band_offset(const BaseMode& m) const {
    int off = 0, stride = 1;
    for (int j = 0; j < r; ++j) {
      off += m[j] * stride;
      stride *= side();
    }
    return off;
  }

  bool target_in_lattice(int i, const BaseMode& m) const {
    int stride = 1;
    for (int j = 0; j < r; ++j) {
      const int kj = (i / stride) % side() - K;
      if (std::abs(kj + m[j]) > K) return false;
      stride *= side();
    }
    return true;
  }

  Vec apply(const Vec& v) const {
    const int d = dim();
    Vec out = Vec::Zero(d);
    for (const auto& [m, band] : bands) {
      const int off = band_offset(m);
      for (int i = 0; i < d; ++i) {
        if (band[i] == cplx(0.0) || v[i] == cplx(0.0)) continue;
        if (target_in_lattice(i, m)) out[i + off] += band[i] * v[i];
      }
    }
    return out;
  }

  Vec apply_adjoint(const Vec& v) const {
    const int d = dim();
    Vec out = Vec::Zero(d);
    for (const auto& [m, band] : bands) {
      const int off = band_offset(m);
      for (int i = 0; i < d; ++i) {
        if (band[i] == cplx(0.0)) continue;
        if (target_in_lattice(i, m)) out[i] += std::conj(band[i]) * v[i + off];
      }
    }
    return out;
  }

  Mat to_dense() const {
    Mat out = Mat::Zero(dim(), dim());
    for (const auto& [m, band] : bands)
      for (int i = 0; i < dim(); ++i) {
        BaseMode k = mode_of(i);
        for (int j = 0; j < r; ++j) k[j] += m[j];
        const int t = index_of(k);
        if (t >= 0) out(t, i) = band[i];
      }
    return out;
  }

  cplx trace() const {
    const auto it = bands.find(BaseMode(r, 0));
    if (it == bands.end()) return 0.0;
    cplx s = 0.0;
    for (const cplx& v : it->second) s += v;
    return s;
  }

  WeylOperator adjoint() const {
    WeylOperator out{r, h, K, theta, {}};
    for (const auto& [m, band] : bands) {
      BaseMode neg(m);
      for (int& e : neg) e = -e;
      std::vector<cplx> nb(dim(), 0.0);
      for (int i = 0; i < dim(); ++i) {
        BaseMode k = mode_of(i);  // adjoint band column k needs source k-m
        for (int j = 0; j < r; ++j) k[j] -= m[j];
        const int s = index_of(k);
        if (s >= 0) nb[i] = std::conj(band[s]);
      }
      out.bands[neg] = std::move(nb);
    }
    return out;
  }
};

namespace detail {

inline void band_accum(WeylOperator& op, const BaseMode& m, int col, cplx v) {
  auto [it, fresh] = op.bands.try_emplace(m);
  if (fresh) it->second.assign(op.dim(), 0.0);
  it->second[col] += v;
}

}  // namespace detail

inline WeylOperator weyl_op(const BaseSymbol& a, double h, int K, const RVec& theta) {
  require(h > 0.0 && h <= 1.0, "weyl_op: h must lie in (0, 1]");
  require(K >= 1, "weyl_op: cutoff must be positive");
  require(static_cast<int>(theta.size()) == a.r, "weyl_op: twist size mismatch");
  require(a.fourier_radius() <= 2 * K,
          "weyl_op: symbol Fourier support exceeds the lattice cutoff");
  WeylOperator op{a.r, h, K, theta, {}};
  const int d = op.dim();
  RVec xi(a.r);
  for (const auto& [m, fn] : a.modes) {
    std::vector<cplx> band(d, 0.0);
    for (int i = 0; i < d; ++i) {
      const BaseMode k = op.mode_of(i);
      for (int j = 0; j < a.r; ++j) xi[j] = h * (k[j] + 0.5 * m[j] + theta[j]);
      band[i] = fn.eval(xi);
    }
    op.bands[m] = std::move(band);
  }
  return op;
}

// Exact banded product; entries are reliable on columns whose chain
// k -> k+mb -> k+mb+ma stays inside the lattice, which windowed norms
// guarantee by construction.
inline WeylOperator weyl_product(const WeylOperator& a, const WeylOperator& b) {
  require(a.r == b.r && a.K == b.K && a.h == b.h, "weyl_product: operand mismatch");
  WeylOperator out{a.r, a.h, a.K, a.theta, {}};
  const int d = out.dim();
  for (const auto& [ma, banda] : a.bands)
    for (const auto& [mb, bandb] : b.bands) {
      BaseMode m(ma);
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      const int off = out.band_offset(mb);
      for (int i = 0; i < d; ++i) {
        if (bandb[i] == cplx(0.0)) continue;
        if (out.target_in_lattice(i, mb) && banda[i + off] != cplx(0.0))
          detail::band_accum(out, m, i, banda[i + off] * bandb[i]);
      }
    }
  return out;
}

inline WeylOperator weyl_axpy(cplx c, const WeylOperator& x, const WeylOperator& y) {
  WeylOperator out = y;
  for (const auto& [m, band] : x.bands) {
    auto [it, fresh] = out.bands.try_emplace(m);
    if (fresh) it->second.assign(out.dim(), 0.0);
    for (int i = 0; i < out.dim(); ++i) it->second[i] += c * band[i];
  }
  return out;
}

// Operator norm of the compression to |k|_inf <= Kw (quarantines the
// cutoff boundary), via matrix-free power iteration.
inline double windowed_norm(const WeylOperator& op, int Kw) {
  require(Kw >= 0 && Kw <= op.K, "windowed_norm: window exceeds the lattice");
  const int d = op.dim();
  auto project = [&](Vec v) {
    for (int i = 0; i < d; ++i) {
      int stride = 1;
      for (int j = 0; j < op.r; ++j) {
        if (std::abs((i / stride) % op.side() - op.K) > Kw) {
          v[i] = 0.0;
          break;
        }
        stride *= op.side();
      }
    }
    return v;
  };
  return operator_norm_matfree(
      d, [&](const Vec& v) { return project(op.apply(project(v))); },
      [&](const Vec& v) { return project(op.apply_adjoint(project(v))); });
}

inline double weyl_adjoint_residual(const BaseSymbol& a, double h, int K) {
  const RVec theta = RVec::Zero(a.r);
  const WeylOperator lhs = weyl_op(a, h, K, theta).adjoint();
  const WeylOperator rhs = weyl_op(a.conjugate(), h, K, theta);
  const WeylOperator diff = weyl_axpy(-1.0, rhs, lhs);
  return operator_norm_matfree(
      diff.dim(), [&](const Vec& v) { return diff.apply(v); },
      [&](const Vec& v) { return diff.apply_adjoint(v); });
}

// || Op(A) Op(B) - sum_{i<=j} h^i Op(A #_i B) || per h on the window
// |k| <= K/2 with K ~ 4/h, so the window watches a fixed xi-range while the
// boundary stays quarantined.
inline std::vector<double> weyl_composition_residual(const BaseSymbol& a,
                                                     const BaseSymbol& b,
                                                     const std::vector<double>& h_list,
                                                     int j) {
  require(j == 0 || j == 1, "weyl_composition_residual: j must be 0 or 1");
  std::vector<double> out;
  out.reserve(h_list.size());
  const BaseSymbol m0 = moyal_terms(a, b, 0);
  const BaseSymbol m1 = (j >= 1) ? moyal_terms(a, b, 1) : BaseSymbol{a.r, {}, 0};
  for (double h : h_list) {
    const int K = std::max(16, int(std::ceil(4.0 / h)));
    const RVec theta = RVec::Zero(a.r);
    WeylOperator res =
        weyl_product(weyl_op(a, h, K, theta), weyl_op(b, h, K, theta));
    res = weyl_axpy(-1.0, weyl_op(m0, h, K, theta), res);
    if (j >= 1) res = weyl_axpy(-h, weyl_op(m1, h, K, theta), res);
    out.push_back(windowed_norm(res, K / 2));
  }
  return out;
}

// |(2 pi h)^r Tr Op_h(A) - int A dx dxi|; the lattice trace is cut off at a
// radius certified by doubling (tail below 1e-12 of scale, else an error).
inline std::vector<double> weyl_trace_residual(const BaseSymbol& a,
                                               const std::vector<double>& h_list) {
  std::vector<double> out;
  out.reserve(h_list.size());
  const auto it = a.modes.find(BaseMode(a.r, 0));
  cplx integral = 0.0;
  if (it != a.modes.end()) integral = it->second.integral();
  for (int j = 0; j < a.r; ++j) integral *= 2.0 * pi;
  for (double h : h_list) {
    cplx sums[2] = {0.0, 0.0};
    if (it != a.modes.end()) {
      for (int pass = 0; pass < 2; ++pass) {
        const int K = int(std::ceil(12.0 / h)) * (pass + 1);
        RVec xi(a.r);
        BaseMode k(a.r, -K);
        for (;;) {
          for (int j = 0; j < a.r; ++j) xi[j] = h * k[j];
          sums[pass] += it->second.eval(xi);
          int j = 0;
          while (j < a.r && ++k[j] > K) k[j++] = -K;
          if (j == a.r) break;
        }
      }
      certify(std::abs(sums[1] - sums[0]) * std::pow(2.0 * pi * h, a.r) <=
                  1e-12 * std::max(1.0, std::abs(integral)),
              "weyl_trace_residual: lattice tail not negligible at the cutoff");
    }
    out.push_back(std::abs(std::pow(2.0 * pi * h, a.r) * sums[1] - integral));
  }
  return out;
}

}  // namespace qelab
