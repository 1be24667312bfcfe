// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/mixed_symbol.hpp"
#include "qelab/toeplitz.hpp"
#include "qelab/twist.hpp"

namespace qelab {

// Quantization of a mixed symbol at level p on the truncated Fourier lattice
// |k|_inf <= K.  Storage is one band per base mode m, holding a D x D fiber
// block per column lattice site, D = dim of the degree-p sections.  The
// weight-alpha component of a section lives on the shifted lattice
// Z^r + theta_alpha, so a matrix element between weights (alpha, beta)
// evaluates its xi coefficient at the midpoint of source and target
// frequencies:  h * (k + m/2 + (theta_alpha + theta_beta)/2).  Midpoint
// evaluation makes real symbols quantize to exactly Hermitian operators.
struct MixedOperator {
  int r = 1, n = 1, p = 1, K = 1;
  double h = 1.0;
  Twist twist = Twist::zero(1, 1);
  FiberBasis basis;
  std::map<BaseMode, std::vector<Mat>> blocks;  // blocks[m][column site]

  int side() const { return 2 * K + 1; }
  int lattice() const {
    int L = 1;
    for (int j = 0; j < r; ++j) L *= side();
    return L;
  }
  int fdim() const { return basis.dim(); }
  int dim() const { return lattice() * fdim(); }

  BaseMode mode_of(int site) const {
    BaseMode k(r);
    for (int j = 0; j < r; ++j) {
      k[j] = site % side() - K;
      site /= side();
    }
    return k;
  }

  // Flattened site of k, or -1 if outside the lattice.
  int site_of(const BaseMode& k) const {
    int idx = 0, stride = 1;
    for (int j = 0; j < r; ++j) {
      if (std::abs(k[j]) > K) return -1;
      idx += (k[j] + K) * stride;
      stride *= side();
    }
    return idx;
  }

  int band_offset(const BaseMode& m) const {
    int off = 0, stride = 1;
    for (int j = 0; j < r; ++j) {
      off += m[j] * stride;
      stride *= side();
    }
    return off;
  }

  bool target_in_lattice(int site, const BaseMode& m) const {
    int stride = 1;
    for (int j = 0; j < r; ++j) {
      const int kj = (site / stride) % side() - K;
      if (std::abs(kj + m[j]) > K) return false;
      stride *= side();
    }
    return true;
  }

  Vec apply(const Vec& v) const {
    const int L = lattice(), D = fdim();
    Vec out = Vec::Zero(dim());
    for (const auto& [m, band] : blocks) {
      const int off = band_offset(m);
      for (int i = 0; i < L; ++i)
        if (target_in_lattice(i, m))
          out.segment((i + off) * D, D).noalias() += band[i] * v.segment(i * D, D);
    }
    return out;
  }

  Vec apply_adjoint(const Vec& v) const {
    const int L = lattice(), D = fdim();
    Vec out = Vec::Zero(dim());
    for (const auto& [m, band] : blocks) {
      const int off = band_offset(m);
      for (int i = 0; i < L; ++i)
        if (target_in_lattice(i, m))
          out.segment(i * D, D).noalias() += band[i].adjoint() * v.segment((i + off) * D, D);
    }
    return out;
  }

  Mat to_dense() const {
    const int L = lattice(), D = fdim();
    Mat out = Mat::Zero(dim(), dim());
    for (const auto& [m, band] : blocks)
      for (int i = 0; i < L; ++i) {
        BaseMode k = mode_of(i);
        for (int j = 0; j < r; ++j) k[j] += m[j];
        const int t = site_of(k);
        if (t >= 0) out.block(t * D, i * D, D, D) += band[i];
      }
    return out;
  }

  cplx trace() const {
    const auto it = blocks.find(BaseMode(r, 0));
    if (it == blocks.end()) return 0.0;
    cplx s = 0.0;
    for (const Mat& b : it->second) s += b.trace();
    return s;
  }

  MixedOperator adjoint() const {
    const int L = lattice(), D = fdim();
    MixedOperator out{r, n, p, K, h, twist, basis, {}};
    for (const auto& [m, band] : blocks) {
      BaseMode neg(m);
      for (int& e : neg) e = -e;
      std::vector<Mat> nb(L, Mat::Zero(D, D));
      for (int i = 0; i < L; ++i) {
        BaseMode k = mode_of(i);  // adjoint band column k needs source k-m
        for (int j = 0; j < r; ++j) k[j] -= m[j];
        const int s = site_of(k);
        if (s >= 0) nb[i] = band[s].adjoint();
      }
      out.blocks[neg] = std::move(nb);
    }
    return out;
  }
};

inline MixedOperator mixed_op(const MixedSymbol& a, int p, int K, const Twist& tw) {
  require(p >= 1, "mixed_op: level must be positive");
  require(K >= 1, "mixed_op: cutoff must be positive");
  require(tw.r == a.r && tw.n == a.n, "mixed_op: twist shape mismatch");
  require(a.fourier_radius() <= 2 * K,
          "mixed_op: symbol Fourier support exceeds the lattice cutoff");
  MixedOperator op{a.r, a.n, p, K, 1.0 / p, tw, enumerate_basis(a.n, p), {}};
  const int L = op.lattice(), D = op.fdim();
  std::vector<RVec> th(D);
  for (int i = 0; i < D; ++i) th[i] = tw.theta(op.basis.indices[i]);
  std::vector<BaseMode> sites(L);
  for (int i = 0; i < L; ++i) sites[i] = op.mode_of(i);
  RVec xi(a.r);
  for (const auto& [m, coef] : a.modes) {
    auto [it, fresh] = op.blocks.try_emplace(m);
    if (fresh) it->second.assign(L, Mat::Zero(D, D));
    std::vector<Mat>& band = it->second;
    for (const auto& [kp, fn] : coef)
      for (const auto& e :
           detail::elementary_toeplitz_entries(op.basis, kp.first, kp.second, a.deg))
        for (int i = 0; i < L; ++i) {
          for (int j = 0; j < a.r; ++j)
            xi[j] = op.h * (double(sites[i][j]) + 0.5 * double(m[j]) +
                            0.5 * (th[e.row][j] + th[e.col][j]));
          band[i](e.row, e.col) += fn.eval(xi) * e.weight;
        }
  }
  return op;
}

inline MixedOperator mixed_axpy(cplx c, const MixedOperator& x, const MixedOperator& y) {
  require(x.r == y.r && x.K == y.K && x.p == y.p && x.fdim() == y.fdim(),
          "mixed_axpy: operand mismatch");
  MixedOperator out = y;
  const int L = out.lattice(), D = out.fdim();
  for (const auto& [m, band] : x.blocks) {
    auto [it, fresh] = out.blocks.try_emplace(m);
    if (fresh) it->second.assign(L, Mat::Zero(D, D));
    for (int i = 0; i < L; ++i) it->second[i] += c * band[i];
  }
  return out;
}

// Exact banded product; entries are reliable on columns whose chain
// k -> k+mb -> k+mb+ma stays inside the lattice.
inline MixedOperator mixed_product(const MixedOperator& a, const MixedOperator& b) {
  require(a.r == b.r && a.K == b.K && a.p == b.p && a.fdim() == b.fdim(),
          "mixed_product: operand mismatch");
  MixedOperator out{a.r, a.n, a.p, a.K, a.h, a.twist, a.basis, {}};
  const int L = out.lattice(), D = out.fdim();
  for (const auto& [ma, banda] : a.blocks)
    for (const auto& [mb, bandb] : b.blocks) {
      BaseMode m(ma);
      for (int j = 0; j < a.r; ++j) m[j] += mb[j];
      const int off = out.band_offset(mb);
      auto [it, fresh] = out.blocks.try_emplace(m);
      if (fresh) it->second.assign(L, Mat::Zero(D, D));
      for (int i = 0; i < L; ++i)
        if (out.target_in_lattice(i, mb))
          it->second[i].noalias() += banda[i + off] * bandb[i];
    }
  return out;
}

// Operator norm of the compression to lattice sites |k|_inf <= Kw.
inline double windowed_norm(const MixedOperator& op, int Kw) {
  require(Kw >= 0 && Kw <= op.K, "windowed_norm: window exceeds the lattice");
  const int L = op.lattice(), D = op.fdim();
  auto project = [&](Vec v) {
    for (int i = 0; i < L; ++i) {
      int stride = 1;
      for (int j = 0; j < op.r; ++j) {
        if (std::abs((i / stride) % op.side() - op.K) > Kw) {
          v.segment(i * D, D).setZero();
          break;
        }
        stride *= op.side();
      }
    }
    return v;
  };
  return operator_norm_matfree(
      op.dim(), [&](const Vec& v) { return project(op.apply(project(v))); },
      [&](const Vec& v) { return project(op.apply_adjoint(project(v))); });
}

inline double mixed_adjoint_residual(const MixedSymbol& a, int p, int K,
                                     const Twist& tw) {
  const MixedOperator lhs = mixed_op(a, p, K, tw).adjoint();
  const MixedOperator rhs = mixed_op(a.conjugate(), p, K, tw);
  const MixedOperator diff = mixed_axpy(-1.0, rhs, lhs);
  return operator_norm_matfree(
      diff.dim(), [&](const Vec& v) { return diff.apply(v); },
      [&](const Vec& v) { return diff.apply_adjoint(v); });
}

// || Op(A) Op(B) - sum_{i<=j} p^{-i} Op(A #_i B) || per level on the window
// |k| <= K/2 with K = 4p, so the window watches a fixed xi-range while the
// cutoff boundary stays quarantined.
inline std::vector<double> mixed_product_residual(const MixedSymbol& a,
                                                  const MixedSymbol& b,
                                                  const std::vector<int>& p_list,
                                                  int j) {
  require(j == 0 || j == 1, "mixed_product_residual: j must be 0 or 1");
  std::vector<double> out;
  out.reserve(p_list.size());
  const MixedSymbol m0 = a * b;
  const MixedSymbol m1 = (j >= 1) ? mixed_moyal1(a, b) : MixedSymbol{a.r, a.n, 0, 0, {}};
  const Twist tw = Twist::zero(a.r, a.n);
  for (int p : p_list) {
    const int K = std::max(16, 4 * p);
    MixedOperator res =
        mixed_product(mixed_op(a, p, K, tw), mixed_op(b, p, K, tw));
    res = mixed_axpy(-1.0, mixed_op(m0, p, K, tw), res);
    if (j >= 1) res = mixed_axpy(-1.0 / p, mixed_op(m1, p, K, tw), res);
    out.push_back(windowed_norm(res, K / 2));
  }
  return out;
}

// || [Op(A), Op(B)] - (ip)^{-1} Op({A, B}) || on the same window; the bracket
// carries both the canonical base part and the fiberwise Fubini-Study part.
inline std::vector<double> mixed_commutator_residual(const MixedSymbol& a,
                                                     const MixedSymbol& b,
                                                     const std::vector<int>& p_list) {
  std::vector<double> out;
  out.reserve(p_list.size());
  const MixedSymbol br = mixed_poisson_bracket(a, b);
  const Twist tw = Twist::zero(a.r, a.n);
  for (int p : p_list) {
    const int K = std::max(16, 4 * p);
    const MixedOperator qa = mixed_op(a, p, K, tw);
    const MixedOperator qb = mixed_op(b, p, K, tw);
    MixedOperator res = mixed_product(qa, qb);
    res = mixed_axpy(-1.0, mixed_product(qb, qa), res);
    res = mixed_axpy(iu / double(p), mixed_op(br, p, K, tw), res);
    out.push_back(windowed_norm(res, K / 2));
  }
  return out;
}

// |(2 pi / p)^r / D Tr Op_p(A) - int A dv| via direct lattice sums: only the
// zero mode and the diagonal fiber pairs contribute, and the sum is cut off
// at a radius certified by doubling.
inline std::vector<double> mixed_trace_residual(const MixedSymbol& a,
                                                const std::vector<int>& p_list,
                                                const Twist& tw) {
  require(tw.r == a.r && tw.n == a.n, "mixed_trace_residual: twist shape mismatch");
  const cplx integral = phase_space_integral(a);
  const auto it = a.modes.find(BaseMode(a.r, 0));
  std::vector<double> out;
  out.reserve(p_list.size());
  for (int p : p_list) {
    const double h = 1.0 / p;
    const FiberBasis basis = enumerate_basis(a.n, p);
    const int D = basis.dim();
    const double scale = std::pow(2.0 * pi * h, a.r) / D;
    cplx sums[2] = {0.0, 0.0};
    if (it != a.modes.end()) {
      std::vector<RVec> th(D);
      for (int i = 0; i < D; ++i) th[i] = tw.theta(basis.indices[i]);
      // diagonal weights per coefficient: only gamma == delta pairs survive
      std::vector<std::pair<const XiFn*, std::vector<detail::PairEntry>>> diag;
      for (const auto& [kp, fn] : it->second) {
        if (kp.first != kp.second) continue;
        diag.push_back({&fn, detail::elementary_toeplitz_entries(
                                 basis, kp.first, kp.second, a.deg)});
      }
      RVec xi(a.r);
      for (int pass = 0; pass < 2; ++pass) {
        const int Kc = 12 * p * (pass + 1);
        BaseMode k(a.r, -Kc);
        for (;;) {
          for (const auto& [fn, entries] : diag)
            for (const auto& e : entries) {
              for (int j = 0; j < a.r; ++j) xi[j] = h * (k[j] + th[e.col][j]);
              sums[pass] += fn->eval(xi) * e.weight;
            }
          int j = 0;
          while (j < a.r && ++k[j] > Kc) k[j++] = -Kc;
          if (j == a.r) break;
        }
      }
      certify(std::abs(sums[1] - sums[0]) * scale <=
                  1e-12 * std::max(1.0, std::abs(integral)),
              "mixed_trace_residual: lattice tail not negligible at the cutoff");
    }
    out.push_back(std::abs(scale * sums[1] - integral));
  }
  return out;
}

inline std::vector<double> mixed_trace_residual(const MixedSymbol& a,
                                                const std::vector<int>& p_list) {
  return mixed_trace_residual(a, p_list, Twist::zero(a.r, a.n));
}

}  // namespace qelab
