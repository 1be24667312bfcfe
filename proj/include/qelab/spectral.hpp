// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/phase_space.hpp"

#ifdef QELAB_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace qelab {

// Eigendecomposition of a mixed operator with per-pair trust certificates.
// Certificates are measured against the UNTRUNCATED lattice operator: the
// entries of the cutoff operator agree with the full one on shared sites, so
// the backward error of an embedded eigenpair is the eigensolver residual
// plus the mass the pair pushes across the cutoff boundary ("leakage").  By
// Hermitian perturbation theory the full operator then has an eigenvalue
// within that backward error, which is a stronger statement than re-running
// at doubled K.
struct SpectralData {
  int p = 1, K = 1;
  double h = 1.0;
  double lambda_scale = 1.0;  // eigenvalues times this land in the p^2-scaled convention
  double win_lo = 0.0, win_hi = 0.0;
  Eigen::VectorXd lambda;      // ascending
  Mat vectors;                 // eigenvector columns; empty in the diagonal case
  std::vector<int> diag_site;  // diagonal case: flat index per eigenvalue
  std::vector<char> trusted;
  double scale = 0.0;  // spectral radius estimate for relative tolerances

  bool diagonal() const { return !diag_site.empty(); }

  // eigenvector j applied to v: <u_j, v>
  cplx project(int j, const Vec& v) const {
    if (diagonal()) return v[diag_site[j]];
    return vectors.col(j).dot(v);
  }

  void axpy(int j, cplx c, Vec& out) const {
    if (diagonal())
      out[diag_site[j]] += c;
    else
      out += c * vectors.col(j);
  }
};

namespace detail {

inline double frobenius(const MixedOperator& op) {
  double s = 0.0;
  for (const auto& [m, band] : op.blocks)
    for (const Mat& b : band) s += b.squaredNorm();
  return std::sqrt(s);
}

// Hermiticity defect of the reachable part only; band storage past the
// cutoff boundary feeds leak estimates and has no adjoint counterpart
inline double hermitian_defect(const MixedOperator& op) {
  const MixedOperator diff = mixed_axpy(-1.0, op.adjoint(), op);
  double s = 0.0;
  for (const auto& [m, band] : diff.blocks)
    for (int i = 0; i < int(band.size()); ++i)
      if (diff.target_in_lattice(i, m)) s += band[i].squaredNorm();
  return std::sqrt(s);
}

inline bool exactly_diagonal(const MixedOperator& op) {
  for (const auto& [m, band] : op.blocks) {
    bool zero_mode = true;
    for (int e : m) zero_mode = zero_mode && e == 0;
    for (const Mat& b : band) {
      if (!zero_mode) {
        if (b.cwiseAbs().maxCoeff() != 0.0) return false;
      } else {
        for (int c = 0; c < b.cols(); ++c)
          for (int r = 0; r < b.rows(); ++r)
            if (r != c && b(r, c) != cplx(0.0)) return false;
      }
    }
  }
  return true;
}

// mass an in-lattice vector pushes across the cutoff boundary under op
inline double boundary_leak(const MixedOperator& op, const Vec& u) {
  const int L = op.lattice(), D = op.fdim();
  double s = 0.0;
  for (const auto& [m, band] : op.blocks)
    for (int i = 0; i < L; ++i)
      if (!op.target_in_lattice(i, m)) s += (band[i] * u.segment(i * D, D)).squaredNorm();
  return std::sqrt(s);
}

inline void dense_hermitian_eig(Mat& a, Eigen::VectorXd& w) {
#ifdef QELAB_HAVE_LAPACKE
  const int d = int(a.rows());
  w.resize(d);
  const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', d,
                                  reinterpret_cast<lapack_complex_double*>(a.data()), d,
                                  w.data());
  certify(info == 0, "dense_hermitian_eig: zheevd failed to converge");
#else
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  certify(es.info() == Eigen::Success, "dense_hermitian_eig: solver failed");
  w = es.eigenvalues();
  a = es.eigenvectors();
#endif
}

}  // namespace detail

inline SpectralData spectral_decompose(const MixedOperator& Hop, double win_lo,
                                       double win_hi) {
  const double hnorm = detail::frobenius(Hop);
  certify(detail::hermitian_defect(Hop) <= 1e-10 * std::max(1.0, hnorm),
          "spectral_decompose: operator is not Hermitian");
  SpectralData sd;
  sd.p = Hop.p;
  sd.K = Hop.K;
  sd.h = Hop.h;
  sd.lambda_scale = double(Hop.p) * double(Hop.p);
  sd.win_lo = win_lo;
  sd.win_hi = win_hi;
  const int dim = Hop.dim(), D = Hop.fdim();

  if (detail::exactly_diagonal(Hop)) {
    const auto it = Hop.blocks.find(BaseMode(Hop.r, 0));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    if (it != Hop.blocks.end())
      for (int i = 0; i < Hop.lattice(); ++i)
        for (int f = 0; f < D; ++f) d[i * D + f] = it->second[i](f, f).real();
    std::vector<int> order(dim);
    for (int j = 0; j < dim; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    sd.lambda.resize(dim);
    sd.diag_site = order;
    for (int j = 0; j < dim; ++j) sd.lambda[j] = d[order[j]];
    sd.trusted.assign(dim, 1);  // zero residual, zero leakage
    sd.scale = std::max(std::abs(sd.lambda[0]), std::abs(sd.lambda[dim - 1]));
    return sd;
  }

  Mat a = Hop.to_dense();
  Eigen::VectorXd w;
  detail::dense_hermitian_eig(a, w);
  sd.lambda = w;
  sd.vectors = std::move(a);
  sd.scale = std::max(std::abs(w[0]), std::abs(w[dim - 1]));
  sd.trusted.assign(dim, 0);
  for (int j = 0; j < dim; ++j) {
    if (w[j] < win_lo || w[j] > win_hi) continue;
    const Vec u = sd.vectors.col(j);
    const double res = (Hop.apply(u) - w[j] * u).norm();
    const double leak = detail::boundary_leak(Hop, u);
    certify(res <= 1e-9 * std::max(1.0, sd.scale),
            "spectral_decompose: eigenpair residual too large in the window");
    certify(leak <= 1e-6 * std::max(1.0, sd.scale),
            "spectral_decompose: requested window not trusted at this cutoff");
    sd.trusted[j] = 1;
  }
  return sd;
}

// Schwartz-class test function with an analytic formula.
struct GaussianPhi {
  double amp = 1.0, center = 0.0, width = 1.0;

  double eval(double u) const {
    const double y = (u - center) / width;
    return amp * std::exp(-y * y);
  }

  // sup over the line of |phi^{(j)}| via the Hermite form on a dense grid
  double deriv_sup(int j) const {
    const double span = std::sqrt(2.0 * j + 1.0) + 8.0;
    double best = 0.0;
    const int N = 40000;
    for (int i = 0; i <= N; ++i) {
      const double y = -span + 2.0 * span * i / N;
      double hm1 = 0.0, hm = 1.0;
      for (int m = 0; m < j; ++m) {
        const double next = 2.0 * y * hm - 2.0 * m * hm1;
        hm1 = hm;
        hm = next;
      }
      best = std::max(best, std::abs(hm) * std::exp(-y * y));
    }
    return 1.01 * best * amp / std::pow(width, j);
  }

  // the window outside of which |phi| <= amp * cut
  std::pair<double, double> support(double cut = 1e-13) const {
    const double d = width * std::sqrt(-std::log(cut));
    return {center - d, center + d};
  }
};

// phi(H) as a mixed symbol: Taylor expansion of phi around the kinetic part,
// phi(kin xi^2 + V) = sum_j phi^(j)(kin xi^2) V^j / j!, with the order chosen
// so the uniform remainder bound sup|phi^(J+1)| max|V|^{J+1}/(J+1)! is below
// tol.  Couplings must be xi-free so max|V| is finite.
inline MixedSymbol phi_symbol(const GaussianPhi& phi, const HamiltonianSpec& hs,
                              double tol = 1e-10) {
  require(hs.r == 1, "phi_symbol: implemented for r = 1");
  double vmax = 0.0;
  MixedSymbol V{hs.r, hs.n, 0, 0, {}};
  bool any = false;
  for (const auto& [c, a] : hs.perts) {
    require(c.order == 0, "phi_symbol: xi-dependent coupling not supported");
    double csup = 0.0;
    for (const auto& [m, fn] : c.modes) {
      require(std::abs(fn.eval(RVec::Zero(hs.r)) - fn.eval(RVec::Ones(hs.r))) <= 1e-14,
              "phi_symbol: coupling declared order 0 but varies in xi");
      csup += std::abs(fn.eval(RVec::Zero(hs.r)));
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(a.a / iu));
    vmax += csup * es.eigenvalues().cwiseAbs().maxCoeff() / (2.0 * pi);
    const MixedSymbol term = mixed_from_base(c, hs.n) * mixed_moment(hs.r, a);
    V = any ? V + term : term;
    any = true;
  }

  int J = 0;
  double fact = 1.0;  // (J+1)!
  while (J < 24) {
    fact *= J + 1.0;
    if (any && phi.deriv_sup(J + 1) * std::pow(vmax, J + 1.0) / fact >= tol)
      ++J;
    else
      break;
  }
  certify(J < 24, "phi_symbol: Taylor order exploded; coupling too strong for tol");

  auto head = [&](int j, cplx coeff) {
    return XiFn{1, {XiTerm{1.0, {gauss_of_square(phi.center / hs.kinetic,
                                                 phi.width / hs.kinetic, j,
                                                 coeff * phi.amp)}}}};
  };

  MixedSymbol out = mixed_from_base(base_from_xi(head(0, 1.0)), hs.n);
  if (any) {
    // xi-free couplings make every entry of V a plain constant, so the Taylor
    // powers convolve small coefficient tables; powering the symbol itself
    // would multiply term-list lengths at every order
    using VKey = std::pair<BaseMode, std::pair<MultiIndex, MultiIndex>>;
    std::map<VKey, cplx> pw;
    const RVec xi0 = RVec::Zero(hs.r);
    for (const auto& [bm, coef] : V.modes)
      for (const auto& [k, fn] : coef) pw[{bm, k}] += fn.eval(xi0);
    const std::map<VKey, cplx> vtab = pw;
    double jfact = 1.0;
    for (int j = 1; j <= J; ++j) {
      jfact *= j;
      const XiFn hj = head(j, std::pow(hs.kinetic, -j) / jfact);
      MixedSymbol term{hs.r, hs.n, j, 0, {}};
      for (const auto& [key, v] : pw)
        if (v != 0.0)
          mixed_accum(term, key.first, key.second.first, key.second.second, v * hj);
      out = out + term;
      if (j < J) {
        std::map<VKey, cplx> next;
        for (const auto& [ka, va] : pw)
          for (const auto& [kb, vb] : vtab) {
            BaseMode m = ka.first;
            for (int t = 0; t < hs.r; ++t) m[t] += kb.first[t];
            MultiIndex g = ka.second.first, d = ka.second.second;
            for (size_t t = 0; t < g.size(); ++t) {
              g[t] += kb.second.first[t];
              d[t] += kb.second.second[t];
            }
            next[{m, {g, d}}] += va * vb;
          }
        pw = std::move(next);
      }
    }
  }
  return out;
}

namespace detail {

// index range [j0, j0 + nk) of eigenvalues inside [lo, hi]
inline std::pair<int, int> window_range(const SpectralData& sd, double lo, double hi) {
  int j0 = 0;
  const int dim = int(sd.lambda.size());
  while (j0 < dim && sd.lambda[j0] < lo) ++j0;
  int j1 = j0;
  while (j1 < dim && sd.lambda[j1] <= hi) ++j1;
  return {j0, j1 - j0};
}

// banded block apply on a panel of dense columns
inline Mat mixed_apply_panel(const MixedOperator& op, const Eigen::Ref<const Mat>& v) {
  const int L = op.lattice(), D = op.fdim();
  Mat out = Mat::Zero(v.rows(), v.cols());
  for (const auto& [m, band] : op.blocks) {
    const int off = op.band_offset(m);
    for (int i = 0; i < L; ++i)
      if (op.target_in_lattice(i, m))
        out.middleRows((i + off) * D, D).noalias() +=
            band[i] * v.middleRows(i * D, D);
  }
  return out;
}

// windowed || phi(H) - Op(T_{phi(H),p}) || for one decomposed operator
inline double func_calc_one(const GaussianPhi& phi, const MixedOperator& Hop,
                            const SpectralData& sd, const MixedOperator& OpPhi,
                            double lo, double hi) {
  const auto [j0, nk] = window_range(sd, lo, hi);
  Vec phival(std::max(nk, 1));
  for (int q = 0; q < nk; ++q) phival[q] = phi.eval(sd.lambda[j0 + q]);
  auto phiH = [&](const Vec& v) {
    Vec out = Vec::Zero(v.size());
    if (sd.diagonal()) {
      for (int q = 0; q < nk; ++q) {
        const int site = sd.diag_site[j0 + q];
        out[site] = phival[q] * v[site];
      }
    } else if (nk > 0) {
      const auto Vk = sd.vectors.middleCols(j0, nk);
      out.noalias() = Vk * (Vk.adjoint() * v).cwiseProduct(phival);
    }
    return out;
  };
  const int K = Hop.K, Kw = K / 2, L = Hop.lattice(), D = Hop.fdim();
  auto project = [&](Vec v) {
    for (int i = 0; i < L; ++i)
      if (std::abs(i % Hop.side() - K) > Kw) v.segment(i * D, D).setZero();
    return v;
  };
  auto fwd = [&](const Vec& v) {
    const Vec pv = project(v);
    return project(Vec(phiH(pv) - OpPhi.apply(pv)));
  };
  auto adj = [&](const Vec& v) {
    const Vec pv = project(v);
    return project(Vec(phiH(pv) - OpPhi.apply_adjoint(pv)));
  };
  return operator_norm_matfree(Hop.dim(), fwd, adj, 1e-7, 800);
}

// (2 pi h)^r / D  Tr[phi(H) Op(T_A)] for one decomposed operator
inline cplx weighted_trace_one(const GaussianPhi& phi, const MixedOperator& OpA,
                               const SpectralData& sd, double lo, double hi) {
  const auto [j0, nk] = window_range(sd, lo, hi);
  cplx tr = 0.0;
  if (sd.diagonal()) {
    const int D = OpA.fdim();
    const auto it = OpA.blocks.find(BaseMode(OpA.r, 0));
    for (int q = 0; q < nk; ++q) {
      const int site = sd.diag_site[j0 + q];
      const cplx diag = it == OpA.blocks.end() ? 0.0 : it->second[site / D](site % D, site % D);
      tr += phi.eval(sd.lambda[j0 + q]) * diag;
    }
  } else {
    const int chunk = 512;
    for (int c = 0; c < nk; c += chunk) {
      const int nc = std::min(chunk, nk - c);
      const auto Vk = sd.vectors.middleCols(j0 + c, nc);
      const Mat W = mixed_apply_panel(OpA, Vk);
      for (int q = 0; q < nc; ++q)
        tr += phi.eval(sd.lambda[j0 + c + q]) * Vk.col(q).dot(W.col(q));
    }
  }
  return tr;
}

// sup of the coupling potential over phase space, for integration windows
inline double coupling_sup(const HamiltonianSpec& hs) {
  double vmax = 0.0;
  for (const auto& [c, a] : hs.perts) {
    double csup = 0.0;
    for (const auto& [m, fn] : c.modes) csup += std::abs(fn.eval(RVec::Zero(hs.r)));
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(a.a / iu));
    vmax += csup * es.eigenvalues().cwiseAbs().maxCoeff() / (2.0 * pi);
  }
  return vmax;
}

// int phi(H(z)) A(z) dv by the certified product quadrature; the Gauss grid
// must resolve the sharpest radial feature of phi(H), which narrows like
// width / (2 sqrt(hi)) once the window sits away from xi = 0
inline cplx weighted_symbol_integral(const GaussianPhi& phi, const MixedSymbol& A,
                                     const HamiltonianSpec& hs, double hi) {
  const PotentialEval V(hs);
  const double L = std::sqrt(std::max(hi + coupling_sup(hs), 0.0) / hs.kinetic) + 0.5;
  const double sharp = phi.width / (2.0 * std::sqrt(std::max(hi, phi.width)));
  const int nxi = std::min(640, std::max(32, int(4.0 * pi * L / sharp) + 1));
  return integrate_phase_space(
      [&](const RVec& x, const RVec& xi, const FiberPoint& w) {
        return phi.eval(hs.kinetic * xi.squaredNorm() + V(x, w)) * A.eval(x, xi, w);
      },
      hs.r, hs.n, L, 1e-8, 24, nxi);
}

}  // namespace detail

// windowed || phi(H) - Op(T_{phi(H),p}) || per p
inline std::vector<double> functional_calculus_residual(const GaussianPhi& phi,
                                                        const HamiltonianSpec& hs,
                                                        const std::vector<int>& p_list,
                                                        const Twist& tw, int k_cap = 48) {
  const auto [lo, hi] = phi.support();
  const MixedSymbol sym = phi_symbol(phi, hs);
  std::vector<double> out;
  out.reserve(p_list.size());
  for (int p : p_list) {
    const int K = std::min(p + 8, k_cap);
    const MixedOperator Hop = build_hamiltonian(hs, p, K, tw);
    const SpectralData sd = spectral_decompose(Hop, lo, hi);
    const MixedOperator OpPhi = mixed_op(sym, p, K, tw);
    out.push_back(detail::func_calc_one(phi, Hop, sd, OpPhi, lo, hi));
  }
  return out;
}

// |(2 pi h)^r / D  Tr[phi(H) Op(T_A)] - int phi(H) A dv| per p
inline std::vector<double> local_weyl_law_residual(const GaussianPhi& phi,
                                                   const MixedSymbol& A,
                                                   const HamiltonianSpec& hs,
                                                   const std::vector<int>& p_list,
                                                   const Twist& tw, int k_cap = 48) {
  require(hs.r == A.r && hs.n == A.n, "local_weyl_law_residual: dimension mismatch");
  const auto [lo, hi] = phi.support();
  const cplx rhs = detail::weighted_symbol_integral(phi, A, hs, hi);
  std::vector<double> out;
  out.reserve(p_list.size());
  for (int p : p_list) {
    const int K = std::min(p + 8, k_cap);
    const MixedOperator Hop = build_hamiltonian(hs, p, K, tw);
    const SpectralData sd = spectral_decompose(Hop, lo, hi);
    const MixedOperator OpA = mixed_op(A, p, K, tw);
    const cplx tr = detail::weighted_trace_one(phi, OpA, sd, lo, hi);
    out.push_back(std::abs(std::pow(2.0 * pi * Hop.h, hs.r) / Hop.fdim() * tr - rhs));
  }
  return out;
}

// both spectral residual batteries off a single eigendecomposition per p;
// large p makes the dense solve the dominant cost, so sharing it matters
struct SpectralBatteryResult {
  std::vector<double> func_calc;
  std::vector<double> local_weyl;
};

inline SpectralBatteryResult spectral_battery(const GaussianPhi& phi,
                                              const MixedSymbol& A,
                                              const HamiltonianSpec& hs,
                                              const std::vector<int>& p_list,
                                              const Twist& tw, int k_cap = 48) {
  require(hs.r == A.r && hs.n == A.n, "spectral_battery: dimension mismatch");
  const auto [lo, hi] = phi.support();
  const MixedSymbol sym = phi_symbol(phi, hs);
  const cplx rhs = detail::weighted_symbol_integral(phi, A, hs, hi);
  SpectralBatteryResult out;
  for (int p : p_list) {
    const int K = std::min(p + 8, k_cap);
    const MixedOperator Hop = build_hamiltonian(hs, p, K, tw);
    const SpectralData sd = spectral_decompose(Hop, lo, hi);
    const MixedOperator OpPhi = mixed_op(sym, p, K, tw);
    out.func_calc.push_back(detail::func_calc_one(phi, Hop, sd, OpPhi, lo, hi));
    const MixedOperator OpA = mixed_op(A, p, K, tw);
    const cplx tr = detail::weighted_trace_one(phi, OpA, sd, lo, hi);
    out.local_weyl.push_back(
        std::abs(std::pow(2.0 * pi * Hop.h, hs.r) / Hop.fdim() * tr - rhs));
  }
  return out;
}

// (2 pi h)^r / D #{lambda <= a} over Vol(H^{-1}([0,a])) per p; NaN marks an
// empty window (no states and no volume).
inline std::vector<double> weyl_law_count(const HamiltonianSpec& hs, double a,
                                          const std::vector<int>& p_list,
                                          const Twist& tw, int k_cap = 48) {
  const double vol = sublevel_volume(hs, a);
  std::vector<double> out;
  out.reserve(p_list.size());
  for (int p : p_list) {
    const int K = std::min(p + 8, k_cap);
    const MixedOperator Hop = build_hamiltonian(hs, p, K, tw);
    const SpectralData sd = spectral_decompose(Hop, -1.0, a);
    int count = 0;
    for (int j = 0; j < Hop.dim(); ++j) count += sd.lambda[j] <= a;
    if (count == 0 && vol <= 1e-12) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(std::pow(2.0 * pi * Hop.h, hs.r) / Hop.fdim() * count / vol);
  }
  return out;
}

inline std::vector<double> functional_calculus_residual(const GaussianPhi& phi,
                                                        const HamiltonianSpec& hs,
                                                        const std::vector<int>& p_list) {
  return functional_calculus_residual(phi, hs, p_list, Twist::zero(hs.r, hs.n));
}

inline std::vector<double> local_weyl_law_residual(const GaussianPhi& phi,
                                                   const MixedSymbol& A,
                                                   const HamiltonianSpec& hs,
                                                   const std::vector<int>& p_list) {
  return local_weyl_law_residual(phi, A, hs, p_list, Twist::zero(hs.r, hs.n));
}

inline std::vector<double> weyl_law_count(const HamiltonianSpec& hs, double a,
                                          const std::vector<int>& p_list) {
  return weyl_law_count(hs, a, p_list, Twist::zero(hs.r, hs.n));
}

// U_t = exp(-i t p H) repacked into banded block storage (dense bands).
inline MixedOperator propagator(const MixedOperator& Hop, const SpectralData& sd,
                                double t) {
  const int dim = Hop.dim(), D = Hop.fdim(), L = Hop.lattice();
  Mat U(dim, dim);
  if (sd.diagonal()) {
    U.setZero();
    for (int j = 0; j < dim; ++j)
      U(sd.diag_site[j], sd.diag_site[j]) =
          std::exp(-iu * t * double(sd.p) * sd.lambda[j]);
  } else {
    Mat phase = sd.vectors;
    for (int j = 0; j < dim; ++j)
      phase.col(j) *= std::exp(-iu * t * double(sd.p) * sd.lambda[j]);
    U.noalias() = phase * sd.vectors.adjoint();
  }
  MixedOperator out{Hop.r, Hop.n, Hop.p, Hop.K, Hop.h, Hop.twist, Hop.basis, {}};
  for (int ti = 0; ti < L; ++ti) {
    const BaseMode tm = out.mode_of(ti);
    for (int i = 0; i < L; ++i) {
      BaseMode m = tm;
      const BaseMode im = out.mode_of(i);
      for (int j = 0; j < out.r; ++j) m[j] -= im[j];
      auto [it, fresh] = out.blocks.try_emplace(m);
      if (fresh) it->second.assign(L, Mat::Zero(D, D));
      it->second[i] = U.block(ti * D, i * D, D, D);
    }
  }
  auto rng = make_rng(0x0cea11u);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 2; ++trial) {
    Vec v(dim);
    for (int j = 0; j < dim; ++j) v[j] = cplx(gauss(rng), gauss(rng));
    v.normalize();
    certify((out.apply_adjoint(out.apply(v)) - v).norm() <= 1e-10,
            "propagator: unitarity defect above tolerance");
  }
  return out;
}

inline MixedOperator propagator(const MixedOperator& Hop, double t) {
  return propagator(Hop, spectral_decompose(Hop, 0.0, 0.0), t);
}

// Matrix-free e^{-i tau H} v through a Chebyshev expansion on a Gershgorin
// enclosure of the spectrum; the tail is certified from the coefficients.
class ChebPropagator {
 public:
  ChebPropagator(const MixedOperator& H, double tau, double tol = 1e-11)
      : H_(&H), tau_(tau) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    const int L = H.lattice(), D = H.fdim();
    Eigen::VectorXd center = Eigen::VectorXd::Zero(L * D);
    Eigen::VectorXd radius = Eigen::VectorXd::Zero(L * D);
    for (const auto& [m, band] : H.blocks) {
      bool zero_mode = true;
      for (int e : m) zero_mode = zero_mode && e == 0;
      for (int i = 0; i < L; ++i) {
        if (!H.target_in_lattice(i, m)) continue;
        for (int f = 0; f < D; ++f)
          for (int g = 0; g < D; ++g) {
            const double v = std::abs(band[i](g, f));
            if (zero_mode && f == g)
              center[i * D + f] = band[i](f, f).real();
            else
              radius[i * D + f] += v;
          }
      }
    }
    for (int j = 0; j < L * D; ++j) {
      lo = first ? center[j] - radius[j] : std::min(lo, center[j] - radius[j]);
      hi = first ? center[j] + radius[j] : std::max(hi, center[j] + radius[j]);
      first = false;
    }
    c0_ = 0.5 * (hi + lo);
    c1_ = std::max(0.5 * (hi - lo), 1e-12);
    int N = int(std::ceil(std::abs(tau) * c1_)) + 60;
    for (;;) {
      compute_coefficients(N);
      double tail = 0.0, peak = 0.0;
      for (const cplx& c : coef_) peak = std::max(peak, std::abs(c));
      for (size_t k = coef_.size() - 8; k < coef_.size(); ++k)
        tail = std::max(tail, std::abs(coef_[k]));
      if (tail <= tol * std::max(peak, 1.0)) break;
      N = N * 3 / 2;
      certify(N < 40000, "ChebPropagator: expansion failed to converge");
    }
  }

  int terms() const { return int(coef_.size()); }

  Vec apply(const Vec& v) const {
    // forward Chebyshev recurrence in y = (H - c0)/c1
    Vec tkm1 = v;
    Vec tk = (H_->apply(v) - c0_ * v) / c1_;
    Vec out = coef_[0] * tkm1 + coef_[1] * tk;
    for (size_t k = 2; k < coef_.size(); ++k) {
      Vec tkp1 = 2.0 * (H_->apply(tk) - c0_ * tk) / c1_ - tkm1;
      out += coef_[k] * tkp1;
      tkm1.swap(tk);
      tk.swap(tkp1);
    }
    return out;
  }

 private:
  void compute_coefficients(int N) {
    coef_.assign(N + 1, 0.0);
    const int M = 2 * (N + 1);
    std::vector<cplx> fv(M);
    for (int m = 0; m < M; ++m) {
      const double th = pi * (m + 0.5) / M;
      fv[m] = std::exp(-iu * tau_ * (c0_ + c1_ * std::cos(th)));
    }
    for (int k = 0; k <= N; ++k) {
      cplx s = 0.0;
      for (int m = 0; m < M; ++m) s += fv[m] * std::cos(k * pi * (m + 0.5) / M);
      coef_[k] = s * ((k == 0) ? 1.0 : 2.0) / double(M);
    }
  }

  const MixedOperator* H_;
  double tau_, c0_ = 0.0, c1_ = 1.0;
  std::vector<cplx> coef_;
};

}  // namespace qelab
