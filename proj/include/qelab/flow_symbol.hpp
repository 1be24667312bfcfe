// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/spectral.hpp"

namespace qelab {

// Chebyshev interpolant on [-L, L], the coefficient family used for flowed
// symbols whose xi-dependence has no closed form.  Evaluation-only: the fit
// window is a hard domain and there is no line integral.
class Cheb1DFactor : public XiFactor {
 public:
  Cheb1DFactor(double halfwidth, std::vector<cplx> coef)
      : L_(halfwidth), coef_(std::move(coef)) {
    require(L_ > 0.0 && !coef_.empty(), "Cheb1DFactor: bad construction");
  }

  cplx eval(double t) const override {
    const double y = t / L_;
    require(std::abs(y) <= 1.0 + 1e-9, "Cheb1DFactor: evaluation outside the fit window");
    cplx b1 = 0.0, b2 = 0.0;
    for (size_t k = coef_.size(); k-- > 1;) {
      const cplx b0 = 2.0 * y * b1 - b2 + coef_[k];
      b2 = b1;
      b1 = b0;
    }
    return y * b1 - b2 + coef_[0];
  }

  std::shared_ptr<const XiFactor> deriv() const override {
    const int N = int(coef_.size()) - 1;
    std::vector<cplx> d(std::max(N, 1) + 1, 0.0);
    cplx next = 0.0, next2 = 0.0;  // d_{k+1}, d_{k+2}
    for (int k = N; k >= 1; --k) {
      d[k - 1] = next2 + 2.0 * k * coef_[k];
      next2 = next;
      next = d[k - 1];
    }
    d[0] *= 0.5;
    for (cplx& c : d) c /= L_;
    d.pop_back();
    if (d.empty()) d.push_back(0.0);
    return std::make_shared<Cheb1DFactor>(L_, std::move(d));
  }

  std::shared_ptr<const XiFactor> conjugate() const override {
    std::vector<cplx> c(coef_.size());
    for (size_t k = 0; k < coef_.size(); ++k) c[k] = std::conj(coef_[k]);
    return std::make_shared<Cheb1DFactor>(L_, std::move(c));
  }

  cplx integral() const override {
    require(false, "Cheb1DFactor: windowed interpolant has no line integral");
    return 0.0;
  }

  double halfwidth() const { return L_; }
  const std::vector<cplx>& coefficients() const { return coef_; }

 private:
  double L_;
  std::vector<cplx> coef_;
};

namespace detail {

// L^2(nu) projection onto fiber bidegree (D, D) through the closed-form
// monomial Gram matrix and an exact quadrature for the data integrals.
struct FiberProjector {
  int n = 1, D = 0, M = 1;
  std::vector<std::pair<MultiIndex, MultiIndex>> pairs;
  Eigen::LDLT<Mat> gram;
  QuadratureRule rule;
  Mat proj;  // (pair, node) data-integral weights

  FiberProjector(int n_, int D_) : n(n_), D(D_), rule(fubini_study_rule(n_, 4 * D_)) {
    const auto mis = enumerate_multi_indices(D, n + 1);
    for (const auto& g : mis)
      for (const auto& d : mis) pairs.emplace_back(g, d);
    M = int(pairs.size());
    Mat G(M, M);
    const double lg_tail = std::lgamma(n + 2.0 * D + 1.0) - std::lgamma(n + 1.0);
    for (int j = 0; j < M; ++j)
      for (int k = 0; k < M; ++k) {
        MultiIndex s = pairs[k].first, t = pairs[j].first;
        bool match = true;
        for (int i = 0; i <= n; ++i) {
          s[i] += pairs[j].second[i];
          t[i] += pairs[k].second[i];
          match = match && s[i] == t[i];
        }
        G(j, k) = match ? std::exp(mi_log_factorial(s) - lg_tail) : 0.0;
      }
    gram.compute(G);
    proj.resize(M, int(rule.nodes.size()));
    for (int j = 0; j < M; ++j)
      for (size_t q = 0; q < rule.nodes.size(); ++q)
        proj(j, int(q)) =
            rule.weights[q] *
            std::conj(rule.nodes[q].monomial(pairs[j].first, pairs[j].second));
  }

  // coefficients of the projection from point values at the rule nodes
  Vec coefficients(const Vec& values) const {
    const Vec b = proj * values;
    const Vec c = gram.solve(b);
    certify((gram.reconstructedMatrix() * c - b).norm() <= 1e-9 * (b.norm() + 1e-12),
            "FiberProjector: Gram solve lost accuracy");
    return c;
  }
};

struct ResampleConfig {
  int nx = 16;         // x samples per dimension (power of two not required)
  int keep_mode = 6;   // Fourier modes kept per dimension
  int nq = 56;         // Chebyshev nodes in xi
  int keep_cheb = 46;  // Chebyshev coefficients kept
  double L = 2.0;      // xi half-width of the interpolation window
  int extra_deg = 4;   // fiber bidegree headroom over the input symbol
  double tail_tol = 1e-7;
  double spot_tol = 1e-6;
  double ode_tol = 1e-11;
};

// Projects grid samples of a scalar function on (torus) x R x CP^1 onto a
// MixedSymbol with Fourier / Chebyshev / fiber-bidegree truncation, each leg
// certified: discarded tails against tail_tol and the assembled symbol
// against held-out samples of the same function.
template <class Sampler>
inline MixedSymbol project_sampled_symbol(const Sampler& sample, int n, int D,
                                          const ResampleConfig& cfg,
                                          std::uint64_t spot_seed) {
  const FiberProjector fib(n, D);
  const int nw = int(fib.rule.nodes.size());
  const int nx = cfg.nx, nq = cfg.nq, M = fib.M;

  std::vector<double> xi_nodes(nq);
  for (int q = 0; q < nq; ++q) xi_nodes[q] = cfg.L * std::cos(pi * (q + 0.5) / nq);

  // fiber-projected coefficients on the (x, xi) grid
  std::vector<Mat> cgrid(nx, Mat(nq, M));
  double scale = 0.0;
  for (int s = 0; s < nx; ++s) {
    const double x = 2.0 * pi * s / nx;
    for (int q = 0; q < nq; ++q) {
      Vec values(nw);
      for (int t = 0; t < nw; ++t) {
        values[t] = sample(x, xi_nodes[q], fib.rule.nodes[t]);
        scale = std::max(scale, std::abs(values[t]));
      }
      cgrid[s].row(q) = fib.coefficients(values).transpose();
    }
  }
  const double floor = cfg.tail_tol * std::max(scale, 1e-3);

  // Fourier transform in x; modes beyond keep_mode must carry no mass
  const int mmax = nx / 2;
  std::vector<Mat> cmode;  // index m + keep_mode
  for (int m = -mmax; m < mmax; ++m) {
    Mat acc = Mat::Zero(nq, M);
    for (int s = 0; s < nx; ++s)
      acc += std::exp(-iu * (2.0 * pi * m * s / double(nx))) * cgrid[s];
    acc /= double(nx);
    if (std::abs(m) > cfg.keep_mode) {
      certify(acc.cwiseAbs().maxCoeff() <= floor,
              "project_sampled_symbol: x-Fourier tail above certification tolerance");
    } else {
      if (int(cmode.size()) == 0) cmode.resize(2 * cfg.keep_mode + 1);
      cmode[m + cfg.keep_mode] = std::move(acc);
    }
  }

  // Chebyshev transform in xi per (mode, fiber pair); certify the tail
  MixedSymbol out{1, n, D, 0, {}};
  for (int m = -cfg.keep_mode; m <= cfg.keep_mode; ++m) {
    const Mat& block = cmode[m + cfg.keep_mode];
    for (int j = 0; j < M; ++j) {
      std::vector<cplx> a(nq, 0.0);
      for (int k = 0; k < nq; ++k) {
        cplx sum = 0.0;
        for (int q = 0; q < nq; ++q)
          sum += block(q, j) * std::cos(k * pi * (q + 0.5) / nq);
        a[k] = sum * ((k == 0) ? 1.0 : 2.0) / double(nq);
      }
      double head = 0.0, tail = 0.0;
      for (int k = 0; k < nq; ++k)
        (k < cfg.keep_cheb ? head : tail) = std::max(k < cfg.keep_cheb ? head : tail,
                                                     std::abs(a[k]));
      certify(tail <= floor,
              "project_sampled_symbol: Chebyshev tail above certification tolerance");
      if (head <= 1e-12 * std::max(scale, 1e-3)) continue;
      a.resize(cfg.keep_cheb);
      const XiFn fn{1, {XiTerm{1.0, {std::make_shared<Cheb1DFactor>(cfg.L, std::move(a))}}}};
      mixed_accum(out, BaseMode{m}, fib.pairs[j].first, fib.pairs[j].second, fn);
    }
  }

  // master certificate: held-out samples against the assembled symbol
  auto rng = make_rng(spot_seed);
  std::uniform_real_distribution<double> ux(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> uxi(-0.8 * cfg.L, 0.8 * cfg.L);
  for (int trial = 0; trial < 12; ++trial) {
    RVec x(1), xi(1);
    x[0] = ux(rng);
    xi[0] = uxi(rng);
    const FiberPoint w = random_fiber_point(n, rng);
    const cplx direct = sample(x[0], xi[0], w);
    certify(std::abs(out.eval(x, xi, w) - direct) <=
                cfg.spot_tol * std::max(scale, 1e-1),
            "project_sampled_symbol: held-out sample certificate failed");
  }
  return out;
}

}  // namespace detail

// value of A at the time-t image of (x, xi, w) under the classical flow
inline cplx flow_endpoint_value(const MixedSymbol& A, const TorusFlow& flow, double x,
                                double xi, const FiberPoint& w, double t,
                                double ode_tol = 1e-11) {
  RVec xv(1), xiv(1);
  xv[0] = x;
  xiv[0] = xi;
  if (t == 0.0) return A.eval(xv, xiv, w);
  OdeOptions opt;
  opt.rel_tol = ode_tol;
  opt.abs_tol = ode_tol * 1e-2;
  const Eigen::VectorXd y =
      integrate_ode(flow.as_ode(), flow.pack(xv, xiv, w.w), 0.0, t, opt);
  RVec x1, xi1;
  Vec w1;
  flow.unpack(y, x1, xi1, w1);
  return A.eval(x1, xi1, FiberPoint(w1));
}

// (1/t0) int_0^t0 A(flow_s(x, xi, w)) ds through one augmented integration
inline cplx flow_average_value(const MixedSymbol& A, const TorusFlow& flow, double x,
                               double xi, const FiberPoint& w, double t0,
                               double ode_tol = 1e-11) {
  RVec xv(1), xiv(1);
  xv[0] = x;
  xiv[0] = xi;
  require(t0 > 0.0, "flow_average_value: need t0 > 0");
  const int N = flow.state_size();
  Eigen::VectorXd y0(N + 2);
  y0.head(N) = flow.pack(xv, xiv, w.w);
  y0[N] = 0.0;
  y0[N + 1] = 0.0;
  Eigen::VectorXd scratch(N);
  auto f = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(N + 2);
    flow.rhs(y.head(N), scratch);
    dy.head(N) = scratch;
    RVec x1, xi1;
    Vec w1;
    flow.unpack(y.head(N), x1, xi1, w1);
    const cplx v = A.eval(x1, xi1, FiberPoint(w1));
    dy[N] = v.real();
    dy[N + 1] = v.imag();
  };
  OdeOptions opt;
  opt.rel_tol = ode_tol;
  opt.abs_tol = ode_tol * 1e-2;
  const Eigen::VectorXd y = integrate_ode(f, y0, 0.0, t0, opt);
  return cplx(y[N], y[N + 1]) / t0;
}

// A composed with the time-t classical flow, re-expanded as a MixedSymbol.
// The base trajectory couples to the fiber moment, so fiber bidegree is not
// conserved for t != 0; the projection degree gets headroom over deg(A) and
// every truncation is certified.  t = 0 is the identity flow and returns A.
inline MixedSymbol resample_flowed_symbol(const MixedSymbol& A,
                                          const HamiltonianSpec& hs, double t,
                                          const detail::ResampleConfig& cfg = {}) {
  require(A.r == hs.r && A.n == hs.n, "resample_flowed_symbol: dimension mismatch");
  require(hs.r == 1 && hs.n == 1,
          "resample_flowed_symbol: exact fiber quadrature needs r = 1, n = 1");
  if (t == 0.0) return A;
  const TorusFlow flow(hs);
  const int D = A.deg + (hs.perts.empty() ? 0 : cfg.extra_deg);
  auto sample = [&](double x, double xi, const FiberPoint& w) {
    return flow_endpoint_value(A, flow, x, xi, w, t, cfg.ode_tol);
  };
  return detail::project_sampled_symbol(sample, hs.n, D, cfg, 0xf10dull + int(1e4 * t));
}

// <A>_t0 = (1/t0) int_0^t0 (A o flow_s) ds as a MixedSymbol, same pipeline
inline MixedSymbol time_average_symbol(const MixedSymbol& A, const HamiltonianSpec& hs,
                                       double t0,
                                       const detail::ResampleConfig& cfg = {}) {
  require(A.r == hs.r && A.n == hs.n, "time_average_symbol: dimension mismatch");
  require(hs.r == 1 && hs.n == 1,
          "time_average_symbol: exact fiber quadrature needs r = 1, n = 1");
  const TorusFlow flow(hs);
  const int D = A.deg + (hs.perts.empty() ? 0 : cfg.extra_deg);
  auto sample = [&](double x, double xi, const FiberPoint& w) {
    return flow_average_value(A, flow, x, xi, w, t0, cfg.ode_tol);
  };
  return detail::project_sampled_symbol(sample, hs.n, D, cfg, 0xaee7ull);
}

// windowed || U_{-t} Op(T_A) U_t - Op(T_{A o flow_t}) || per (p, t).  Dense
// propagators below the dimension threshold, Chebyshev expansions of the
// matrix exponential above it.
inline std::vector<std::vector<double>> egorov_residual(const MixedSymbol& A,
                                                        const HamiltonianSpec& hs,
                                                        const std::vector<int>& p_list,
                                                        const std::vector<double>& t_grid) {
  require(hs.r == 1, "egorov_residual: implemented for r = 1");
  for (double t : t_grid)
    require(t >= 0.0 && t <= 1.0, "egorov_residual: t_grid must lie in [0, 1]");
  const Twist tw = Twist::zero(hs.r, hs.n);
  std::vector<MixedSymbol> flowed;
  flowed.reserve(t_grid.size());
  for (double t : t_grid) flowed.push_back(resample_flowed_symbol(A, hs, t));

  std::vector<std::vector<double>> out;
  for (int p : p_list) {
    const int K = std::min(p, 48);
    const MixedOperator Hop = build_hamiltonian(hs, p, K, tw);
    const MixedOperator OpA = mixed_op(A, p, K, tw);
    const int dim = Hop.dim(), D = Hop.fdim(), L = Hop.lattice();
    const int Kw = K / 2;
    auto project = [&](Vec v) {
      for (int i = 0; i < L; ++i)
        if (std::abs(i % Hop.side() - K) > Kw) v.segment(i * D, D).setZero();
      return v;
    };
    const bool dense = dim <= 700;
    SpectralData sd;
    if (dense) sd = spectral_decompose(Hop, 0.0, 0.0);

    std::vector<double> row;
    for (size_t it = 0; it < t_grid.size(); ++it) {
      const double t = t_grid[it];
      const MixedOperator OpF = mixed_op(flowed[it], p, K, tw);
      double norm = 0.0;
      if (dense) {
        const MixedOperator U = propagator(Hop, sd, t);
        auto fwd = [&](const Vec& v) {
          const Vec pv = project(v);
          return project(Vec(U.apply_adjoint(OpA.apply(U.apply(pv))) - OpF.apply(pv)));
        };
        auto adj = [&](const Vec& v) {
          const Vec pv = project(v);
          return project(
              Vec(U.apply_adjoint(OpA.apply_adjoint(U.apply(pv))) - OpF.apply_adjoint(pv)));
        };
        norm = operator_norm_matfree(dim, fwd, adj, 1e-6, 600);
      } else {
        const ChebPropagator fwdp(Hop, t * p);
        const ChebPropagator bwdp(Hop, -t * p);
        auto fwd = [&](const Vec& v) {
          const Vec pv = project(v);
          return project(Vec(bwdp.apply(OpA.apply(fwdp.apply(pv))) - OpF.apply(pv)));
        };
        auto adj = [&](const Vec& v) {
          const Vec pv = project(v);
          return project(
              Vec(bwdp.apply(OpA.apply_adjoint(fwdp.apply(pv))) - OpF.apply_adjoint(pv)));
        };
        norm = operator_norm_matfree(dim, fwd, adj, 1e-6, 600);
      }
      row.push_back(norm);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace qelab
