// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "qelab/weyl.hpp"

using namespace qelab;

namespace {

// Simpson oracle for line integrals of decaying factors.
cplx simpson_line(const XiFactorPtr& f, double lim = 12.0, int n = 4096) {
  const double dt = 2.0 * lim / n;
  cplx s = f->eval(-lim) + f->eval(lim);
  for (int i = 1; i < n; ++i) s += f->eval(-lim + i * dt) * (i % 2 ? 4.0 : 2.0);
  return s * dt / 3.0;
}

}  // namespace

TEST_CASE("xi functions: analytic derivatives and closed-form integrals") {
  auto rng = make_rng(61);
  std::normal_distribution<double> gauss;

  // derivative callbacks agree with central differences
  for (int trial = 0; trial < 8; ++trial) {
    const XiFn f = xi_gaussian(2, RVec::Constant(2, 0.3 * trial), 1.0 + 0.2 * trial) *
                   (xi_coordinate(2, 0) + xi_constant(2, cplx(0.4, 0.1)));
    RVec xi(2);
    xi << gauss(rng), gauss(rng);
    for (int dim = 0; dim < 2; ++dim) {
      XiFn d = f;
      for (int ord = 1; ord <= 4; ++ord) {
        d = d.deriv(dim);
        RVec xp = xi, xm = xi;
        const double h = 1e-5;
        xp[dim] += h;
        xm[dim] -= h;
        XiFn prev = f;
        for (int o = 1; o < ord; ++o) prev = prev.deriv(dim);
        const cplx fd = (prev.eval(xp) - prev.eval(xm)) / (2.0 * h);
        REQUIRE(std::abs(d.eval(xi) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
      }
    }
  }

  // closed-form line integrals against Simpson and against exact values
  const XiFactorPtr g = polyexp({1.0}, -1.0);
  REQUIRE(std::abs(g->integral() - std::sqrt(pi)) < 1e-14);
  const XiFactorPtr t2g = polyexp({0.0, 0.0, 1.0}, -1.0);
  REQUIRE(std::abs(t2g->integral() - 0.5 * std::sqrt(pi)) < 1e-14);
  const XiFactorPtr shifted = polyexp({cplx(0.2, 0.1), 0.0, 1.0}, cplx(-0.7, 0.2),
                                      cplx(0.3, -0.4), cplx(0.1, 0.05));
  REQUIRE(std::abs(shifted->integral() - simpson_line(shifted)) < 1e-10);

  // non-decaying factors refuse to integrate
  REQUIRE_THROWS_AS(xi_coordinate(1, 0).integral(), std::runtime_error);
}

TEST_CASE("weyl matrices: frozen entries for the three basic symbols") {
  const int K = 6;
  const double h = 0.125;
  RVec theta(1);
  theta << 0.3;

  // xi_1: diagonal h (k + theta)
  const WeylOperator dxi = weyl_op(base_from_xi(xi_coordinate(1, 0)), h, K, theta);
  const Mat mdxi = dxi.to_dense();
  for (int i = 0; i < dxi.dim(); ++i)
    for (int j = 0; j < dxi.dim(); ++j) {
      const cplx want = (i == j) ? cplx(h * (i - K + theta[0])) : cplx(0.0);
      REQUIRE(std::abs(mdxi(i, j) - want) < 1e-15);
    }

  // e^{i x_1}: pure shift
  const WeylOperator shift =
      weyl_op(base_wave({1}, xi_constant(1, 1.0)), h, K, theta);
  const Mat mshift = shift.to_dense();
  for (int i = 0; i < shift.dim(); ++i)
    for (int j = 0; j < shift.dim(); ++j)
      REQUIRE(std::abs(mshift(i, j) - (i == j + 1 ? 1.0 : 0.0)) < 1e-15);

  // e^{i x_1} xi_1: midpoint entries h (k + theta + 1/2) on the shifted diagonal
  const WeylOperator mixed =
      weyl_op(base_wave({1}, xi_coordinate(1, 0)), h, K, theta);
  const Mat mmixed = mixed.to_dense();
  for (int i = 0; i < mixed.dim(); ++i)
    for (int j = 0; j < mixed.dim(); ++j) {
      const cplx want =
          (i == j + 1) ? cplx(h * (j - K + theta[0] + 0.5)) : cplx(0.0);
      REQUIRE(std::abs(mmixed(i, j) - want) < 1e-15);
    }

  REQUIRE_THROWS_AS(weyl_op(base_from_xi(xi_coordinate(1, 0)), 1.5, K, theta),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(weyl_op(base_wave({9}, xi_constant(1, 1.0)), h, 4, theta),
                    std::invalid_argument);
}

TEST_CASE("moyal terms") {
  auto rng = make_rng(62);
  std::normal_distribution<double> gauss;

  const BaseSymbol a = base_from_xi(xi_coordinate(1, 0));
  const BaseSymbol b = base_sin(1, 0, xi_constant(1, 1.0));

  // A #_1 A = 0
  const BaseSymbol aa = moyal_terms(b, b, 1);
  // A = xi_1, B = sin x_1: A #_1 B = cos(x_1) / (2i)
  const BaseSymbol ab = moyal_terms(a, b, 1);
  const BaseSymbol want = base_cos(1, 0, xi_constant(1, cplx(1.0 / (2.0 * iu))));
  // x-independent pair
  const BaseSymbol cc =
      moyal_terms(base_from_xi(xi_gaussian(1, RVec::Zero(1), 1.0)), a, 1);
  for (int trial = 0; trial < 12; ++trial) {
    RVec x(1), xi(1);
    x << 2.0 * pi * (rng() % 997) / 997.0;
    xi << gauss(rng);
    REQUIRE(std::abs(aa.eval(x, xi)) < 1e-14);
    REQUIRE(std::abs(ab.eval(x, xi) - want.eval(x, xi)) < 1e-14);
    REQUIRE(std::abs(cc.eval(x, xi)) < 1e-14);
    // order 0 is the pointwise product
    REQUIRE(std::abs(moyal_terms(a, b, 0).eval(x, xi) -
                     a.eval(x, xi) * b.eval(x, xi)) < 1e-14);
  }
}

TEST_CASE("composition residuals: exact cases and the h^2 remainder") {
  const std::vector<double> hs{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};

  // A = B = xi_1, j = 0: both sides are the same diagonal
  const BaseSymbol a = base_from_xi(xi_coordinate(1, 0));
  for (double rnorm : weyl_composition_residual(a, a, hs, 0))
    REQUIRE(rnorm < 1e-14);

  // constants compose exactly at every order
  const BaseSymbol c = base_from_xi(xi_constant(1, 2.0));
  const BaseSymbol g = base_sin(1, 0, xi_gaussian(1, RVec::Zero(1), 1.5));
  for (int j : {0, 1})
    for (double rnorm : weyl_composition_residual(c, g, hs, j))
      REQUIRE(rnorm < 1e-14);

  // generic trigonometric pair: j=1 remainder one order down (slope <= -1.7)
  const BaseSymbol b = base_cos(1, 0, xi_coordinate(1, 0) * xi_gaussian(1, RVec::Zero(1), 2.0));
  const auto res1 = weyl_composition_residual(g, b, hs, 1);
  const SlopeFit fit1 = fit_loglog_slope(hs, res1);
  REQUIRE(!fit1.at_floor);
  REQUIRE(fit1.slope >= 1.7);  // decreasing h, so positive slope in h
  const auto res0 = weyl_composition_residual(g, b, hs, 0);
  const SlopeFit fit0 = fit_loglog_slope(hs, res0);
  REQUIRE(fit0.slope >= 0.7);

  // doubling the cutoff leaves the windowed residual essentially unchanged
  const double h = 1.0 / 16;
  const RVec theta = RVec::Zero(1);
  auto windowed_res = [&](int K) {
    WeylOperator res = weyl_product(weyl_op(g, h, K, theta), weyl_op(b, h, K, theta));
    res = weyl_axpy(-1.0, weyl_op(moyal_terms(g, b, 0), h, K, theta), res);
    res = weyl_axpy(-h, weyl_op(moyal_terms(g, b, 1), h, K, theta), res);
    return windowed_norm(res, 32);
  };
  const double r1 = windowed_res(64), r2 = windowed_res(128);
  REQUIRE(std::abs(r1 - r2) <= 0.01 * std::max(r1, r2));
}

TEST_CASE("adjoint residuals vanish") {
  auto rng = make_rng(63);
  std::normal_distribution<double> gauss;

  // real symbol: Hermitian
  BaseSymbol real_sym = base_sin(1, 0, xi_gaussian(1, RVec::Zero(1), 1.0));
  real_sym = real_sym + base_from_xi(xi_coordinate(1, 0));
  REQUIRE(real_sym.is_real());
  REQUIRE(weyl_adjoint_residual(real_sym, 0.25, 12) < 1e-12);
  const WeylOperator op = weyl_op(real_sym, 0.25, 12, RVec::Zero(1));
  REQUIRE(hermiticity_defect(op.to_dense()) < 1e-12);

  // i * real: anti-Hermitian
  const BaseSymbol imag_sym = iu * real_sym;
  REQUIRE(weyl_adjoint_residual(imag_sym, 0.25, 12) < 1e-12);
  const Mat mm = weyl_op(imag_sym, 0.25, 12, RVec::Zero(1)).to_dense();
  REQUIRE((mm + mm.adjoint()).norm() < 1e-12);

  // random complex symbols: Op(A)* = Op(conj A) exactly
  for (int trial = 0; trial < 5; ++trial) {
    BaseSymbol s{1, {}, 0};
    for (int m = -2; m <= 2; ++m)
      base_accum(s, {m},
                 cplx(gauss(rng), gauss(rng)) *
                     xi_gaussian(1, RVec::Constant(1, gauss(rng)), 1.0 + 0.1 * std::abs(m)));
    REQUIRE(weyl_adjoint_residual(s, 0.5, 8) < 1e-13);
  }
}

TEST_CASE("trace formula on the lattice") {
  const std::vector<double> hs{0.5, 0.25, 0.125};

  // Gaussian zero mode: Poisson summation makes the residual invisible
  const BaseSymbol g = base_from_xi(xi_gaussian(1, RVec::Zero(1), 1.0));
  for (double rtr : weyl_trace_residual(g, hs)) REQUIRE(rtr < 1e-12);

  // no zero mode: trace is exactly zero
  const BaseSymbol w = base_wave({1}, xi_gaussian(1, RVec::Zero(1), 1.0));
  for (double rtr : weyl_trace_residual(w, hs)) {
    const double integral = 0.0;
    REQUIRE(rtr == integral);
  }

  // trace linearity at the matrix level
  const WeylOperator op1 = weyl_op(g, 0.25, 64, RVec::Zero(1));
  const WeylOperator op3 = weyl_op(cplx(3.0) * g, 0.25, 64, RVec::Zero(1));
  REQUIRE(std::abs(op3.trace() - 3.0 * op1.trace()) < 1e-13);
}

TEST_CASE("twist covariance: lattice shift and phase conjugation") {
  const int K = 10;
  const double h = 0.3;
  RVec theta(1);
  theta << 0.37;
  BaseSymbol s = base_sin(1, 0, xi_coordinate(1, 0));
  s = s + base_from_xi(xi_gaussian(1, RVec::Zero(1), 2.0));

  const Mat op = weyl_op(s, h, K, theta).to_dense();
  const int d = 2 * K + 1;

  // shift conjugation: S Op(A; theta) S^{-1} = Op(A; theta - e_1) away from
  // the boundary, i.e. conjugating by the lattice shift translates xi by h.
  Mat shift = Mat::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) shift(i + 1, i) = 1.0;
  RVec theta_shift(1);
  theta_shift << theta[0] - 1.0;
  const Mat lhs = shift * op * shift.adjoint();
  const Mat rhs = weyl_op(s, h, K, theta_shift).to_dense();
  for (int i = 2; i + 2 < d; ++i)
    for (int j = 2; j + 2 < d; ++j) REQUIRE(std::abs(lhs(i, j) - rhs(i, j)) < 1e-14);

  // phase conjugation: D_a Op(A) D_a^* = Op(A(x - a, xi)) exactly
  const double aoff = 1.1;
  Mat phase = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) phase(i, i) = std::exp(-iu * double(i - K) * aoff);
  BaseSymbol sx{1, {}, 0};
  for (const auto& [m, fn] : s.modes)
    base_accum(sx, m, std::exp(-iu * double(m[0]) * aoff) * fn);
  const Mat lhs2 = phase * op * phase.adjoint();
  const Mat rhs2 = weyl_op(sx, h, K, theta).to_dense();
  REQUIRE((lhs2 - rhs2).norm() < 1e-12);
}

TEST_CASE("norm boundedness of the order-zero battery") {
  const std::vector<double> hs{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  std::vector<BaseSymbol> battery;
  battery.push_back(base_from_xi(xi_gaussian(1, RVec::Zero(1), 1.0)));
  battery.push_back(base_sin(1, 0, xi_gaussian(1, RVec::Constant(1, 0.5), 1.5)));
  BaseSymbol mixed = base_cos(1, 0, xi_coordinate(1, 0) * xi_gaussian(1, RVec::Zero(1), 1.0));
  mixed = mixed + base_from_xi(xi_constant(1, 0.5));
  battery.push_back(mixed);

  for (const BaseSymbol& s : battery) {
    double worst = 0.0;
    for (double h : hs) {
      const int K = std::max(16, int(std::ceil(4.0 / h)));
      worst = std::max(worst, windowed_norm(weyl_op(s, h, K, RVec::Zero(1)), K / 2));
    }
    // sup |A| over the window is an upper bound up to lower order terms; a
    // fixed multiple of it certifies no blow-up as h decreases
    double sup = 0.0;
    for (double x = 0.0; x < 2.0 * pi; x += 0.05)
      for (double xi = -2.5; xi <= 2.5; xi += 0.05) {
        RVec xv(1), xiv(1);
        xv << x;
        xiv << xi;
        sup = std::max(sup, std::abs(s.eval(xv, xiv)));
      }
    REQUIRE(worst <= 1.3 * sup + 0.1);
  }
}
