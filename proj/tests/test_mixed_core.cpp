// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "qelab/flow_symbol.hpp"
#include "qelab/phase_space.hpp"
#include "qelab/toeplitz.hpp"
#include "qelab/weyl.hpp"

using namespace qelab;

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

RVec scalar1(double v) { return RVec::Constant(1, v); }

// sin(x_1) g(xi) <mu, a> : the workhorse symbol with every tensor slot active
MixedSymbol sin_gauss_moment(const XiFn& g, const LieElement& a) {
  return mixed_from_base(base_sin(1, 0, g), a.n()) * mixed_moment(1, a);
}

}  // namespace

TEST_CASE("mixed symbols: evaluation, conjugation, realness, promotion") {
  auto rng = make_rng(401);
  const XiFn g = xi_gaussian(1, scalar1(0.2), 0.7);
  const LieElement a = random_lie_element(1, rng);
  const MixedSymbol A = sin_gauss_moment(g, a);
  REQUIRE(A.deg == 1);
  REQUIRE(!A.fiberwise_constant());
  REQUIRE(A.fourier_radius() == 1);
  REQUIRE(mixed_kinetic(1, 1).fiberwise_constant());

  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const RVec x = scalar1(pi * unif(rng));
    const RVec xi = scalar1(unif(rng));
    const FiberPoint w = random_fiber_point(1, rng);

    // evaluation agrees with the factored closed form
    const cplx direct = std::sin(x[0]) * g.eval(xi) * moment_map(a, w);
    REQUIRE(std::abs(A.eval(x, xi, w) - direct) <= 1e-14 * (1.0 + std::abs(direct)));

    // kinetic symbol is |xi|^2
    REQUIRE(std::abs(mixed_kinetic(1, 1).eval(x, xi, w) - xi.squaredNorm()) <= 1e-15);

    // conjugation commutes with evaluation; real builds stay real
    const MixedSymbol B = A + cplx(0.0, 0.4) * mixed_from_base(base_cos(1, 0, g), 1);
    REQUIRE(std::abs(B.conjugate().eval(x, xi, w) - std::conj(B.eval(x, xi, w))) <= 1e-14);

    // degree promotion changes the homogeneous representative, not the values
    const MixedSymbol Ap = A.promote(3);
    REQUIRE(Ap.deg == 3);
    REQUIRE(std::abs(Ap.eval(x, xi, w) - A.eval(x, xi, w)) <= 1e-14 * (1.0 + std::abs(direct)));

    // product evaluates pointwise
    const MixedSymbol P = A * B;
    REQUIRE(std::abs(P.eval(x, xi, w) - A.eval(x, xi, w) * B.eval(x, xi, w)) <=
            1e-13 * (1.0 + std::abs(A.eval(x, xi, w) * B.eval(x, xi, w))));
  }

  REQUIRE(A.is_real());
  REQUIRE(!(iu * A).is_real());
  REQUIRE(hamiltonian_symbol(make_hamiltonian_spec(
              1, 1, 0.8, {{base_cos(1, 0, xi_constant(1, 0.3)), a}})).is_real());
}

TEST_CASE("mixed poisson bracket matches derivatives along the hamiltonian flow") {
  auto rng = make_rng(402);
  const LieElement a1 = random_lie_element(1, rng);
  const LieElement a2 = random_lie_element(1, rng);
  const XiFn lin = xi_constant(1, 0.4) + cplx(0.25) * xi_coordinate(1, 0);
  BaseSymbol clin{1, {}, 1};  // cos(x_1) (0.4 + 0.25 xi), declared order 1
  BaseMode m1(1, 0);
  m1[0] = 1;
  base_accum(clin, m1, cplx(0.5) * lin);
  m1[0] = -1;
  base_accum(clin, m1, cplx(0.5) * lin);
  const HamiltonianSpec hs = make_hamiltonian_spec(
      1, 1, 0.7, {{clin, a1}, {base_sin(1, 0, xi_constant(1, 0.6)), a2}});
  const MixedSymbol H = hamiltonian_symbol(hs);
  const TorusFlow flow(hs);

  const XiFn g = xi_gaussian(1, scalar1(-0.1), 0.8);
  const LieElement b = random_lie_element(1, rng);
  const MixedSymbol B =
      sin_gauss_moment(g, b) + mixed_from_base(base_cos(1, 0, xi_gaussian(1, scalar1(0.4), 0.5)), 1);
  const MixedSymbol br = mixed_poisson_bracket(H, B);

  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double dt = 1e-4;
  for (int trial = 0; trial < 4; ++trial) {
    const double x = pi * unif(rng), xi = unif(rng);
    const FiberPoint w = random_fiber_point(1, rng);
    const cplx lhs = br.eval(scalar1(x), scalar1(xi), w);
    const cplx plus = flow_endpoint_value(B, flow, x, xi, w, dt);
    const cplx minus = flow_endpoint_value(B, flow, x, xi, w, -dt);
    const cplx rhs = (plus - minus) / (2.0 * dt);
    REQUIRE(std::abs(lhs - rhs) <= 5e-7 * (1.0 + std::abs(lhs)));

    // antisymmetry at the same points
    const cplx sym = mixed_poisson_bracket(B, H).eval(scalar1(x), scalar1(xi), w) + lhs;
    REQUIRE(std::abs(sym) <= 1e-13 * (1.0 + std::abs(lhs)));
  }

  // fiber sector closes on the commutator with the fixed 1/(2 pi) normalization
  const MixedSymbol mu1 = mixed_moment(1, a1), mu2 = mixed_moment(1, a2);
  const MixedSymbol fiber_br = mixed_poisson_bracket(mu1, mu2);
  const LieElement comm{a1.a * a2.a - a2.a * a1.a};
  for (int trial = 0; trial < 5; ++trial) {
    const FiberPoint w = random_fiber_point(1, rng);
    const cplx want = moment_map(comm, w) / (2.0 * pi);
    REQUIRE(std::abs(fiber_br.eval(scalar1(0.3), scalar1(0.1), w) - want) <=
            1e-13 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("mixed operators: tensor factorizations against weyl and toeplitz blocks") {
  const int p = 5, K = 6;
  const double h = 1.0 / p;
  const Twist tw0 = Twist::zero(1, 1);
  const XiFn g = xi_gaussian(1, scalar1(0.15), 0.6);
  const RVec angles = (RVec(2) << 0.9, -0.4).finished();
  const LieElement a = lie_diag(angles);
  const FiberBasis basis = enumerate_basis(1, p);
  const int D = basis.dim();
  const Mat idD = Mat::Identity(D, D);

  // fiberwise constant symbols quantize to (base Weyl) x identity, bit for bit
  const BaseSymbol base = base_cos(1, 0, g) + base_from_xi(xi_gaussian(1, scalar1(-0.3), 0.9));
  const Mat weyl = weyl_op(base, h, K, RVec::Zero(1)).to_dense();
  const Mat lifted = mixed_op(mixed_from_base(base, 1), p, K, tw0).to_dense();
  REQUIRE(max_abs_diff(lifted, kron(weyl, idD)) == 0.0);

  // base-constant moment symbols quantize to identity x (fiber Toeplitz)
  const Mat toep = toeplitz_matrix_exact(moment_map_symbol(a), p).entries;
  const Mat momnt = mixed_op(mixed_moment(1, a), p, K, tw0).to_dense();
  const int L = 2 * K + 1;
  REQUIRE(max_abs_diff(momnt, kron(Mat::Identity(L, L), toep)) == 0.0);

  // sin(x_1) <mu, a> lands on the first off-diagonal mode bands as -+ T/(2i)
  const MixedOperator shift =
      mixed_op(sin_gauss_moment(xi_constant(1, 1.0), a), p, K, tw0);
  REQUIRE(shift.blocks.count(BaseMode(1, 1)) == 1);
  REQUIRE(shift.blocks.count(BaseMode(1, -1)) == 1);
  REQUIRE(shift.blocks.count(BaseMode(1, 0)) == 0);
  for (int i = 0; i < L; ++i) {
    REQUIRE(max_abs_diff(shift.blocks.at(BaseMode(1, 1))[i], (-0.5 * iu) * toep) <= 1e-15);
    REQUIRE(max_abs_diff(shift.blocks.at(BaseMode(1, -1))[i], (0.5 * iu) * toep) <= 1e-15);
  }

  // a nonzero flat twist shifts each weight line onto its own weyl lattice
  Eigen::MatrixXd phases(1, 2);
  phases << 0.31, -0.17;
  const Twist tw(1, 1, phases);
  const Mat twisted = mixed_op(mixed_from_base(base, 1), p, K, tw).to_dense();
  for (int al = 0; al < D; ++al) {
    const Mat line = weyl_op(base, h, K, tw.theta(basis.indices[al])).to_dense();
    for (int t = 0; t < L; ++t)
      for (int s = 0; s < L; ++s)
        REQUIRE(std::abs(twisted(t * D + al, s * D + al) - line(t, s)) == 0.0);
  }
  // and keeps distinct weight lines uncoupled for fiberwise constant symbols
  Mat offdiag = twisted;
  for (int t = 0; t < L; ++t)
    for (int s = 0; s < L; ++s)
      for (int al = 0; al < D; ++al) offdiag(t * D + al, s * D + al) = 0.0;
  REQUIRE(offdiag.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mixed operators: hermiticity, adjoints, trace linearity") {
  auto rng = make_rng(403);
  const int p = 4, K = 5;
  const Twist tw0 = Twist::zero(1, 1);
  const LieElement a = random_lie_element(1, rng);
  const XiFn g = xi_gaussian(1, scalar1(0.1), 0.5);
  const MixedSymbol A = sin_gauss_moment(g, a) +
                        mixed_from_base(base_cos(1, 0, xi_gaussian(1, scalar1(0.3), 0.8)), 1);
  REQUIRE(A.is_real());

  // real symbols assemble to exactly hermitian matrices via midpoint evaluation
  const Mat dense = mixed_op(A, p, K, tw0).to_dense();
  REQUIRE(max_abs_diff(dense, dense.adjoint()) == 0.0);
  REQUIRE(mixed_adjoint_residual(A, p, K, tw0) <= 1e-13);

  // adjoint bands implement conjugation of the symbol
  const MixedSymbol C = cplx(0.3, 0.7) * A;
  const Mat cd = mixed_op(C, p, K, tw0).to_dense();
  REQUIRE(max_abs_diff(mixed_op(C, p, K, tw0).adjoint().to_dense(), cd.adjoint()) == 0.0);
  REQUIRE(mixed_adjoint_residual(C, p, K, tw0) <= 1e-13);

  // trace is linear in the symbol
  const MixedSymbol B = mixed_moment(1, random_lie_element(1, rng));
  const cplx ta = mixed_op(A, p, K, tw0).trace();
  const cplx tb = mixed_op(B, p, K, tw0).trace();
  const cplx tc = mixed_op(A + cplx(-2.0, 0.5) * B, p, K, tw0).trace();
  REQUIRE(std::abs(tc - (ta + cplx(-2.0, 0.5) * tb)) <=
          1e-13 * (1.0 + std::abs(ta) + std::abs(tb)));

  // apply and to_dense describe the same operator
  const MixedOperator opc = mixed_op(C, p, K, tw0);
  Vec v = Vec::Zero(opc.dim());
  for (int i = 0; i < opc.dim(); ++i) v[i] = cplx(std::cos(0.3 * i), std::sin(0.1 * i));
  REQUIRE((opc.apply(v) - cd * v).cwiseAbs().maxCoeff() <= 1e-13 * cd.cwiseAbs().maxCoeff());
  REQUIRE((opc.apply_adjoint(v) - cd.adjoint() * v).cwiseAbs().maxCoeff() <=
          1e-13 * cd.cwiseAbs().maxCoeff());
}

TEST_CASE("mixed product and commutator residuals decay at the advertised rates") {
  auto rng = make_rng(404);
  const std::vector<int> p_list{8, 12, 16, 24};
  const std::vector<double> pd{8, 12, 16, 24};
  const LieElement a = random_lie_element(1, rng);
  const LieElement b = random_lie_element(1, rng);
  const XiFn g = xi_gaussian(1, scalar1(0.2), 0.6);
  const XiFn g2 = xi_gaussian(1, scalar1(-0.2), 0.8);

  const MixedSymbol A = sin_gauss_moment(g, a);
  const MixedSymbol B = mixed_from_base(base_cos(1, 0, xi_constant(1, 1.0)), 1) *
                            mixed_moment(1, b) +
                        mixed_from_base(base_from_xi(g2), 1);
  const MixedSymbol Bflat = mixed_from_base(base_cos(1, 0, g2), 1);

  // multiplying by a constant symbol is exact at every level
  const MixedSymbol cst = mixed_from_base(base_from_xi(xi_constant(1, cplx(1.3, -0.2))), 1);
  for (double v : mixed_product_residual(cst, B, p_list, 0)) REQUIRE(v <= 1e-12);
  for (double v : mixed_product_residual(A, cst, p_list, 1)) REQUIRE(v <= 1e-12);

  // leading product defect decays like 1/p
  const SlopeFit s0 = fit_loglog_slope(pd, mixed_product_residual(A, B, p_list, 0));
  REQUIRE(!s0.at_floor);
  REQUIRE(s0.slope <= -0.7);

  // with the first correction and a fiberwise constant factor: 1/p^2
  const SlopeFit s1 = fit_loglog_slope(pd, mixed_product_residual(A, Bflat, p_list, 1));
  REQUIRE(!s1.at_floor);
  REQUIRE(s1.slope <= -1.7);

  // commutator of an operator with itself vanishes identically
  for (double v : mixed_commutator_residual(A, A, p_list)) REQUIRE(v == 0.0);

  // fiberwise constant pair: bracket correction is second order
  const MixedSymbol F1 = mixed_from_base(base_from_xi(g), 1);
  const MixedSymbol F2 = mixed_from_base(base_sin(1, 0, xi_constant(1, 1.0)), 1);
  const SlopeFit sc = fit_loglog_slope(pd, mixed_commutator_residual(F1, F2, p_list));
  REQUIRE(!sc.at_floor);
  REQUIRE(sc.slope <= -1.7);

  // fiber-coupled pair: first order, driven by the curvature term
  const MixedSymbol G1 = mixed_from_base(base_cos(1, 0, xi_constant(1, 1.0)), 1) *
                         mixed_moment(1, a);
  const SlopeFit sf = fit_loglog_slope(pd, mixed_commutator_residual(G1, mixed_moment(1, b), p_list));
  REQUIRE(!sf.at_floor);
  REQUIRE(sf.slope <= -0.7);
}

TEST_CASE("mixed trace comparisons: summation floor, decay demands, linearity") {
  const std::vector<int> p_list{8, 12, 16};
  const RVec angles = (RVec(2) << 0.8, -0.8).finished();
  const LieElement a = lie_diag(angles);
  const XiFn g = xi_gaussian(1, scalar1(0.0), 1.0);

  // gaussian xi profiles hit the lattice summation floor immediately, both
  // for fiberwise constant symbols and for traceless fiber factors
  for (double v : mixed_trace_residual(mixed_from_base(base_from_xi(g), 1), p_list))
    REQUIRE(v <= 1e-12);
  const MixedSymbol Amu = mixed_from_base(base_from_xi(g), 1) * mixed_moment(1, a);
  for (double v : mixed_trace_residual(Amu, p_list)) REQUIRE(v <= 1e-12);
  REQUIRE(fit_loglog_slope({8, 12, 16}, mixed_trace_residual(Amu, p_list)).at_floor);

  // slowly decaying xi coefficients are rejected, not silently truncated
  const MixedSymbol bad =
      mixed_from_base(base_from_xi(xi_coordinate(1, 0) * xi_coordinate(1, 0), 2), 1);
  REQUIRE_THROWS_AS(mixed_trace_residual(bad, {4}), std::runtime_error);

  // twisted traces stay at the floor: the twist only translates each lattice
  Eigen::MatrixXd phases(1, 2);
  phases << 1.0 / std::sqrt(2.0), 0.2;
  const Twist tw(1, 1, phases);
  for (double v : mixed_trace_residual(Amu, p_list, tw)) REQUIRE(v <= 1e-12);

  // shape mismatch is an error
  REQUIRE_THROWS_AS(mixed_trace_residual(Amu, p_list, Twist::zero(2, 1)), std::invalid_argument);
}

TEST_CASE("windowed norms stay below symbol sup bounds across levels") {
  const RVec angles = (RVec(2) << 1.1, -0.6).finished();
  const LieElement a = lie_diag(angles);
  const double mu_sup = angles.cwiseAbs().maxCoeff() / (2.0 * pi);
  const XiFn g = xi_gaussian(1, scalar1(0.3), 0.2);
  const Twist tw0 = Twist::zero(1, 1);

  struct Case {
    MixedSymbol sym;
    double sup;
  };
  const std::vector<Case> battery = {
      {sin_gauss_moment(g, a), mu_sup},
      {mixed_from_base(base_cos(1, 0, xi_constant(1, 1.0)), 1) +
           mixed_from_base(base_from_xi(g), 1),
       2.0},
      {mixed_from_base(base_from_xi(g), 1) * mixed_moment(1, a), mu_sup}};

  const int K = 24;
  for (const Case& c : battery)
    for (int p : {8, 16, 32, 64}) {
      const double nrm = windowed_norm(mixed_op(c.sym, p, K, tw0), K / 2);
      REQUIRE(nrm <= c.sup + 1e-8);
      REQUIRE(nrm > 0.05 * c.sup);  // the window sees a fair share of the symbol
    }

  // the lattice cutoff is certified by doubling: the windowed norm moves by
  // less than one percent when K doubles
  const double n1 = windowed_norm(mixed_op(battery[0].sym, 8, K, tw0), K / 2);
  const double n2 = windowed_norm(mixed_op(battery[0].sym, 8, 2 * K, tw0), K / 2);
  REQUIRE(std::abs(n1 - n2) <= 1e-2 * n1);

  // quantization refuses symbols whose waves leave the band structure
  const MixedSymbol wavy = mixed_from_base(base_wave(BaseMode(1, 5), xi_constant(1, 1.0)), 1);
  REQUIRE_THROWS_AS(mixed_op(wavy, 3, 2, tw0), std::invalid_argument);
  REQUIRE_THROWS_AS(mixed_op(wavy, 3, 4, Twist::zero(2, 1)), std::invalid_argument);
}

TEST_CASE("hamiltonian specs: validation, hermitian assembly, conserved flows") {
  auto rng = make_rng(406);
  const LieElement a1 = random_lie_element(1, rng);
  const LieElement a2 = random_lie_element(1, rng);

  // couplings must be real and of xi-order at most one
  REQUIRE_THROWS_AS(make_hamiltonian_spec(
                        1, 1, 1.0,
                        {{base_from_xi(xi_coordinate(1, 0) * xi_coordinate(1, 0), 2), a1}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      make_hamiltonian_spec(1, 1, 1.0, {{base_wave(BaseMode(1, 1), xi_constant(1, 1.0)), a1}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(make_hamiltonian_spec(1, 1, -0.5, {}), std::invalid_argument);

  const HamiltonianSpec hs = make_hamiltonian_spec(
      1, 1, 0.8,
      {{base_cos(1, 0, xi_constant(1, 0.25)), a1}, {base_sin(1, 0, xi_constant(1, 0.15)), a2}});

  // assembled hamiltonian is hermitian bit for bit
  const Mat hd = build_hamiltonian(hs, 4, 5, Twist::zero(1, 1)).to_dense();
  REQUIRE(max_abs_diff(hd, hd.adjoint()) == 0.0);

  // the flow conserves the fiber norm and the energy
  const TorusFlow flow(hs);
  const MixedSymbol H = hamiltonian_symbol(hs);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const RVec x = scalar1(pi * unif(rng)), xi = scalar1(0.8 * unif(rng));
    const FiberPoint w = random_fiber_point(1, rng);
    const Eigen::VectorXd y1 = integrate_ode(flow.as_ode(), flow.pack(x, xi, w.w), 0.0, 3.0);
    RVec x1, xi1;
    Vec w1;
    flow.unpack(y1, x1, xi1, w1);
    REQUIRE(std::abs(w1.norm() - 1.0) <= 1e-9);
    const cplx e0 = H.eval(x, xi, w);
    const cplx e1 = H.eval(x1, xi1, FiberPoint(w1));
    REQUIRE(std::abs(e1 - e0) <= 1e-8 * (1.0 + std::abs(e0)));
  }

  // closed energy sections: potential evaluator splits H into kinetic + V
  const PotentialEval V(hs);
  for (int trial = 0; trial < 4; ++trial) {
    const RVec x = scalar1(pi * unif(rng)), xi = scalar1(unif(rng));
    const FiberPoint w = random_fiber_point(1, rng);
    const cplx want = H.eval(x, xi, w);
    const double got = V(x, w) + V.kinetic() * xi.squaredNorm();
    REQUIRE(std::abs(want - got) <= 1e-13 * (1.0 + std::abs(want)));
  }
}
