// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qelab/fiber_symbol.hpp"

namespace qelab {

// Gauss-Legendre nodes and weights on (0,1) by Golub-Welsch.
inline void gauss_legendre_01(int q, std::vector<double>& x, std::vector<double>& w) {
  require(q >= 1, "gauss_legendre_01: need at least one node");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  x.resize(q);
  w.resize(q);
  for (int k = 0; k < q; ++k) {
    x[k] = 0.5 * (es.eigenvalues()[k] + 1.0);
    const double v0 = es.eigenvectors()(0, k);
    w[k] = v0 * v0;  // weights for unit total mass on (0,1)
  }
}

// Integration nodes on CP^n against the unit-mass Fubini-Study volume.
// For n = 1 the rule is exact on every FiberSymbol of degree <= exact_degree:
// in the radial variable u = |w_0|^2 the volume is uniform on (0,1) and the
// integrand is a polynomial, while the phase rule kills every surviving
// Fourier mode.  For n >= 2 the rule is stratified Monte Carlo in u_0 with a
// declared tolerance; integrate_fiber checks the realized standard error
// against it.
struct QuadratureRule {
  int n = 1;
  std::vector<FiberPoint> nodes;
  std::vector<double> weights;
  int exact_degree = -1;   // n = 1 only
  double mc_tol = 0.0;     // n >= 2 only
  std::vector<int> stratum;  // n >= 2 only, for the error estimate

  bool monte_carlo() const { return exact_degree < 0; }
};

inline QuadratureRule fubini_study_rule(int n, int degree) {
  require(n == 1, "fubini_study_rule: exact rules are implemented for n = 1 only");
  require(degree >= 0, "fubini_study_rule: negative degree");
  QuadratureRule rule;
  rule.n = 1;
  rule.exact_degree = degree;
  const int q = (degree + 2) / 2;
  const int m = degree + 1;
  std::vector<double> xu, wu;
  gauss_legendre_01(q, xu, wu);
  rule.nodes.reserve(q * m);
  rule.weights.reserve(q * m);
  for (int a = 0; a < q; ++a) {
    const double u = xu[a];
    for (int b = 0; b < m; ++b) {
      const double phi = 2.0 * pi * b / m;
      Vec w(2);
      w[0] = std::sqrt(u);
      w[1] = std::sqrt(1.0 - u) * cplx(std::cos(phi), std::sin(phi));
      rule.nodes.emplace_back(std::move(w));
      rule.weights.push_back(wu[a] / m);
    }
  }
  return rule;
}

inline QuadratureRule monte_carlo_rule(int n, int samples, double tol, std::uint64_t seed) {
  require(n >= 2, "monte_carlo_rule: use fubini_study_rule for n = 1");
  require(samples >= 64 && tol > 0.0, "monte_carlo_rule: need samples >= 64 and tol > 0");
  QuadratureRule rule;
  rule.n = n;
  rule.mc_tol = tol;
  const int strata = 16;
  const int per = samples / strata;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss;
  for (int s = 0; s < strata; ++s) {
    for (int i = 0; i < per; ++i) {
      // |w_0|^2 has the Beta(1, n) law; invert its CDF on the stratum slab.
      const double t = (s + unif(rng)) / strata;
      const double u0 = 1.0 - std::pow(1.0 - t, 1.0 / n);
      const double phi = 2.0 * pi * unif(rng);
      Vec g(n);
      for (int j = 0; j < n; ++j) g[j] = cplx(gauss(rng), gauss(rng));
      g *= std::sqrt(std::max(1.0 - u0, 0.0)) / g.norm();
      Vec w(n + 1);
      w[0] = std::sqrt(u0) * cplx(std::cos(phi), std::sin(phi));
      for (int j = 0; j < n; ++j) w[j + 1] = g[j];
      rule.nodes.emplace_back(std::move(w));
      rule.weights.push_back(1.0 / (per * strata));
      rule.stratum.push_back(s);
    }
  }
  return rule;
}

struct FiberIntegral {
  cplx value;
  double std_error = 0.0;  // zero for exact rules
};

inline FiberIntegral integrate_fiber_with_error(const FiberSymbol& f, const QuadratureRule& rule) {
  require(f.n == rule.n, "integrate_fiber: dimension mismatch");
  if (!rule.monte_carlo())
    require(f.deg <= rule.exact_degree,
            "integrate_fiber: rule exactness degree below the symbol degree");
  FiberIntegral out{0.0, 0.0};
  std::vector<cplx> vals(rule.nodes.size());
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    vals[i] = f.eval(rule.nodes[i]);
    out.value += rule.weights[i] * vals[i];
  }
  if (rule.monte_carlo()) {
    const int strata = 16;
    std::vector<double> var(strata, 0.0);
    std::vector<cplx> mean(strata, 0.0);
    std::vector<int> cnt(strata, 0);
    for (size_t i = 0; i < vals.size(); ++i) {
      mean[rule.stratum[i]] += vals[i];
      ++cnt[rule.stratum[i]];
    }
    for (int s = 0; s < strata; ++s) mean[s] /= double(cnt[s]);
    for (size_t i = 0; i < vals.size(); ++i)
      var[rule.stratum[i]] += std::norm(vals[i] - mean[rule.stratum[i]]);
    double se2 = 0.0;
    for (int s = 0; s < strata; ++s)
      se2 += var[s] / std::max(cnt[s] - 1, 1) / cnt[s] / (strata * double(strata));
    out.std_error = std::sqrt(se2);
    certify(out.std_error <= rule.mc_tol,
            "integrate_fiber: Monte Carlo standard error exceeds the declared tolerance");
  }
  return out;
}

inline cplx integrate_fiber(const FiberSymbol& f, const QuadratureRule& rule) {
  return integrate_fiber_with_error(f, rule).value;
}

}  // namespace qelab
