// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "qelab/fiber_basis.hpp"
#include "qelab/fiber_quadrature.hpp"
#include "qelab/fiber_symbol.hpp"

namespace qelab {

// Compression of multiplication by a fiber symbol to the holomorphic
// sections, in the orthonormalized monomial frame.
struct ToeplitzMatrix {
  int p = 1;
  Mat entries;
  std::string symbol_tag;  // provenance, informational only
};

namespace detail {

// Nonzero closed-form Toeplitz matrix elements of a single monomial density
// w^gamma conj(w)^delta / |w|^(2 deg) in the orthonormalized degree-p frame:
// row alpha = gamma + beta - delta per column beta, weight from the monomial
// moment n! (gamma + beta)! / (n + deg + p)! and the frame norms.
struct PairEntry {
  int row, col;
  double weight;
};

inline std::vector<PairEntry> elementary_toeplitz_entries(const FiberBasis& basis,
                                                          const MultiIndex& gamma,
                                                          const MultiIndex& delta,
                                                          int deg) {
  const int len = basis.n + 1;
  const int dim = basis.dim();
  std::map<MultiIndex, int> pos;
  for (int i = 0; i < dim; ++i) pos[basis.indices[i]] = i;
  const double lg_head =
      std::lgamma(basis.n + 1.0) - std::lgamma(basis.n + deg + basis.p + 1.0);
  std::vector<PairEntry> out;
  for (int b = 0; b < dim; ++b) {
    const MultiIndex& beta = basis.indices[b];
    MultiIndex alpha(len);
    bool ok = true;
    for (int j = 0; j < len; ++j) {
      alpha[j] = gamma[j] + beta[j] - delta[j];
      if (alpha[j] < 0) { ok = false; break; }
    }
    if (!ok) continue;
    const auto it = pos.find(alpha);
    if (it == pos.end()) continue;
    MultiIndex full = gamma;
    for (int j = 0; j < len; ++j) full[j] += beta[j];
    const double moment = std::exp(lg_head + mi_log_factorial(full));
    out.push_back({it->second, b,
                   moment / std::sqrt(basis.norms[it->second] * basis.norms[b])});
  }
  return out;
}

}  // namespace detail

// Closed-form assembly: the (alpha, beta) entry is a sum of monomial
// moments, one per table entry of f with gamma + beta = delta + alpha.
// Exact to rounding, no quadrature involved.
inline ToeplitzMatrix toeplitz_matrix_exact(const FiberSymbol& f, int p,
                                            std::string tag = {}) {
  const FiberBasis basis = enumerate_basis(f.n, p);
  Mat m = Mat::Zero(basis.dim(), basis.dim());
  for (const auto& [k, c] : f.table)
    for (const auto& e : detail::elementary_toeplitz_entries(basis, k.first, k.second, f.deg))
      m(e.row, e.col) += c * e.weight;
  return {p, std::move(m), std::move(tag)};
}

// Quadrature assembly, the definitional path.  Kept as the reference the
// closed form is checked against; the exactness precondition mirrors the
// entry degrees (symbol degree + p on each side) with a safety margin.
inline ToeplitzMatrix toeplitz_matrix(const FiberSymbol& f, int p,
                                      const QuadratureRule& rule,
                                      std::string tag = {}) {
  require(f.n == rule.n, "toeplitz_matrix: dimension mismatch");
  if (!rule.monte_carlo())
    require(rule.exact_degree >= f.deg + 2 * p,
            "toeplitz_matrix: rule exactness degree below deg(f) + 2p");
  const FiberBasis basis = enumerate_basis(f.n, p);
  const int dim = basis.dim();
  const int m = static_cast<int>(rule.nodes.size());
  Mat sections(m, dim);
  Vec fw(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < dim; ++j) sections(i, j) = basis.value(j, rule.nodes[i]);
    fw[i] = rule.weights[i] * f.eval(rule.nodes[i]);
  }
  Mat entries = sections.adjoint() * fw.asDiagonal() * sections;
  return {p, std::move(entries), std::move(tag)};
}

inline QuadratureRule rule_for_toeplitz(const FiberSymbol& f, int p) {
  return fubini_study_rule(f.n, f.deg + 2 * p + 4);
}

// Matrix of p^{-1} L_a on the degree-p sections in the orthonormalized
// monomial frame, where L_a s = d/dt s(e^{ta} w) at t = 0.  First order in
// the coordinates, so the action on monomials is exact:
//   z^alpha -> sum_{j,k} a_{jk} alpha_j z^{alpha - e_j + e_k}.
// Note [L_a, L_b] = -p^{-1} L_{[a,b]}: the map a -> L_a reverses brackets
// because the group acts on arguments, not values.
struct LieDerivativeMatrix {
  int p = 1;
  Mat entries;
};

inline LieDerivativeMatrix lie_derivative_matrix(const LieElement& a, int p) {
  const int n = a.n();
  const FiberBasis basis = enumerate_basis(n, p);
  const int dim = basis.dim();
  std::map<MultiIndex, int> pos;
  for (int i = 0; i < dim; ++i) pos[basis.indices[i]] = i;
  Mat m = Mat::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const MultiIndex& alpha = basis.indices[col];
    for (int j = 0; j <= n; ++j) {
      if (alpha[j] == 0) continue;
      for (int k = 0; k <= n; ++k) {
        if (a.a(j, k) == cplx(0.0)) continue;
        if (j == k) {
          m(col, col) += a.a(j, j) * (double(alpha[j]) / p);
          continue;
        }
        MultiIndex beta = alpha;
        --beta[j];
        ++beta[k];
        // orthonormal frame: multiply by ||z^beta|| / ||z^alpha||
        const double scale = std::sqrt(double(alpha[j]) * (alpha[k] + 1.0));
        m(pos.at(beta), col) += a.a(j, k) * (scale / p);
      }
    }
  }
  return {p, std::move(m)};
}

// Residual of the exact finite-p identity
//   p^{-1} L_a = -2 pi i T_{<mu_L + p^{-1} mu_det, a>, p},
// the calibration target that pins the moment map sign and scale.
inline double kostant_residual(const LieElement& a, int p) {
  const FiberSymbol sym =
      cplx(1.0 + (a.n() + 1.0) / p) * moment_map_symbol(a);
  const Mat lhs = lie_derivative_matrix(a, p).entries;
  const Mat rhs = -2.0 * pi * iu * toeplitz_matrix_exact(sym, p).entries;
  return operator_norm(lhs - rhs);
}

// Star-product residuals per p.  k = 0 compares T_f T_g with T_{fg};
// k = 1 compares the commutator with the leading Poisson bracket term,
//   || [T_f, T_g] - (1 / i p) T_{{f,g}} ||.
inline std::vector<double> toeplitz_product_residual(const FiberSymbol& f,
                                                     const FiberSymbol& g,
                                                     const std::vector<int>& p_list,
                                                     int k) {
  require(k == 0 || k == 1, "toeplitz_product_residual: k must be 0 or 1");
  std::vector<double> out;
  out.reserve(p_list.size());
  const FiberSymbol fg = f * g;
  const FiberSymbol br = (k == 1) ? poisson_bracket(f, g) : fg;
  for (int p : p_list) {
    const Mat tf = toeplitz_matrix_exact(f, p).entries;
    const Mat tg = toeplitz_matrix_exact(g, p).entries;
    if (k == 0) {
      out.push_back(operator_norm(tf * tg - toeplitz_matrix_exact(fg, p).entries));
    } else {
      const Mat lhs = tf * tg - tg * tf;
      const Mat rhs = toeplitz_matrix_exact(br, p).entries / (iu * double(p));
      out.push_back(operator_norm(lhs - rhs));
    }
  }
  return out;
}

inline std::vector<double> toeplitz_trace_residual(const FiberSymbol& f,
                                                   const std::vector<int>& p_list) {
  std::vector<double> out;
  out.reserve(p_list.size());
  const cplx integral = exact_fiber_integral(f);
  for (int p : p_list) {
    const Mat t = toeplitz_matrix_exact(f, p).entries;
    out.push_back(std::abs(t.trace() / double(t.rows()) - integral));
  }
  return out;
}

}  // namespace qelab
