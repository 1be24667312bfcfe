// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "qelab/common.hpp"

namespace qelab {

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double fixed_dt = 0.0;  // > 0 switches to fixed-step integration
  double max_dt = 0.0;    // > 0 caps the adaptive step
  // called after every accepted step with (t, state)
  std::function<void(double, const Eigen::VectorXd&)> observer;
};

namespace detail {

// Dormand-Prince 5(4) pair, FSAL.
inline void dp45_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double dt,
                      Eigen::VectorXd& k1, Eigen::VectorXd& y5, Eigen::VectorXd& err) {
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  const auto n = y.size();
  Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n);
  tmp = y + dt * a21 * k1;
  f(t + dt / 5, tmp, k2);
  tmp = y + dt * (a31 * k1 + a32 * k2);
  f(t + 0.3 * dt, tmp, k3);
  tmp = y + dt * (a41 * k1 + a42 * k2 + a43 * k3);
  f(t + 0.8 * dt, tmp, k4);
  tmp = y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
  f(t + 8.0 / 9 * dt, tmp, k5);
  tmp = y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
  f(t + dt, tmp, k6);
  y5 = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  f(t + dt, y5, k7);
  err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  k1 = k7;  // FSAL
}

}  // namespace detail

// Integrate y' = f(t, y) from t0 to t1; returns the final state.
inline Eigen::VectorXd integrate_ode(const OdeRhs& f, Eigen::VectorXd y, double t0,
                                     double t1, const OdeOptions& opt = {}) {
  if (t1 == t0) return y;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const auto n = y.size();
  Eigen::VectorXd k1(n), y5(n), err(n);
  f(t0, y, k1);
  double t = t0;
  double dt = (opt.fixed_dt > 0.0) ? dir * opt.fixed_dt
                                   : dir * std::min(1e-2, std::abs(t1 - t0));
  int rejected_in_a_row = 0;
  while (dir * (t1 - t) > 0.0) {
    if (dir * (t + dt - t1) > 0.0) dt = t1 - t;
    detail::dp45_step(f, t, y, dt, k1, y5, err);
    if (opt.fixed_dt > 0.0) {
      t += dt;
      y.swap(y5);
      if (opt.observer) opt.observer(t, y);
      continue;
    }
    double ratio = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      ratio = std::max(ratio, std::abs(err[i]) / sc);
    }
    if (ratio <= 1.0) {
      t += dt;
      y.swap(y5);
      if (opt.observer) opt.observer(t, y);
      rejected_in_a_row = 0;
    } else {
      f(t, y, k1);  // k1 was clobbered by FSAL
      certify(++rejected_in_a_row < 60, "integrate_ode: step size collapsed");
    }
    const double grow = 0.9 * std::pow(std::max(ratio, 1e-10), -0.2);
    dt *= std::min(5.0, std::max(0.2, grow));
    if (opt.max_dt > 0.0 && std::abs(dt) > opt.max_dt) dt = dir * opt.max_dt;
    certify(std::abs(dt) > 1e-14 * std::max(1.0, std::abs(t)),
            "integrate_ode: step size underflow");
  }
  return y;
}

}  // namespace qelab
