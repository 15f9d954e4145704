#pragma once

#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>

#include "nep/errors.hpp"
#include "nep/lattice.hpp"

namespace nep {

struct RelaxConfig {
  double dt = 0.1;
  long max_steps = 5000;
  double residual_tol = 1e-9;

  void validate() const {
    if (!(std::isfinite(dt) && dt > 0.0)) throw ConfigError("dt must be finite and > 0");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (!(std::isfinite(residual_tol) && residual_tol > 0.0))
      throw ConfigError("residual_tol must be finite and > 0");
  }
};

// True when the integration budget is shorter than ten dissipation times,
// i.e. dt * max_steps <= 10 / gamma; callers should warn.
inline bool relax_budget_warning(const RelaxConfig& cfg, double gamma) {
  if (gamma <= 0.0) return false;
  return cfg.dt * static_cast<double>(cfg.max_steps) <= 10.0 / gamma;
}

struct SteadyState {
  ComplexField psi;
  double residual = 0.0;
  long steps_used = 0;
  bool converged = false;
};

inline double inf_norm(const ComplexField& v) {
  double m = 0.0;
  for (const Complex& z : v) {
    const double a = std::abs(z.real()), b = std::abs(z.imag());
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
    if (a > m) m = a;
    if (b > m) m = b;
  }
  return m;
}

namespace detail {

template <class Rhs>
inline void eval_rhs(Rhs& rhs, const ComplexField& psi, ComplexField& out) {
  if constexpr (std::is_invocable_r_v<ComplexField, Rhs&, const ComplexField&>) {
    out = rhs(psi);
  } else {
    rhs(psi, out);
  }
}

}  // namespace detail

// One classical RK4 step. Accepts either an in-place rhs
// void(const ComplexField&, ComplexField&) or a value-returning one.
template <class Rhs>
ComplexField rk4_step(const ComplexField& psi, Rhs&& rhs, double dt) {
  const std::size_t n = psi.size();
  ComplexField k1, k2, k3, k4, tmp(n);
  detail::eval_rhs(rhs, psi, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = psi[i] + 0.5 * dt * k1[i];
  detail::eval_rhs(rhs, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = psi[i] + 0.5 * dt * k2[i];
  detail::eval_rhs(rhs, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = psi[i] + dt * k3[i];
  detail::eval_rhs(rhs, tmp, k4);
  ComplexField out(n);
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = psi[i] + w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Integrate to steady state. The residual is the inf-norm of kappa at the
// current field, checked before each step, so an initial field that already
// satisfies the tolerance converges in zero steps.
template <class Rhs>
SteadyState relax(ComplexField initial, Rhs&& rhs, const RelaxConfig& cfg) {
  cfg.validate();
  const std::size_t n = initial.size();
  ComplexField k1(n), k2(n), k3(n), k4(n), tmp(n);
  SteadyState st;
  st.psi = std::move(initial);
  for (long step = 0;; ++step) {
    detail::eval_rhs(rhs, st.psi, k1);
    const double r = inf_norm(k1);
    if (!std::isfinite(r)) throw DivergenceError("relaxation diverged", step);
    st.residual = r;
    st.steps_used = step;
    if (r <= cfg.residual_tol) {
      st.converged = true;
      return st;
    }
    if (step >= cfg.max_steps) return st;
    const double dt = cfg.dt;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = st.psi[i] + 0.5 * dt * k1[i];
    detail::eval_rhs(rhs, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = st.psi[i] + 0.5 * dt * k2[i];
    detail::eval_rhs(rhs, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = st.psi[i] + dt * k3[i];
    detail::eval_rhs(rhs, tmp, k4);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      st.psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

}  // namespace nep
