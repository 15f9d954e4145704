#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nep/errors.hpp"
#include "nep/rng.hpp"
#include "nep/trainer.hpp"

namespace nep {

struct OracleRow {
  std::string name;
  double nep_grad = 0.0;
  double fd_grad = 0.0;
};

struct OracleReport {
  double cosine_similarity = 0.0;
  double max_abs_err = 0.0;
  double rel_err_l2 = 0.0;
  std::vector<OracleRow> rows;
};

enum class ParamKind { Potential, PumpWeight };

struct ParamRef {
  ParamKind kind = ParamKind::Potential;
  int index = 0;
};

// Finite differences need relaxation error well below the gradient signal,
// so the oracle tightens the tolerance and extends the step budget.
struct OracleConfig {
  double eps_V = 1e-4;
  double eps_w = 1e-4;
  RelaxConfig relax{0.1, 60000, 1e-11};
  int max_params = 0;  // 0 = compare every trainable parameter
  std::uint64_t subset_seed = 0;
};

namespace detail {

inline double free_cost(const System& sys, const Trainables& tr, const Sample& sample,
                        const RelaxConfig& relax_cfg, const char* ctx) {
  SteadyState st = free_steady(sys, tr, sample.x, relax_cfg);
  if (!st.converged)
    throw OracleError(std::string(ctx) + ": relaxation did not converge (residual " +
                      std::to_string(st.residual) + ")");
  return sample_cost(sys.cost_kind, output_readout(st.psi, sys.lattice.output_region),
                     sample.target);
}

inline Trainables perturbed(const Trainables& tr, ParamRef which, double delta) {
  Trainables out = tr;
  if (which.kind == ParamKind::Potential) {
    if (which.index < 0 || which.index >= static_cast<int>(out.potential.size()))
      throw DimensionError("fd_grad: V index out of range");
    out.potential[which.index] += delta;
  } else {
    if (which.index < 0 || which.index >= static_cast<int>(out.pump_weights.size()))
      throw DimensionError("fd_grad: w index out of range");
    out.pump_weights[which.index] += delta;
  }
  return out;
}

}  // namespace detail

// Brute-force dC/dtheta at beta = 0: perturb the parameter by +-eps, fully
// re-relax each system, central difference of the free-phase cost.
// Non-convergence of any probe invalidates the estimate and throws.
inline double fd_grad(const System& sys, const Trainables& tr, const Sample& sample,
                      ParamRef which, double eps, const RelaxConfig& relax_cfg) {
  if (!(eps > 0.0)) throw ConfigError("fd_grad eps must be > 0");
  const double cp =
      detail::free_cost(sys, detail::perturbed(tr, which, +eps), sample, relax_cfg, "fd_grad(+)");
  const double cm =
      detail::free_cost(sys, detail::perturbed(tr, which, -eps), sample, relax_cfg, "fd_grad(-)");
  return (cp - cm) / (2.0 * eps);
}

// NEP contrast gradient vs the finite-difference oracle, both averaged over
// the given samples. Parameters are compared exhaustively, or for a seeded
// random subset when max_params is set.
inline OracleReport compare_nep_to_oracle(const System& sys, const Trainables& tr,
                                          const std::vector<Sample>& samples,
                                          const TrainConfig& train_cfg, const OracleConfig& oc) {
  if (samples.empty()) throw ConfigError("compare_nep_to_oracle: no samples");
  const int n_V = sys.lattice.size();
  const int n_w = static_cast<int>(sys.lattice.input_sites.size());
  const double inv = 1.0 / static_cast<double>(samples.size());

  TrainConfig nep_cfg = train_cfg;
  nep_cfg.relax = oc.relax;
  std::vector<double> nep_V(n_V, 0.0), nep_w(n_w, 0.0);
  for (const Sample& s : samples) {
    Contrast con = run_two_phase(sys, tr, s, nep_cfg);
    if (!con.free.converged || !con.nudged.converged ||
        (con.symmetric() && !con.nudged_minus.converged))
      throw OracleError("compare_nep_to_oracle: NEP relaxation did not converge");
    const std::vector<double> gv = grad_V(con, sys.lattice);
    const std::vector<double> gw = grad_w(con, s, sys);
    for (int i = 0; i < n_V; ++i) nep_V[i] += inv * gv[i];
    for (int k = 0; k < n_w; ++k) nep_w[k] += inv * gw[k];
  }

  std::vector<ParamRef> params;
  for (int i = 0; i < n_V; ++i)
    if (!sys.lattice.blocked(i)) params.push_back({ParamKind::Potential, i});
  for (int k = 0; k < n_w; ++k) params.push_back({ParamKind::PumpWeight, k});
  if (oc.max_params > 0 && static_cast<int>(params.size()) > oc.max_params) {
    Rng rng = Rng::derive(oc.subset_seed, 0x0facce);
    rng.shuffle(params);
    params.resize(oc.max_params);
  }

  OracleReport rep;
  double dot = 0.0, nn = 0.0, ff = 0.0, err2 = 0.0;
  for (const ParamRef& p : params) {
    const double eps = p.kind == ParamKind::Potential ? oc.eps_V : oc.eps_w;
    double fd = 0.0;
    for (const Sample& s : samples) fd += inv * fd_grad(sys, tr, s, p, eps, oc.relax);
    const double nep = p.kind == ParamKind::Potential ? nep_V[p.index] : nep_w[p.index];
    OracleRow row;
    row.name = (p.kind == ParamKind::Potential ? "V[" : "w[") + std::to_string(p.index) + "]";
    row.nep_grad = nep;
    row.fd_grad = fd;
    rep.rows.push_back(row);
    dot += nep * fd;
    nn += nep * nep;
    ff += fd * fd;
    const double d = nep - fd;
    err2 += d * d;
    rep.max_abs_err = std::max(rep.max_abs_err, std::abs(d));
  }
  const double denom = std::sqrt(nn) * std::sqrt(ff);
  rep.cosine_similarity = denom > 0.0 ? dot / denom : 1.0;
  rep.rel_err_l2 = ff > 0.0 ? std::sqrt(err2) / std::sqrt(ff) : std::sqrt(err2);
  return rep;
}

// Wirtinger Jacobians of kappa_free probed by central differences on the
// real and imaginary part of every node. Returns the inf-norm violations of
// the two near-equilibrium conditions:
//   sym:  dkappa_r/dpsibar_s symmetric in (r, s)
//   asym: dkappa_r/dpsi_s approximately equal to -conj(dkappa_s/dpsi_r)
// The asymmetry is carried entirely by the dissipative diagonal (2 gamma).
inline std::pair<double, double> jacobian_condition_residual(const ComplexField& psi,
                                                             const GpeParams& params,
                                                             const Trainables& tr,
                                                             const Lattice& lat,
                                                             double eps = 1e-5) {
  check_field(psi, lat, "jacobian_condition_residual");
  const int n = lat.size();
  FreeRhs rhs(params, tr, zero_field(lat), lat);
  ComplexField kp(n), km(n), probe(n);
  std::vector<ComplexField> A(n, ComplexField(n)), B(n, ComplexField(n));
  for (int s = 0; s < n; ++s) {
    probe = psi;
    probe[s] = psi[s] + eps;
    rhs(probe, kp);
    probe[s] = psi[s] - eps;
    rhs(probe, km);
    ComplexField dk_da(n);
    for (int r = 0; r < n; ++r) dk_da[r] = (kp[r] - km[r]) / (2.0 * eps);
    probe[s] = psi[s] + Complex{0.0, eps};
    rhs(probe, kp);
    probe[s] = psi[s] - Complex{0.0, eps};
    rhs(probe, km);
    for (int r = 0; r < n; ++r) {
      const Complex dk_db = (kp[r] - km[r]) / (2.0 * eps);
      A[r][s] = 0.5 * (dk_da[r] - Complex{0.0, 1.0} * dk_db);
      B[r][s] = 0.5 * (dk_da[r] + Complex{0.0, 1.0} * dk_db);
    }
  }
  double sym = 0.0, asym = 0.0;
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) {
      sym = std::max(sym, std::abs(B[r][s] - B[s][r]));
      asym = std::max(asym, std::abs(A[r][s] + std::conj(A[s][r])));
    }
  return {sym, asym};
}

// Reciprocity identity for a nonlinearity f: both sides of
//   f + psi df/dpsi  ==  conj(f) + psibar dfbar/dpsibar
// evaluated via Wirtinger central differences; returns the max |lhs - rhs|.
template <class F>
inline double nonlinearity_reciprocity_check(F&& f, const std::vector<Complex>& samples,
                                             double eps = 1e-6) {
  double worst = 0.0;
  for (Complex psi : samples) {
    const Complex fra = f(psi + eps), fla = f(psi - eps);
    const Complex frb = f(psi + Complex{0.0, eps}), flb = f(psi - Complex{0.0, eps});
    const Complex df_da = (fra - fla) / (2.0 * eps);
    const Complex df_db = (frb - flb) / (2.0 * eps);
    const Complex df_dpsi = 0.5 * (df_da - Complex{0.0, 1.0} * df_db);
    const Complex lhs = f(psi) + psi * df_dpsi;
    const Complex dfbar_da = std::conj(fra - fla) / (2.0 * eps);
    const Complex dfbar_db = std::conj(frb - flb) / (2.0 * eps);
    const Complex dfbar_dpsibar = 0.5 * (dfbar_da + Complex{0.0, 1.0} * dfbar_db);
    const Complex rhs = std::conj(f(psi)) + std::conj(psi) * dfbar_dpsibar;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

inline double nonlinearity_reciprocity_check(Nonlinearity kind, double g,
                                             const std::vector<Complex>& samples,
                                             double eps = 1e-6) {
  GpeParams p;
  p.nonlinearity = kind;
  p.g = g;
  return nonlinearity_reciprocity_check(
      [&p](Complex z) { return Complex{nonlinearity_value(z, p), 0.0}; }, samples, eps);
}

}  // namespace nep
