#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nep/costs.hpp"
#include "nep/errors.hpp"
#include "nep/lattice.hpp"

namespace nep {

enum class Nonlinearity { Density, Saturation };

inline const char* to_string(Nonlinearity n) {
  return n == Nonlinearity::Density ? "density" : "saturation";
}

struct GpeParams {
  Nonlinearity nonlinearity = Nonlinearity::Density;
  double g = 0.0;
  double gamma = 0.1;
  double v_block = 20.0;

  void validate() const {
    if (!(std::isfinite(g) && g >= 0.0)) throw ConfigError("g must be finite and >= 0");
    if (!(std::isfinite(gamma) && gamma >= 0.0)) throw ConfigError("gamma must be finite and >= 0");
    if (!std::isfinite(v_block)) throw ConfigError("v_block must be finite");
  }
};

// Learnable parameters: on-site potential per node, pump weight per input site.
struct Trainables {
  std::vector<double> potential;
  std::vector<double> pump_weights;
};

inline void check_trainables(const Trainables& tr, const Lattice& lat) {
  if (static_cast<int>(tr.potential.size()) != lat.size())
    throw DimensionError("potential size does not match lattice");
  if (tr.pump_weights.size() != lat.input_sites.size())
    throw DimensionError("pump_weights size does not match input_sites");
}

// Real interaction shift f(psi): g|psi|^2 or saturating g/(1+|psi|^2).
inline double nonlinearity_value(Complex psi, const GpeParams& p) {
  const double n = std::norm(psi);
  return p.nonlinearity == Nonlinearity::Density ? p.g * n : p.g / (1.0 + n);
}

// V with blocked sites overridden by the barrier height.
inline std::vector<double> effective_potential(const Trainables& tr, const GpeParams& p,
                                               const Lattice& lat) {
  check_trainables(tr, lat);
  std::vector<double> v(tr.potential);
  for (int s : lat.blocked_sites) v[s] = p.v_block;
  return v;
}

// P_i = w_k * x_{m(k)} at input site k, zero elsewhere. An empty map means
// the identity mapping (site k reads component k).
inline ComplexField pump_field(const std::vector<double>& x, const Trainables& tr,
                               const Lattice& lat, const std::vector<int>& input_map = {}) {
  check_trainables(tr, lat);
  const std::size_t n_in = lat.input_sites.size();
  if (!input_map.empty() && input_map.size() != n_in)
    throw DimensionError("input_map size does not match input_sites");
  if (input_map.empty() && x.size() != n_in)
    throw DimensionError("sample size does not match input_sites");
  ComplexField pump(lat.size(), Complex{0.0, 0.0});
  for (std::size_t k = 0; k < n_in; ++k) {
    const int comp = input_map.empty() ? static_cast<int>(k) : input_map[k];
    if (comp < 0 || comp >= static_cast<int>(x.size()))
      throw DimensionError("input_map component " + std::to_string(comp) + " out of range");
    pump[lat.input_sites[k]] = Complex{tr.pump_weights[k] * x[comp], 0.0};
  }
  return pump;
}

// Fused right-hand side kappa(psi) of the free dynamics. Precomputes the
// effective potential and pump once; operator() is the hot loop.
class FreeRhs {
public:
  FreeRhs() = default;
  FreeRhs(const GpeParams& params, const Trainables& tr, ComplexField pump, const Lattice& lat)
      : rows_(lat.rows), cols_(lat.cols), one_d_(lat.one_dimensional()), g_(params.g),
        gamma_(params.gamma), density_(params.nonlinearity == Nonlinearity::Density),
        v_eff_(effective_potential(tr, params, lat)), pump_(std::move(pump)) {
    params.validate();
    check_field(pump_, lat, "pump");
  }

  int size() const { return rows_ * cols_; }

  void operator()(const ComplexField& psi, ComplexField& out) const {
    const int n = size();
    out.resize(n);
    if (one_d_) {
      for (int i = 0; i < n; ++i) {
        Complex lap = -2.0 * psi[i];
        if (i > 0) lap += psi[i - 1];
        if (i + 1 < n) lap += psi[i + 1];
        out[i] = site(psi[i], lap, i);
      }
      return;
    }
    for (int r = 0; r < rows_; ++r) {
      const int base = r * cols_;
      for (int c = 0; c < cols_; ++c) {
        const int i = base + c;
        Complex lap = -4.0 * psi[i];
        if (c > 0) lap += psi[i - 1];
        if (c + 1 < cols_) lap += psi[i + 1];
        if (r > 0) lap += psi[i - cols_];
        if (r + 1 < rows_) lap += psi[i + cols_];
        out[i] = site(psi[i], lap, i);
      }
    }
  }

private:
  Complex site(Complex psi, Complex lap, int i) const {
    const double a = psi.real(), b = psi.imag();
    const double n2 = a * a + b * b;
    const double f = density_ ? g_ * n2 : g_ / (1.0 + n2);
    const double c = v_eff_[i] + f;
    return Complex{-0.5 * lap.imag() + c * b - gamma_ * a + pump_[i].real(),
                   0.5 * lap.real() - c * a - gamma_ * b + pump_[i].imag()};
  }

  int rows_ = 1, cols_ = 1;
  bool one_d_ = true;
  double g_ = 0.0, gamma_ = 0.0;
  bool density_ = true;
  std::vector<double> v_eff_;
  ComplexField pump_;
};

// Nudge toward the target on the output region only.
struct NudgeSpec {
  double beta = 0.0;
  CostKind cost_kind = CostKind::Mse;
  std::vector<double> target;

  void validate(const Lattice& lat) const {
    if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
    check_target(target, lat.output_region.size(), "nudge");
    if (cost_kind == CostKind::Cce) check_one_hot(target);
  }
};

// Per-output error factors e_j such that drive_j = i * beta * e_j * psi_j.
inline std::vector<double> nudge_error_factors(const ComplexField& psi, const NudgeSpec& spec,
                                               const Lattice& lat) {
  const std::vector<double> readout = output_readout(psi, lat.output_region);
  std::vector<double> e(readout.size());
  if (spec.cost_kind == CostKind::Mse) {
    for (std::size_t j = 0; j < readout.size(); ++j) e[j] = spec.target[j] - readout[j];
  } else {
    const std::vector<double> p = softmax(readout);
    for (std::size_t j = 0; j < readout.size(); ++j) e[j] = spec.target[j] - p[j];
  }
  return e;
}

inline ComplexField nudge_drive(const ComplexField& psi, const NudgeSpec& spec, const Lattice& lat) {
  check_field(psi, lat, "nudge_drive");
  spec.validate(lat);
  const std::vector<double> e = nudge_error_factors(psi, spec, lat);
  ComplexField drive(lat.size(), Complex{0.0, 0.0});
  for (std::size_t j = 0; j < lat.output_region.size(); ++j) {
    const int s = lat.output_region[j];
    drive[s] = Complex{0.0, spec.beta * e[j]} * psi[s];
  }
  return drive;
}

// Nudged right-hand side. Self-consistent mode recomputes the error factors
// from the instantaneous field; frozen mode reuses factors captured at a
// reference field (the free steady state).
class NudgedRhs {
public:
  NudgedRhs(FreeRhs free_rhs, const NudgeSpec& spec, const Lattice& lat)
      : free_(std::move(free_rhs)), spec_(spec), out_sites_(lat.output_region) {
    spec_.validate(lat);
  }

  // Switch to frozen error factors evaluated at psi_ref.
  void freeze_at(const ComplexField& psi_ref, const Lattice& lat) {
    frozen_ = true;
    frozen_err_ = nudge_error_factors(psi_ref, spec_, lat);
  }

  void operator()(const ComplexField& psi, ComplexField& out) const {
    free_(psi, out);
    if (frozen_) {
      for (std::size_t j = 0; j < out_sites_.size(); ++j) {
        const int s = out_sites_[j];
        out[s] += Complex{0.0, spec_.beta * frozen_err_[j]} * psi[s];
      }
      return;
    }
    if (spec_.cost_kind == CostKind::Mse) {
      for (std::size_t j = 0; j < out_sites_.size(); ++j) {
        const int s = out_sites_[j];
        out[s] += Complex{0.0, spec_.beta * (spec_.target[j] - std::norm(psi[s]))} * psi[s];
      }
      return;
    }
    std::vector<double> readout(out_sites_.size());
    for (std::size_t j = 0; j < out_sites_.size(); ++j) readout[j] = std::norm(psi[out_sites_[j]]);
    const std::vector<double> p = softmax(readout);
    for (std::size_t j = 0; j < out_sites_.size(); ++j) {
      const int s = out_sites_[j];
      out[s] += Complex{0.0, spec_.beta * (spec_.target[j] - p[j])} * psi[s];
    }
  }

private:
  FreeRhs free_;
  NudgeSpec spec_;
  std::vector<int> out_sites_;
  bool frozen_ = false;
  std::vector<double> frozen_err_;
};

inline ComplexField kappa_free(const ComplexField& psi, const GpeParams& params,
                               const Trainables& tr, const ComplexField& pump, const Lattice& lat) {
  check_field(psi, lat, "kappa_free");
  check_field(pump, lat, "kappa_free pump");
  FreeRhs rhs(params, tr, pump, lat);
  ComplexField out;
  rhs(psi, out);
  return out;
}

inline ComplexField kappa_nudged(const ComplexField& psi, const GpeParams& params,
                                 const Trainables& tr, const ComplexField& pump,
                                 const NudgeSpec& spec, const Lattice& lat) {
  check_field(psi, lat, "kappa_nudged");
  check_field(pump, lat, "kappa_nudged pump");
  NudgedRhs rhs(FreeRhs(params, tr, pump, lat), spec, lat);
  ComplexField out;
  rhs(psi, out);
  return out;
}

}  // namespace nep
