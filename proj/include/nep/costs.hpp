#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nep/errors.hpp"
#include "nep/lattice.hpp"

namespace nep {

enum class CostKind { Mse, Cce };

inline const char* to_string(CostKind k) { return k == CostKind::Mse ? "mse" : "cce"; }

// Intensities |psi|^2 over the output region.
inline std::vector<double> output_readout(const ComplexField& psi, const std::vector<int>& region) {
  std::vector<double> out;
  out.reserve(region.size());
  for (int s : region) {
    if (s < 0 || s >= static_cast<int>(psi.size()))
      throw DimensionError("readout id " + std::to_string(s) + " out of range");
    out.push_back(std::norm(psi[s]));
  }
  return out;
}

// Numerically stable softmax (max subtraction).
inline std::vector<double> softmax(const std::vector<double>& z) {
  if (z.empty()) throw DimensionError("softmax of empty vector");
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline void check_target(const std::vector<double>& target, std::size_t n, const char* what) {
  if (target.size() != n)
    throw DimensionError(std::string(what) + ": target size " + std::to_string(target.size()) +
                         " != readout size " + std::to_string(n));
  for (double t : target)
    if (!std::isfinite(t)) throw ConfigError(std::string(what) + ": non-finite target entry");
}

inline void check_one_hot(const std::vector<double>& target) {
  int ones = 0;
  for (double t : target) {
    if (t == 1.0) ++ones;
    else if (t != 0.0) throw ConfigError("cce target must contain only 0 and 1");
  }
  if (ones != 1) throw ConfigError("cce target must be one-hot");
}

inline double mse_cost(const std::vector<double>& readout, const std::vector<double>& target) {
  check_target(target, readout.size(), "mse_cost");
  double c = 0.0;
  for (std::size_t i = 0; i < readout.size(); ++i) {
    const double d = target[i] - readout[i];
    c += d * d;
  }
  return 0.5 * c;
}

inline double cce_cost(const std::vector<double>& readout, const std::vector<double>& target) {
  check_target(target, readout.size(), "cce_cost");
  check_one_hot(target);
  const std::vector<double> p = softmax(readout);
  double c = 0.0;
  for (std::size_t i = 0; i < readout.size(); ++i)
    if (target[i] != 0.0) c -= target[i] * std::log(std::max(p[i], 1e-300));
  return c;
}

// Argmax intensity; ties resolve to the lowest index.
inline int predict(const std::vector<double>& readout) {
  if (readout.empty()) throw DimensionError("predict on empty readout");
  int best = 0;
  for (int i = 1; i < static_cast<int>(readout.size()); ++i)
    if (readout[i] > readout[best]) best = i;
  return best;
}

}  // namespace nep
