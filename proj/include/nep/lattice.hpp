#pragma once

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

#include "nep/errors.hpp"

namespace nep {

using Complex = std::complex<double>;
using ComplexField = std::vector<Complex>;

// Rectangular lattice, row-major node ids. rows == 1 selects the 1d chain.
// Blocked sites stay part of the topology; they are suppressed through the
// potential, not by removing links.
struct Lattice {
  int rows = 1;
  int cols = 1;
  std::vector<int> input_sites;
  std::vector<int> output_region;
  std::vector<int> blocked_sites;

  Lattice() = default;
  Lattice(int rows_, int cols_, std::vector<int> inputs, std::vector<int> outputs,
          std::vector<int> blocked = {})
      : rows(rows_), cols(cols_), input_sites(std::move(inputs)),
        output_region(std::move(outputs)), blocked_sites(std::move(blocked)) {
    validate();
  }

  int size() const { return rows * cols; }
  bool one_dimensional() const { return rows == 1; }
  // Uniform coordination number used by the kinetic stencil.
  int degree() const { return one_dimensional() ? 2 : 4; }
  int index(int r, int c) const { return r * cols + c; }

  bool blocked(int site) const {
    return std::binary_search(blocked_sites.begin(), blocked_sites.end(), site);
  }

  void validate() {
    if (rows < 1 || cols < 1)
      throw DimensionError("lattice dimensions must be positive");
    auto check_list = [this](const std::vector<int>& v, const std::string& what) {
      std::vector<int> sorted(v);
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DimensionError("duplicate node id in " + what);
      for (int s : v)
        if (s < 0 || s >= size())
          throw DimensionError(what + " id " + std::to_string(s) + " out of range");
    };
    check_list(input_sites, "input_sites");
    check_list(output_region, "output_region");
    check_list(blocked_sites, "blocked_sites");
    if (output_region.empty())
      throw DimensionError("output_region must be non-empty");
    for (int s : input_sites)
      if (std::find(output_region.begin(), output_region.end(), s) != output_region.end())
        throw DimensionError("input site " + std::to_string(s) + " overlaps output region");
    std::sort(blocked_sites.begin(), blocked_sites.end());
  }
};

inline void check_field(const ComplexField& psi, const Lattice& lat, const char* what) {
  if (static_cast<int>(psi.size()) != lat.size())
    throw DimensionError(std::string(what) + ": field size " + std::to_string(psi.size()) +
                         " does not match lattice size " + std::to_string(lat.size()));
}

// Dirichlet discrete Laplacian with uniform degree: missing neighbors count
// as zero and every site subtracts degree() * psi.
inline void laplacian_into(const ComplexField& psi, const Lattice& lat, ComplexField& out) {
  const int n = lat.size();
  out.resize(n);
  if (lat.one_dimensional()) {
    for (int i = 0; i < n; ++i) {
      Complex acc = -2.0 * psi[i];
      if (i > 0) acc += psi[i - 1];
      if (i + 1 < n) acc += psi[i + 1];
      out[i] = acc;
    }
    return;
  }
  const int rows = lat.rows, cols = lat.cols;
  for (int r = 0; r < rows; ++r) {
    const int base = r * cols;
    for (int c = 0; c < cols; ++c) {
      const int i = base + c;
      Complex acc = -4.0 * psi[i];
      if (c > 0) acc += psi[i - 1];
      if (c + 1 < cols) acc += psi[i + 1];
      if (r > 0) acc += psi[i - cols];
      if (r + 1 < rows) acc += psi[i + cols];
      out[i] = acc;
    }
  }
}

inline ComplexField laplacian(const ComplexField& psi, const Lattice& lat) {
  check_field(psi, lat, "laplacian");
  ComplexField out;
  laplacian_into(psi, lat, out);
  return out;
}

inline std::vector<Complex> region_values(const ComplexField& psi, const std::vector<int>& region) {
  std::vector<Complex> out;
  out.reserve(region.size());
  for (int s : region) {
    if (s < 0 || s >= static_cast<int>(psi.size()))
      throw DimensionError("region id " + std::to_string(s) + " out of range");
    out.push_back(psi[s]);
  }
  return out;
}

inline ComplexField zero_field(const Lattice& lat) { return ComplexField(lat.size(), Complex{0.0, 0.0}); }

}  // namespace nep
