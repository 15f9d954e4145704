#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nep/errors.hpp"

namespace nep {

// Principal axes of the training split, plus per-component projection
// extrema used to rescale coefficients into [-1, 1]. The rescale divides by
// max(|lo|, |hi|) so that a zero projection (the mean image) stays zero.
struct PcaModel {
  int n_components = 0;
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // n_components x n_pixels, orthonormal
  std::vector<double> scale_lo;
  std::vector<double> scale_hi;

  double scale(int k) const {
    const double m = std::max(std::abs(scale_lo[k]), std::abs(scale_hi[k]));
    return m > 0.0 ? m : 1.0;
  }
};

// Raw mean-centered projection onto the principal axes.
inline std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& image) {
  if (image.size() != model.mean.size())
    throw DimensionError("pca_project: image size does not match model");
  std::vector<double> out(model.n_components, 0.0);
  for (int k = 0; k < model.n_components; ++k) {
    double acc = 0.0;
    const std::vector<double>& c = model.components[k];
    for (std::size_t p = 0; p < image.size(); ++p) acc += c[p] * (image[p] - model.mean[p]);
    out[k] = acc;
  }
  return out;
}

// Projection rescaled by the training extrema; training coefficients land in
// [-1, 1] with zero preserved.
inline std::vector<double> pca_transform(const PcaModel& model, const std::vector<double>& image) {
  std::vector<double> out = pca_project(model, image);
  for (int k = 0; k < model.n_components; ++k) out[k] /= model.scale(k);
  return out;
}

inline std::vector<double> pca_reconstruct(const PcaModel& model,
                                           const std::vector<double>& raw_coeffs) {
  if (static_cast<int>(raw_coeffs.size()) != model.n_components)
    throw DimensionError("pca_reconstruct: coefficient count mismatch");
  std::vector<double> out(model.mean);
  for (int k = 0; k < model.n_components; ++k)
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += raw_coeffs[k] * model.components[k][p];
  return out;
}

inline PcaModel pca_fit(const std::vector<std::vector<double>>& data, int n_components) {
  if (n_components < 1) throw ConfigError("pca_fit: n_components must be >= 1");
  if (static_cast<int>(data.size()) < n_components)
    throw ConfigError("pca_fit: need at least n_components samples");
  const std::size_t n_pixels = data[0].size();
  for (const auto& row : data)
    if (row.size() != n_pixels) throw DimensionError("pca_fit: ragged input");
  if (static_cast<std::size_t>(n_components) > n_pixels)
    throw ConfigError("pca_fit: n_components exceeds dimensionality");

  const std::size_t n = data.size();
  PcaModel model;
  model.n_components = n_components;
  model.mean.assign(n_pixels, 0.0);
  for (const auto& row : data)
    for (std::size_t p = 0; p < n_pixels; ++p) model.mean[p] += row[p];
  for (double& m : model.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n_pixels, n_pixels);
  Eigen::VectorXd centered(n_pixels);
  for (const auto& row : data) {
    for (std::size_t p = 0; p < n_pixels; ++p) centered[p] = row[p] - model.mean[p];
    cov.noalias() += centered * centered.transpose();
  }
  cov /= static_cast<double>(n > 1 ? n - 1 : 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw ConfigError("pca_fit: eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = evals[n_pixels - 1];
  const double rank_tol = std::max(top * 1e-12, 1e-14);
  model.components.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    const std::size_t col = n_pixels - 1 - k;
    if (evals[col] <= rank_tol)
      throw ConfigError("pca_fit: degenerate covariance, rank < n_components");
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    // Deterministic sign: make the largest-magnitude entry positive.
    int arg = 0;
    for (int p = 1; p < static_cast<int>(n_pixels); ++p)
      if (std::abs(v[p]) > std::abs(v[arg])) arg = p;
    if (v[arg] < 0.0) v = -v;
    model.components[k].assign(v.data(), v.data() + n_pixels);
  }

  model.scale_lo.assign(n_components, 0.0);
  model.scale_hi.assign(n_components, 0.0);
  bool first = true;
  for (const auto& row : data) {
    const std::vector<double> proj = pca_project(model, row);
    for (int k = 0; k < n_components; ++k) {
      if (first || proj[k] < model.scale_lo[k]) model.scale_lo[k] = proj[k];
      if (first || proj[k] > model.scale_hi[k]) model.scale_hi[k] = proj[k];
    }
    first = false;
  }
  return model;
}

// Text persistence (hexfloat, lossless round-trip).
inline void save_pca(const PcaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "nep-pca v1\n";
  out << model.n_components << " " << model.mean.size() << "\n";
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%a", v);
    out << buf;
  };
  auto emit_vec = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << " ";
      emit(v[i]);
    }
    out << "\n";
  };
  emit_vec(model.mean);
  for (const auto& c : model.components) emit_vec(c);
  emit_vec(model.scale_lo);
  emit_vec(model.scale_hi);
}

inline PcaModel load_pca(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string tag, version;
  in >> tag >> version;
  if (tag != "nep-pca" || version != "v1") throw Error("unrecognized pca file " + path);
  PcaModel model;
  std::size_t n_pixels = 0;
  in >> model.n_components >> n_pixels;
  auto read_vec = [&](std::vector<double>& v, std::size_t len) {
    v.resize(len);
    std::string tok;
    for (std::size_t i = 0; i < len; ++i) {
      if (!(in >> tok)) throw Error("truncated pca file " + path);
      v[i] = std::strtod(tok.c_str(), nullptr);
    }
  };
  read_vec(model.mean, n_pixels);
  model.components.resize(model.n_components);
  for (auto& c : model.components) read_vec(c, n_pixels);
  read_vec(model.scale_lo, model.n_components);
  read_vec(model.scale_hi, model.n_components);
  return model;
}

}  // namespace nep
