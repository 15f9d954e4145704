#include "nep/relax.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "nep/dynamics.hpp"

using namespace nep;

namespace {

// kappa = lambda * psi on a single node.
struct ScalarRhs {
  Complex lambda;
  void operator()(const ComplexField& psi, ComplexField& out) const {
    out.resize(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = lambda * psi[i];
  }
};

}  // namespace

TEST(Rk4, ZeroRhsLeavesFieldUnchanged) {
  ComplexField psi{Complex{0.4, -0.7}, Complex{1.0, 2.0}};
  auto rhs = [](const ComplexField& p, ComplexField& out) { out.assign(p.size(), Complex{}); };
  EXPECT_EQ(rk4_step(psi, rhs, 0.1), psi);
}

TEST(Rk4, TruncatedExponentialSeries) {
  // kappa = -psi, dt = 0.1, psi0 = 1: one step gives sum_{n=0..4} (-0.1)^n/n!
  ScalarRhs rhs{Complex{-1.0, 0.0}};
  ComplexField out = rk4_step(ComplexField{Complex{1.0, 0.0}}, rhs, 0.1);
  double series = 0.0;
  double term = 1.0;
  for (int n = 0; n <= 4; ++n) {
    series += term;
    term *= -0.1 / (n + 1);
  }
  EXPECT_NEAR(series, 0.9048375, 1e-15);
  EXPECT_NEAR(out[0].real(), series, 1e-15);
  EXPECT_EQ(out[0].imag(), 0.0);
}

TEST(Rk4, AcceptsValueReturningRhs) {
  auto rhs = [](const ComplexField& p) {
    ComplexField out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = -p[i];
    return out;
  };
  ComplexField out = rk4_step(ComplexField{Complex{1.0, 0.0}}, rhs, 0.1);
  EXPECT_NEAR(out[0].real(), 0.9048375, 1e-12);
}

TEST(Rk4, FourthOrderGlobalError) {
  // integrate kappa = -i psi to t = 1 against exp(-i t)
  ScalarRhs rhs{Complex{0.0, -1.0}};
  auto global_error = [&](double dt) {
    ComplexField psi{Complex{1.0, 0.0}};
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int s = 0; s < steps; ++s) psi = rk4_step(psi, rhs, dt);
    return std::abs(psi[0] - std::exp(Complex{0.0, -1.0}));
  };
  const double e1 = global_error(0.1);
  const double e2 = global_error(0.05);
  const double ratio = e1 / e2;
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Relax, ZeroRhsConvergesImmediately) {
  auto rhs = [](const ComplexField& p, ComplexField& out) { out.assign(p.size(), Complex{}); };
  ComplexField psi{Complex{2.0, -3.0}};
  SteadyState st = relax(psi, rhs, RelaxConfig{});
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.steps_used, 0);
  EXPECT_EQ(st.residual, 0.0);
  EXPECT_EQ(st.psi, psi);
}

TEST(Relax, SingleNodeFixedPoint) {
  Lattice lat(1, 1, {}, {0});
  const double V = 1.0, gamma = 0.1;
  GpeParams params{Nonlinearity::Density, 0.0, gamma, 20.0};
  Trainables tr{{V}, {}};
  FreeRhs rhs(params, tr, ComplexField{Complex{1.0, 0.0}}, lat);
  SteadyState st = relax(zero_field(lat), rhs, RelaxConfig{});
  ASSERT_TRUE(st.converged);
  const Complex root = 1.0 / Complex{gamma, V + 1.0};
  EXPECT_LT(std::abs(st.psi[0] - root), 1e-6);
}

TEST(Relax, ConvergedStateRechecksBelowTolerance) {
  Lattice lat(1, 1, {}, {0});
  GpeParams params{Nonlinearity::Density, 0.0, 0.1, 20.0};
  Trainables tr{{1.0}, {}};
  FreeRhs rhs(params, tr, ComplexField{Complex{1.0, 0.0}}, lat);
  RelaxConfig cfg;
  SteadyState st = relax(zero_field(lat), rhs, cfg);
  ASSERT_TRUE(st.converged);
  ComplexField k;
  rhs(st.psi, k);
  EXPECT_LE(inf_norm(k), cfg.residual_tol);
}

TEST(Relax, DeterministicTrajectories) {
  Lattice lat(1, 9, {2, 6}, {4});
  GpeParams params{Nonlinearity::Saturation, 0.1, 0.1, 20.0};
  Trainables tr{std::vector<double>(9, 0.0), {1.0, 1.0}};
  ComplexField pump = pump_field({1.0, 0.0}, tr, lat);
  FreeRhs rhs(params, tr, pump, lat);
  SteadyState a = relax(zero_field(lat), rhs, RelaxConfig{});
  SteadyState b = relax(zero_field(lat), rhs, RelaxConfig{});
  EXPECT_EQ(a.psi, b.psi);
  EXPECT_EQ(a.steps_used, b.steps_used);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(Relax, WarmStartReachesSameFixedPoint) {
  Lattice lat(1, 9, {2, 6}, {4});
  GpeParams params{Nonlinearity::Saturation, 0.1, 0.1, 20.0};
  Trainables tr{std::vector<double>(9, 0.0), {1.0, 1.0}};
  ComplexField pump = pump_field({1.0, 0.0}, tr, lat);
  FreeRhs rhs(params, tr, pump, lat);
  SteadyState cold = relax(zero_field(lat), rhs, RelaxConfig{});
  ASSERT_TRUE(cold.converged);
  ComplexField warm = cold.psi;
  for (auto& z : warm) z += Complex{1e-3, -1e-3};
  SteadyState again = relax(warm, rhs, RelaxConfig{});
  ASSERT_TRUE(again.converged);
  double dist = 0.0;
  for (int i = 0; i < 9; ++i) dist = std::max(dist, std::abs(again.psi[i] - cold.psi[i]));
  EXPECT_LT(dist, 1e-6);
}

TEST(Relax, DivergenceThrowsWithStep) {
  ScalarRhs rhs{Complex{1e4, 0.0}};
  try {
    relax(ComplexField{Complex{1.0, 0.0}}, rhs, RelaxConfig{});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.step, 0);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(Relax, NonConvergenceIsFlaggedNotThrown) {
  ScalarRhs rhs{Complex{-1.0, 0.0}};
  RelaxConfig cfg;
  cfg.max_steps = 1;
  SteadyState st = relax(ComplexField{Complex{1.0, 0.0}}, rhs, cfg);
  EXPECT_FALSE(st.converged);
  EXPECT_EQ(st.steps_used, 1);
  EXPECT_GT(st.residual, cfg.residual_tol);
}

TEST(RelaxConfig, Validation) {
  RelaxConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RelaxConfig{};
  cfg.residual_tol = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RelaxConfig{};
  cfg.max_steps = -5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(RelaxConfig{}.validate());
}

TEST(RelaxConfig, BudgetWarning) {
  RelaxConfig cfg;  // dt 0.1, 5000 steps -> horizon 500
  EXPECT_FALSE(relax_budget_warning(cfg, 0.1));   // 500 > 100
  EXPECT_TRUE(relax_budget_warning(cfg, 0.01));   // 500 <= 1000
  EXPECT_FALSE(relax_budget_warning(cfg, 0.0));   // undamped: no meaningful bound
}
