#include "nep/costs.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace nep;

namespace {

// Independent extended-precision softmax used as the oracle.
std::vector<double> softmax_oracle(const std::vector<double>& z) {
  long double zmax = z[0];
  for (double v : z) zmax = std::max<long double>(zmax, v);
  long double sum = 0.0L;
  std::vector<long double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    e[i] = expl((long double)z[i] - zmax);
    sum += e[i];
  }
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (double)(e[i] / sum);
  return out;
}

}  // namespace

TEST(Softmax, EqualInputs) {
  auto p = softmax({0.0, 0.0});
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(Softmax, LargeValuesStable) {
  auto p = softmax({1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(Softmax, MatchesOracle) {
  const std::vector<double> z{1.0, 2.0, 3.0};
  auto p = softmax(z);
  auto q = softmax_oracle(z);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z(4);
    for (auto& v : z) v = u(gen);
    auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    std::vector<double> shifted(z);
    for (auto& v : shifted) v += 3.7;
    auto q = softmax(shifted);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Softmax, EmptyThrows) { EXPECT_THROW(softmax({}), DimensionError); }

TEST(MseCost, Examples) {
  EXPECT_EQ(mse_cost({0.25, 0.75}, {0.25, 0.75}), 0.0);
  EXPECT_NEAR(mse_cost({0.0}, {1.0}), 0.5, 1e-15);
  EXPECT_NEAR(mse_cost({0.92}, {1.0}), 0.0032, 1e-12);
}

TEST(MseCost, LengthMismatchThrows) { EXPECT_THROW(mse_cost({0.1}, {0.1, 0.2}), DimensionError); }

TEST(CceCost, EqualIntensities) {
  EXPECT_NEAR(cce_cost({0.4, 0.4}, {1.0, 0.0}), std::log(2.0), 1e-12);
}

TEST(CceCost, MatchesDirectFormula) {
  // one-hot on node 0 with readout (3,0,0,0,0): -ln(e^3/(e^3+4))
  const long double e3 = expl(3.0L);
  const double expected = (double)(-logl(e3 / (e3 + 4.0L)));
  EXPECT_NEAR(cce_cost({3.0, 0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 0.0}), expected, 1e-12);
}

TEST(CceCost, FiniteForFiniteReadouts) {
  EXPECT_TRUE(std::isfinite(cce_cost({0.0, 700.0}, {1.0, 0.0})));
}

TEST(CceCost, RejectsInvalidOneHot) {
  EXPECT_THROW(cce_cost({0.1, 0.2}, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(cce_cost({0.1, 0.2}, {1.0, 1.0}), ConfigError);
  EXPECT_THROW(cce_cost({0.1, 0.2}, {0.0, 0.0}), ConfigError);
}

TEST(Costs, PermutationEquivariance) {
  const std::vector<double> r{0.3, 0.9, 0.1};
  const std::vector<double> t{0.0, 1.0, 0.0};
  const std::vector<int> perm{2, 0, 1};
  std::vector<double> rp(3), tp(3);
  for (int i = 0; i < 3; ++i) {
    rp[i] = r[perm[i]];
    tp[i] = t[perm[i]];
  }
  EXPECT_NEAR(mse_cost(r, t), mse_cost(rp, tp), 1e-15);
  EXPECT_NEAR(cce_cost(r, t), cce_cost(rp, tp), 1e-15);
}

TEST(Predict, ExamplesAndTies) {
  EXPECT_EQ(predict({0.1, 0.9}), 1);
  EXPECT_EQ(predict({0.5, 0.5}), 0);
  EXPECT_EQ(predict({0.2, 0.7, 0.7}), 1);
}

TEST(Predict, MonotoneTransformInvariant) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> r(5);
    for (auto& v : r) v = u(gen);
    std::vector<double> mapped(5);
    for (int i = 0; i < 5; ++i) mapped[i] = std::exp(2.0 * r[i]) + 1.0;
    EXPECT_EQ(predict(r), predict(mapped));
  }
}

TEST(OutputReadout, IntensitiesInRegionOrder) {
  ComplexField psi{{1.0, 1.0}, {0.0, 2.0}, {3.0, 0.0}};
  auto r = output_readout(psi, {2, 0});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0], 9.0, 1e-15);
  EXPECT_NEAR(r[1], 2.0, 1e-15);
  for (double v : r) EXPECT_GE(v, 0.0);
  EXPECT_THROW(output_readout(psi, {3}), DimensionError);
}
