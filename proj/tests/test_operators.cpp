#include "besovlab/filters.hpp"
#include "besovlab/operators.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace besovlab;

namespace {

GridFunction random_bandlimited_function(const EigenSystem& es, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  CoefVector c(es.size());
  for (auto& x : c) x = normal(rng);
  return synthesize(es, c);
}

// F(8) = h(2) - h(8) from the smooth-step definition.
double reference_F8() {
  auto g = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  auto h = [&](double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 4.0) return 0.0;
    return g((4.0 - x) / 3.0) / (g((4.0 - x) / 3.0) + g((x - 1.0) / 3.0));
  };
  return h(2.0) - h(8.0);
}

struct CircleFixture : ::testing::Test {
  ModelPtr m = build_circle(128);
  EigenSystem es = build_eigensystem(m, 63.0 * 63.0);
  FilterFamily fam;
};

}  // namespace

TEST_F(CircleFixture, LowPassAtSmallScaleIsIdentity) {
  const double t = 1.0 / std::sqrt(es.band_limit());
  const auto f = random_bandlimited_function(es, 1);
  const auto g = apply_filter(es, [&](double x) { return fam.h(x); }, t, f);
  EXPECT_LT((g.values() - f.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(CircleFixture, BandPassKillsConstants) {
  const auto one = GridFunction::sample(m, [](const auto&) { return 1.0; });
  const auto g = apply_filter(es, [&](double x) { return fam.F(x); }, 0.3, one);
  EXPECT_LT(g.values().cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(CircleFixture, F2OnSingleEigenfunction) {
  // t^2 lambda = 8 * 4 with lambda = 16 (cos 4x) and F_2(y) = F(y / 4)
  const Eigen::Index l = circle_cos_index(4);
  const double t = std::sqrt(32.0 / 16.0);
  const GridFunction u(m, es.eigenfunctions().col(l));
  const auto g = apply_filter(es, [&](double x) { return fam.Fj(2, x); }, t, u);
  const double expected = reference_F8();
  EXPECT_LT((g.values() - expected * u.values()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST_F(CircleFixture, KernelQuadratureMatchesCoefficients) {
  for (double t : {0.05, 0.2, 0.7}) {
    const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, t, "F");
    EXPECT_LT(kernel_asymmetry(K), 1e-10);
    for (std::uint64_t seed : {2u, 3u, 4u}) {
      const auto f = random_bandlimited_function(es, seed);
      const auto a = apply_filter(es, [&](double x) { return fam.F(x); }, t, f);
      const auto b = apply_kernel(K, f);
      EXPECT_LT((a.values() - b.values()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST_F(CircleFixture, ReproducingKernelTrace) {
  const auto K = build_kernel(es, [](double) { return 1.0; }, 1.0);
  double trace = 0.0;
  for (Eigen::Index i = 0; i < m->size(); ++i) trace += m->weights()[i] * K.values(i, i);
  EXPECT_NEAR(trace, static_cast<double>(es.size()), 1e-9);
  const auto Z = build_kernel(es, [](double) { return 0.0; }, 1.0);
  EXPECT_EQ(Z.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(CircleFixture, AlphaNorms) {
  const auto Z = build_kernel(es, [](double) { return 0.0; }, 1.0);
  const auto zn = kernel_alpha_norms(Z, 1.0);
  EXPECT_EQ(zn.row_max, 0.0);
  EXPECT_EQ(zn.column_max, 0.0);
  const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, 0.25, "F");
  for (double a : {1.0, 1.5, 2.0, kInf}) {
    const auto n = kernel_alpha_norms(K, a);
    EXPECT_NEAR(n.row_max, n.column_max, 1e-12 * n.row_max);
  }
  EXPECT_THROW(kernel_alpha_norms(K, 0.5), std::invalid_argument);
}

TEST(Operators, AlphaOneNormAtQuarterScale) {
  // Regression value: circle n = 512, G = F, t = 1/4.
  const auto m = build_circle(512);
  const auto es = build_eigensystem(m, 255.0 * 255.0);
  const FilterFamily fam;
  const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, 0.25, "F");
  const double n1 = kernel_alpha_norms(K, 1.0).max();
  EXPECT_GT(n1, 1.0);
  EXPECT_LT(n1, 3.0);
}

TEST_F(CircleFixture, YoungRandomized) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = 0.05 + 0.9 * u(rng);
    const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, t);
    const double ip = u(rng);
    const double ia = 1.0 - ip + ip * u(rng);
    const double iq = std::max(0.0, ip + ia - 1.0);
    const double p = ip == 0.0 ? kInf : 1.0 / ip, q = iq == 0.0 ? kInf : 1.0 / iq;
    Eigen::VectorXd v(m->size());
    for (auto& x : v) x = normal(rng);
    const auto y = young_apply_check(K, GridFunction(m, v), p, q, 1.0 / ia);
    EXPECT_GE(y.slack(), -1e-12 * std::max(1.0, y.rhs));
  }
}

TEST_F(CircleFixture, YoungIdentityCaseAndNonnegative) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // p = q, alpha = 1
  for (int trial = 0; trial < 100; ++trial) {
    const auto K = build_kernel(es, [&](double x) { return fam.h(x); }, 0.05 + u(rng));
    Eigen::VectorXd v(m->size());
    for (auto& x : v) x = u(rng) - 0.5;
    const double p = 1.0 + 5.0 * u(rng);
    const auto y = young_apply_check(K, GridFunction(m, v), p, p, 1.0);
    EXPECT_GE(y.slack(), -1e-12 * std::max(1.0, y.rhs));
  }
  // random nonnegative kernels with p = 1, q = alpha
  for (int trial = 0; trial < 50; ++trial) {
    KernelMatrix K{m, 1.0, "random", Eigen::MatrixXd(m->size(), m->size())};
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) K.values(i, j) = K.values(j, i) = u(rng);
    }
    Eigen::VectorXd v(m->size());
    for (auto& x : v) x = u(rng);
    const double a = 1.0 + 4.0 * u(rng);
    const auto y = young_apply_check(K, GridFunction(m, v), 1.0, a, a);
    EXPECT_GE(y.slack(), -1e-12 * std::max(1.0, y.rhs));
  }
}

TEST_F(CircleFixture, YoungRejectsBadExponents) {
  const auto K = build_kernel(es, [](double) { return 0.0; }, 1.0);
  const auto y = young_apply_check(K, GridFunction::zero(m), 2.0, 2.0, 1.0);
  EXPECT_EQ(y.lhs, 0.0);
  EXPECT_EQ(y.rhs, 0.0);
  EXPECT_THROW(young_apply_check(K, GridFunction::zero(m), 2.0, 3.0, 1.0), std::invalid_argument);
}

TEST_F(CircleFixture, DecayFitIsMinimalAndMonotoneInN) {
  const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, 0.2, "F");
  const auto fit = fit_decay_constant(K, 3.0);
  // the bound holds everywhere and is attained at the argmax pair
  for (Eigen::Index i = 0; i < m->size(); i += 7) {
    for (Eigen::Index j = 0; j < m->size(); ++j) {
      const double bound = fit.C / (0.2 * std::pow(1.0 + m->distance(i, j) / 0.2, 3.0));
      EXPECT_LE(std::abs(K.values(i, j)), bound * (1.0 + 1e-12));
    }
  }
  const double at = std::abs(K.values(fit.argmax_row, fit.argmax_col)) * 0.2 *
                    std::pow(1.0 + m->distance(fit.argmax_row, fit.argmax_col) / 0.2, 3.0);
  EXPECT_NEAR(at, fit.C, 1e-12 * fit.C);
  EXPECT_GE(fit_decay_constant(K, 6.0).C, fit.C);
  const auto Z = build_kernel(es, [](double) { return 0.0; }, 0.2);
  EXPECT_EQ(fit_decay_constant(Z, 3.0).C, 0.0);
  EXPECT_THROW(fit_decay_constant(K, 1.0), std::invalid_argument);
}

TEST(Operators, DecayConstantUniformOnCircle) {
  const auto m = build_circle(512);
  const auto es = build_eigensystem(m, 255.0 * 255.0);
  const FilterFamily fam;
  double lo = kInf, hi = 0.0;
  for (int e = 2; e <= 6; ++e) {
    const auto K = build_kernel(es, [&](double x) { return fam.F(x); }, std::ldexp(1.0, -e));
    const double C = fit_decay_constant(K, 3.0).C;
    lo = std::min(lo, C);
    hi = std::max(hi, C);
  }
  EXPECT_LT(hi / lo, 4.0);
}

TEST(Operators, VolumeIntegralOnCircle) {
  const auto m = build_circle(512);
  // continuum value: t^-1 int_{-pi}^{pi} (1 + |x|/t)^-3 dx -> 1 as t -> 0
  const double v = volume_integral_bound(*m, 1.0 / 64, 3.0);
  EXPECT_NEAR(v, 1.0, 0.3);
  const std::vector<Eigen::Index> one{5};
  EXPECT_NEAR(volume_integral_bound(*m, 0.1, 3.0, one), volume_integral_bound(*m, 0.1, 3.0), 1e-12);
}

TEST_F(CircleFixture, OperatorNormEstimates) {
  // |G| <= 1 gives ||G(t^2 L)||_{2->2} <= 1
  const double e2 = operator_norm_estimate(es, [&](double x) { return fam.F(x); }, 0.1, 2.0, 2.0, 40, 1);
  EXPECT_LE(e2, 1.0 + 1e-12);
  EXPECT_GT(e2, 0.9);
  EXPECT_EQ(operator_norm_estimate(es, [](double) { return 0.0; }, 0.1, 1.0, 1.0, 10, 1), 0.0);
  const double a = operator_norm_estimate(es, [&](double x) { return fam.F(x); }, 0.1, 1.0, 1.0, 40, 7);
  const double b = operator_norm_estimate(es, [&](double x) { return fam.F(x); }, 0.1, 1.0, 1.0, 40, 7);
  EXPECT_EQ(a, b);
  EXPECT_THROW(operator_norm_estimate(es, [](double) { return 1.0; }, 0.1, 1.0, 1.0, 0, 1), std::invalid_argument);
}

TEST(Operators, OperatorNormNoGrowthOnCircle) {
  const auto m = build_circle(512);
  const auto es = build_eigensystem(m, 255.0 * 255.0);
  const FilterFamily fam;
  for (double p : {1.0, 2.0, kInf}) {
    double lo = kInf, hi = 0.0;
    for (int e = 1; e <= 6; ++e) {
      const double v = operator_norm_estimate(es, [&](double x) { return fam.F(x); }, std::ldexp(1.0, -e), p, p, 40, 3);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_LT(hi / lo, 2.0) << p;
  }
}

TEST(Operators, FilterMustBeFinite) {
  const auto es = build_eigensystem(build_circle(16), 9.0);
  EXPECT_THROW(filter_multipliers(es, [](double x) { return 1.0 / x; }, 1.0), std::invalid_argument);
  EXPECT_THROW(filter_multipliers(es, [](double) { return 1.0; }, 0.0), std::invalid_argument);
}
