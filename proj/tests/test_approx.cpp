#include "besovlab/approx.hpp"
#include "besovlab/lp_solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace besovlab;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

GridFunction random_in_span(const EigenSystem& es, Eigen::Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  CoefVector c = CoefVector::Zero(count);
  for (auto& x : c) x = normal(rng);
  return synthesize(es, c);
}

GridFunction lacunary8(const ModelPtr& m, double alpha) {
  return GridFunction::sample(m, [&](const auto& x) {
    double s = 0.0;
    for (int k = 1; k <= 8; ++k) s += std::pow(2.0, -alpha * k) * std::cos(std::ldexp(1.0, k) * x[0]);
    return s;
  });
}

}  // namespace

TEST(LpSolver, SmallBoundedProblem) {
  // min -x0 - 2 x1  s.t.  x0 + x1 + x2 = 4,  x0 <= 3,  x1 <= 2 : optimum (2, 2, 0), value -6
  BoundedLp lp;
  lp.A = Eigen::MatrixXd(1, 3);
  lp.A << 1, 1, 1;
  lp.b = Eigen::VectorXd::Constant(1, 4.0);
  lp.c = Eigen::Vector3d(-1, -2, 0);
  lp.upper = Eigen::Vector3d(3, 2, kInf);
  const auto sol = solve_lp(lp);
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.primal_objective, -6.0, 1e-8);
  EXPECT_NEAR(sol.dual_objective, -6.0, 1e-8);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-6);
  EXPECT_NEAR(sol.x[1], 2.0, 1e-6);
}

TEST(LpSolver, RejectsInconsistentShapes) {
  BoundedLp lp;
  lp.A = Eigen::MatrixXd::Ones(2, 3);
  lp.b = Eigen::VectorXd::Ones(1);
  lp.c = Eigen::VectorXd::Ones(3);
  lp.upper = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(solve_lp(lp), std::invalid_argument);
}

TEST(BestApprox, EigenfunctionInsideSpan) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 100.0);
  const GridFunction u(m, es.eigenfunctions().col(6));
  for (double p : {1.0, 1.5, 2.0, 4.0, kInf}) {
    const auto r = best_approx(es, u, 9.0, p);
    EXPECT_LT(r.error, 1e-12) << p;
    EXPECT_NEAR(r.coefficients[6], 1.0, 1e-10);
  }
}

TEST(BestApprox, EigenfunctionOutsideSpanP2) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 100.0);
  const GridFunction u(m, es.eigenfunctions().col(9));  // lambda = 25
  const auto r = best_approx(es, u, 16.0, 2.0);
  EXPECT_NEAR(r.error, lp_norm(u, 2.0), 1e-12);
  EXPECT_EQ(r.solver, ApproxSolver::projection);
}

TEST(BestApprox, LacunaryParsevalTail) {
  const auto m = build_circle(1024);
  const auto es = build_eigensystem(m, 511.0 * 511.0);
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto f = lacunary8(m, alpha);
    for (int j = 0; j <= 8; ++j) {
      const auto r = best_approx(es, f, std::ldexp(1.0, 2 * j), 2.0);
      EXPECT_NEAR(r.error, oracle::lacunary_tail(alpha, 8, j), 1e-10) << alpha << " " << j;
    }
  }
}

TEST(BestApprox, ConstantsMatchScalarOracles) {
  // span{lambda <= 0.5} is the constants
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 100.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::exp(std::sin(x[0])) + 0.3 * std::cos(5 * x[0]); });
  const auto fv = to_std(f.values()), w = to_std(m->weights());
  EXPECT_NEAR(best_approx(es, f, 0.5, kInf).error, oracle::chebyshev_constant_error(fv), 1e-8);
  EXPECT_NEAR(best_approx(es, f, 0.5, 1.0).error, oracle::constant_lp_error(fv, w, 1.0), 1e-8);
  for (double p : {1.3, 3.0, 6.0}) {
    EXPECT_NEAR(best_approx(es, f, 0.5, p).error, oracle::constant_lp_error(fv, w, p), 1e-7) << p;
  }
}

TEST(BestApprox, TwoFunctionSpanMatchesNestedSearch) {
  // span{1, cos x, sin x} with f even: an optimal sin coefficient is 0.
  const auto m = build_circle(48);
  const auto es = build_eigensystem(m, 100.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::exp(std::cos(x[0])) + 0.2 * std::cos(3 * x[0]); });
  const Eigen::VectorXd g = es.eigenfunctions().col(circle_cos_index(1));
  const auto fv = to_std(f.values()), gv = to_std(g), w = to_std(m->weights());
  for (double p : {1.0, kInf}) {
    const double expected = oracle::two_function_error(fv, gv, w, p, 10.0);
    EXPECT_NEAR(best_approx(es, f, 1.0, p).error, expected, 1e-7) << p;
  }
}

TEST(BestApprox, MonotoneInOmegaAndBoundedByNorm) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 127.0 * 127.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::abs(std::sin(x[0])) + 0.1 * x[0]; });
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    double prev = kInf;
    for (double omega : {0.0, 1.0, 4.0, 9.0, 30.0, 100.0, 400.0}) {
      const auto r = best_approx(es, f, omega, p);
      EXPECT_TRUE(r.converged) << p << " " << omega;
      EXPECT_LE(r.error, prev * (1 + 1e-9) + 1e-12) << p << " " << omega;
      EXPECT_LE(r.error, lp_norm(f, p) * (1 + 1e-12));
      EXPECT_LE(r.lower_bound, r.error * (1 + 1e-12));
      prev = r.error;
    }
  }
}

TEST(BestApprox, MonotoneInPOnNormalizedMeasure) {
  const auto m = build_circle(128);
  const auto es = build_eigensystem(m, 63.0 * 63.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::exp(std::sin(3 * x[0])) * std::cos(x[0]); });
  double prev = 0.0;
  for (double p : {1.0, 1.5, 2.0, 3.0, 5.0, kInf}) {
    const double scaled = best_approx(es, f, 4.0, p).error / std::pow(m->total_measure(), std::isinf(p) ? 0.0 : 1.0 / p);
    EXPECT_GE(scaled, prev * (1 - 1e-7)) << p;
    prev = scaled;
  }
}

TEST(BestApprox, IrlsNearTwoMatchesProjection) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 127.0 * 127.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = random_in_span(es, es.count_upto(400.0), seed);
    const double exact = best_approx(es, f, 64.0, 2.0).error;
    const auto r = best_approx(es, f, 64.0, 2.0001);
    EXPECT_EQ(r.solver, ApproxSolver::irls);
    EXPECT_NEAR(r.error, exact, 1e-4 * exact);
  }
}

TEST(BestApprox, LpNeverWorseThanProjection) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 127.0 * 127.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = random_in_span(es, es.count_upto(400.0), seed);
    const auto proj = best_approx(es, f, 64.0, 2.0);
    const Eigen::VectorXd r2 = f.values() - es.basis(proj.coefficients.size()) * proj.coefficients;
    for (double p : {1.0, kInf}) {
      const auto r = best_approx(es, f, 64.0, p);
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.error, lp_norm(*m, r2, p) * (1 + 1e-12));
      EXPECT_LE(r.error - r.lower_bound, 1e-7 * lp_norm(f, p));
    }
  }
}

TEST(BestApprox, OptimalityCertificate) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 127.0 * 127.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::exp(std::sin(x[0])) + std::abs(std::cos(x[0])); });
  for (double p : {1.5, 3.0, 4.0}) {
    const auto r = best_approx(es, f, 16.0, p);
    ASSERT_TRUE(r.converged) << p;
    EXPECT_LT(optimality_gradient_norm(es, f, r), 1e-6 * std::pow(lp_norm(f, p), p - 1)) << p;
  }
}

TEST(BestApprox, Errors) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 100.0);
  const auto f = GridFunction::zero(m);
  EXPECT_THROW(best_approx(es, f, 200.0, 2.0), std::invalid_argument);
  EXPECT_THROW(best_approx(es, f, 4.0, 0.5), std::invalid_argument);
  EXPECT_THROW(best_approx(es, GridFunction::zero(build_circle(32)), 4.0, 2.0), std::invalid_argument);
  EXPECT_EQ(best_approx(es, f, 4.0, kInf).error, 0.0);
}

TEST(BestApprox, TiesAtCutoffIncluded) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 100.0);
  const GridFunction u(m, es.eigenfunctions().col(circle_sin_index(2)));
  EXPECT_LT(best_approx(es, u, 4.0, 2.0).error, 1e-12);
  EXPECT_NEAR(best_approx(es, u, 3.9999, 2.0).error, 1.0, 1e-12);
}

TEST(ErrorSequence, StepForEigenfunction) {
  // 160 nodes contain every extremum and zero of cos 5x, so 0 is optimal for all p
  const auto m = build_circle(160);
  const auto es = build_eigensystem(m, 79.0 * 79.0);
  const GridFunction u(m, es.eigenfunctions().col(circle_cos_index(5)));  // lambda = 25
  for (double p : {1.0, 2.0, kInf}) {
    const auto seq = error_sequence(es, u, p, 4);
    ASSERT_EQ(seq.size(), 5u);
    for (int j = 0; j <= 4; ++j) {
      if (std::ldexp(1.0, 2 * j) >= 25.0) {
        EXPECT_LT(seq[j].error, 1e-10) << p << " " << j;
      } else {
        EXPECT_NEAR(seq[j].error, lp_norm(u, p), 1e-8 * lp_norm(u, p)) << p << " " << j;
      }
    }
  }
  EXPECT_THROW(error_sequence(es, u, 2.0, 7), std::invalid_argument);
}

TEST(ErrorSequence, LacunarySlope) {
  const auto m = build_circle(1024);
  const auto es = build_eigensystem(m, 16384.0);
  const auto f = lacunary8(m, 1.0);
  const auto seq = error_sequence(es, f, 2.0, 6);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j <= 6; ++j) {
    const double y = std::log2(seq[j].error);
    sx += j;
    sy += y;
    sxx += j * j;
    sxy += j * y;
  }
  const double slope = (7 * sxy - sx * sy) / (7 * sxx - sx * sx);
  EXPECT_NEAR(slope, -1.0, 0.1);
}

TEST(ErrorSequence, ZeroBeyondBand) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 256.0);
  const auto f = random_in_span(es, es.count_upto(1.0), 3);
  for (const auto& r : error_sequence(es, f, kInf, 4)) EXPECT_LT(r.error, 1e-12);
}

TEST(BestApprox, SphereAndMesh) {
  const auto sphere = build_sphere2(8);
  const auto es = build_eigensystem(sphere, 72.0);
  const auto f = random_in_span(es, es.size(), 4);
  for (double p : {1.0, 2.0, 3.0, kInf}) {
    const auto r = best_approx(es, f, 12.0, p);
    EXPECT_TRUE(r.converged) << p;
    EXPECT_LE(r.error, lp_norm(f, p));
    EXPECT_GT(r.error, 0.0);
  }
  const auto mesh = build_mesh_model(make_icosphere(2));
  const auto mes = build_eigensystem(mesh, 20.0);
  const auto g = GridFunction::sample(mesh, [](const auto& x) { return x[0] * x[0] * x[2] + std::abs(x[1]); });
  for (double p : {1.0, 2.0, 3.0, kInf}) {
    const auto r = best_approx(mes, g, 7.0, p);
    EXPECT_TRUE(r.converged) << p;
    EXPECT_LE(r.error, lp_norm(g, p));
  }
}
