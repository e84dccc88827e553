#include "besovlab/spectrum.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace besovlab;

namespace {

CoefVector random_coefficients(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  CoefVector c(n);
  for (auto& x : c) x = normal(rng);
  return c;
}

std::map<double, int> multiplicities(const EigenSystem& es) {
  std::map<double, int> out;
  for (Eigen::Index l = 0; l < es.size(); ++l) ++out[std::round(es.eigenvalues()[l] * 1e6) / 1e6];
  return out;
}

}  // namespace

TEST(CircleSpectrum, EigenvaluesUpToTen) {
  const auto es = build_eigensystem(build_circle(64), 10.0);
  const std::vector<double> expected{0, 1, 1, 4, 4, 9, 9};
  ASSERT_EQ(es.size(), 7);
  for (int l = 0; l < 7; ++l) EXPECT_DOUBLE_EQ(es.eigenvalues()[l], expected[l]);
}

TEST(CircleSpectrum, ConstantAndTrigNormalization) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 10.0);
  for (Eigen::Index i = 0; i < m->size(); ++i) {
    const double x = m->points()(i, 0);
    EXPECT_NEAR(es.eigenfunctions()(i, 0), 1.0 / std::sqrt(2 * oracle::pi), 1e-15);
    EXPECT_NEAR(es.eigenfunctions()(i, circle_cos_index(2)), std::cos(2 * x) / std::sqrt(oracle::pi), 1e-14);
    EXPECT_NEAR(es.eigenfunctions()(i, circle_sin_index(3)), std::sin(3 * x) / std::sqrt(oracle::pi), 1e-14);
  }
}

TEST(CircleSpectrum, Orthonormality) {
  const auto es = build_eigensystem(build_circle(1024), 400.0);
  EXPECT_LT(check_orthonormality(es), 1e-12);
}

TEST(CircleSpectrum, RejectsUnderResolvedBand) {
  EXPECT_THROW(build_eigensystem(build_circle(16), 64.0), std::invalid_argument);
  EXPECT_NO_THROW(build_eigensystem(build_circle(16), 49.0));
  EXPECT_THROW(build_eigensystem(build_circle(16), 0.0), std::invalid_argument);
}

TEST(TorusSpectrum, SumsOfSquares) {
  const auto es = build_eigensystem(build_torus2(16), 5.0);
  const auto mult = multiplicities(es);
  // a^2 + b^2 with signed pairs: 0 -> 1, 1 -> 4, 2 -> 4, 4 -> 4, 5 -> 8
  EXPECT_EQ(mult.at(0.0), 1);
  EXPECT_EQ(mult.at(1.0), 4);
  EXPECT_EQ(mult.at(2.0), 4);
  EXPECT_EQ(mult.at(4.0), 4);
  EXPECT_EQ(mult.at(5.0), 8);
  EXPECT_LT(check_orthonormality(es), 1e-12);
}

TEST(SphereSpectrum, Multiplicities) {
  const auto es = build_eigensystem(build_sphere2(8), 7.0);
  const auto mult = multiplicities(es);
  ASSERT_EQ(mult.size(), 3u);
  EXPECT_EQ(mult.at(0.0), 1);
  EXPECT_EQ(mult.at(2.0), 3);
  EXPECT_EQ(mult.at(6.0), 5);
}

TEST(SphereSpectrum, Orthonormality) {
  const auto es = build_eigensystem(build_sphere2(16), 16.0 * 17.0);
  EXPECT_EQ(es.size(), 17 * 17);
  EXPECT_LT(check_orthonormality(es), 1e-8);
}

TEST(SphereSpectrum, LowDegreesSpanClosedFormHarmonics) {
  const auto m = build_sphere2(8);
  const auto es = build_eigensystem(m, 6.0);
  const auto& ang = m->sphere_angles();
  for (int l = 0; l <= 2; ++l) {
    for (int mm = -l; mm <= l; ++mm) {
      Eigen::VectorXd v(m->size());
      for (Eigen::Index i = 0; i < m->size(); ++i) v[i] = oracle::spherical_harmonic(l, mm, ang(i, 0), ang(i, 1));
      const CoefVector c = project(es, GridFunction(m, v));
      // all mass sits on eigenvalue l(l+1)
      double on = 0.0;
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (std::abs(es.eigenvalues()[k] - l * (l + 1.0)) < 1e-9) on += c[k] * c[k];
      }
      EXPECT_NEAR(on, 1.0, 1e-12);
      EXPECT_NEAR(c.squaredNorm(), 1.0, 1e-12);
    }
  }
}

TEST(SphereSpectrum, RejectsDegreeBeyondQuadrature) {
  EXPECT_THROW(build_eigensystem(build_sphere2(4), 30.0), std::invalid_argument);
  EXPECT_NO_THROW(build_eigensystem(build_sphere2(4), 20.0));
}

TEST(MeshSpectrum, IcosphereFirstEigenvalueNearTwo) {
  const auto es = build_eigensystem(build_mesh_model(make_icosphere(3)), 15.0);
  EXPECT_NEAR(es.eigenvalues()[1], 2.0, 0.2);
  EXPECT_DOUBLE_EQ(es.eigenvalues()[0], 0.0);
}

TEST(MeshSpectrum, Orthonormality) {
  const auto m = build_mesh_model(make_icosphere(3));
  const auto es = build_eigensystem(m, 30.0);
  EXPECT_LT(check_orthonormality(es), 1e-8);
  // constant eigenfunction
  const double c = es.eigenfunctions()(0, 0);
  EXPECT_NEAR((es.eigenfunctions().col(0).array() - c).abs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(c * c * m->total_measure(), 1.0, 1e-12);
}

TEST(EigenSystem, TiesAtCutoffAreIncluded) {
  const auto es = build_eigensystem(build_circle(64), 100.0);
  EXPECT_EQ(es.count_upto(4.0), 5);
  EXPECT_EQ(es.count_upto(3.999), 3);
  EXPECT_EQ(es.count_upto(0.0), 1);
}

TEST(EigenSystem, ConstructorValidation) {
  const auto m = build_circle(8);
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(8, 2);
  EXPECT_THROW(EigenSystem(m, Eigen::Vector2d(1.0, 0.0), U, 1.0), std::invalid_argument);
  EXPECT_THROW(EigenSystem(m, Eigen::Vector2d(0.5, 1.0), U, 1.0), std::invalid_argument);
  EXPECT_THROW(EigenSystem(m, Eigen::Vector3d(0.0, 1.0, 1.0), U, 1.0), std::invalid_argument);
}

TEST(Project, UnitVectorForEigenfunction) {
  const auto m = build_circle(128);
  const auto es = build_eigensystem(m, 100.0);
  const CoefVector c = project(es, GridFunction(m, es.eigenfunctions().col(5)));
  CoefVector e = CoefVector::Zero(es.size());
  e[5] = 1.0;
  EXPECT_LT((c - e).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(project(es, GridFunction::zero(m)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Project, TwoTermTrigPolynomial) {
  const auto m = build_circle(128);
  const auto es = build_eigensystem(m, 100.0);
  const auto f = GridFunction::sample(m, [](const auto& x) { return std::cos(3 * x[0]) + 2 * std::sin(7 * x[0]); });
  const CoefVector c = project(es, f);
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    if (l == circle_cos_index(3)) {
      EXPECT_NEAR(c[l], std::sqrt(oracle::pi), 1e-12);
    } else if (l == circle_sin_index(7)) {
      EXPECT_NEAR(c[l], 2 * std::sqrt(oracle::pi), 1e-12);
    } else {
      EXPECT_NEAR(c[l], 0.0, 1e-12);
    }
  }
}

TEST(Project, ModelMismatch) {
  const auto es = build_eigensystem(build_circle(16), 9.0);
  EXPECT_THROW(project(es, GridFunction::zero(build_circle(32))), std::invalid_argument);
}

TEST(Synthesize, RoundTrips) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 900.0);
  const CoefVector c = random_coefficients(es.size(), 7);
  const GridFunction f = synthesize(es, c);
  EXPECT_LT((project(es, f) - c).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((synthesize(es, project(es, f)).values() - f.values()).cwiseAbs().maxCoeff(), 1e-10);
  // e_0 is the constant 1/sqrt(2 pi)
  CoefVector e0 = CoefVector::Zero(1);
  e0[0] = 1.0;
  EXPECT_NEAR((synthesize(es, e0).values().array() - 1.0 / std::sqrt(2 * oracle::pi)).abs().maxCoeff(), 0.0, 1e-15);
  EXPECT_THROW(synthesize(es, CoefVector::Zero(es.size() + 1)), std::invalid_argument);
}

TEST(Synthesize, Parseval) {
  for (auto m : {build_circle(256), build_torus2(24), build_sphere2(10)}) {
    const double band = m->kind() == ManifoldKind::sphere2 ? 110.0 : 100.0;
    const auto es = build_eigensystem(m, band);
    const CoefVector c = random_coefficients(es.size(), 8);
    const double n2 = lp_norm(synthesize(es, c), 2.0);
    EXPECT_NEAR(n2 * n2, c.squaredNorm(), 1e-10 * c.squaredNorm());
  }
}

TEST(ApplyPower, IdentitiesAndSemigroup) {
  const auto es = build_eigensystem(build_circle(64), 100.0);
  const CoefVector c = random_coefficients(es.size(), 9);
  EXPECT_EQ(apply_power(es, c, 0.0), c);
  CoefVector e = CoefVector::Zero(es.size());
  e[6] = 1.0;
  EXPECT_NEAR(apply_power(es, e, 1.0)[6], es.eigenvalues()[6], 1e-15);
  const CoefVector twice = apply_power(es, apply_power(es, c, 0.5), 0.5);
  const CoefVector once = apply_power(es, c, 1.0);
  EXPECT_LT((twice - once).cwiseAbs().maxCoeff(), 1e-12 * once.cwiseAbs().maxCoeff());
  const CoefVector a = apply_power(es, apply_power(es, c, 0.3), 1.2);
  const CoefVector b = apply_power(es, c, 1.5);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
  EXPECT_EQ(apply_power(es, c, 1.0)[0], 0.0);
  EXPECT_THROW(apply_power(es, c, -1.0), std::invalid_argument);
}

TEST(Export, JsonRoundTrip) {
  const auto m = build_mesh_model(make_icosphere(1));
  const auto es = build_eigensystem(m, 7.0);
  const auto doc = export_eigensystem(es);
  const auto back = import_eigensystem(nlohmann::json::parse(doc.dump()), m);
  EXPECT_EQ(back.size(), es.size());
  EXPECT_LT((back.eigenvalues() - es.eigenvalues()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((back.eigenfunctions() - es.eigenfunctions()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(back.labels(), es.labels());
  EXPECT_THROW(import_eigensystem(doc, build_mesh_model(make_icosphere(2))), std::invalid_argument);
}

TEST(CompletenessBound, NextEigenvalue) {
  EXPECT_DOUBLE_EQ(completeness_bound(build_eigensystem(build_circle(512), 255.0 * 255.0)), 256.0 * 256.0);
  EXPECT_DOUBLE_EQ(completeness_bound(build_eigensystem(build_sphere2(8), 20.0)), 30.0);
  EXPECT_DOUBLE_EQ(completeness_bound(build_eigensystem(build_sphere2(8), 25.0)), 30.0);
}
