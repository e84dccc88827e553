#include "besovlab/approx.hpp"
#include "besovlab/corpus.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace besovlab;

TEST(Corpus, KnownCoefficientsMatchProjection) {
  const auto m = build_circle(512);
  const auto es = build_eigensystem(m, 255.0 * 255.0);
  for (const auto& e : default_corpus(7)) {
    if (!e.known_coefficients || !e.coefficients_exact) continue;
    const CoefVector c = project(es, e.build(es));
    CoefVector expected = CoefVector::Zero(c.size());
    for (const auto& [l, v] : *e.known_coefficients) expected[l] = v;
    EXPECT_LT((c - expected).cwiseAbs().maxCoeff(), 1e-12) << e.id;
  }
}

TEST(Corpus, LacunaryThreeTerms) {
  const auto m = build_circle(64);
  const auto es = build_eigensystem(m, 900.0);
  const auto f = lacunary(1.0, 3).build(es);
  for (Eigen::Index i = 0; i < m->size(); ++i) {
    const double x = 2 * oracle::pi * static_cast<double>(i) / 64.0;
    EXPECT_NEAR(f.values()[i], 0.5 * std::cos(2 * x) + 0.25 * std::cos(4 * x) + 0.125 * std::cos(8 * x), 1e-14);
  }
  EXPECT_THROW(lacunary(1.0, 5).build(es), std::invalid_argument);
  EXPECT_THROW(lacunary(0.0, 5), std::invalid_argument);
  EXPECT_THROW(lacunary(1.0, 1), std::invalid_argument);
}

TEST(Corpus, SquareWaveCoefficientsApproximate) {
  const auto m = build_circle(4096);
  const auto es = build_eigensystem(m, 2047.0 * 2047.0);
  const auto e = square_wave();
  const CoefVector c = project(es, e.build(es));
  for (const auto& [l, v] : *e.known_coefficients) EXPECT_NEAR(c[l], v, 1e-4) << l;
}

TEST(Corpus, SquareWaveTailWithinTwoPercent) {
  const auto m = build_circle(4096);
  const auto es = build_eigensystem(m, 4096.0 * 4.0);
  const auto f = square_wave().build(es);
  for (int j = 3; j <= 6; ++j) {
    const double e = best_approx(es, f, std::ldexp(1.0, 2 * j), 2.0).error;
    EXPECT_NEAR(e / oracle::square_wave_tail(j), 1.0, 0.02) << j;
  }
}

TEST(Corpus, RandomBandLimited) {
  const auto m = build_circle(256);
  const auto es = build_eigensystem(m, 127.0 * 127.0);
  const auto e = random_bandlimited(400.0, 7);
  const auto f = e.build(es), g = e.build(es);
  EXPECT_EQ(f.values(), g.values());
  const CoefVector c = project(es, f);
  EXPECT_NEAR(c.norm(), 1.0, 1e-12);
  EXPECT_LT(c.tail(c.size() - es.count_upto(400.0)).norm(), 1e-12);
  EXPECT_NE(random_bandlimited(400.0, 8).build(es).values(), f.values());
  EXPECT_THROW(random_bandlimited(1e6, 1).build(es), std::invalid_argument);
}

TEST(Corpus, EigenPureAndCircleOnly) {
  const auto s = build_sphere2(6);
  const auto es = build_eigensystem(s, 42.0);
  const auto f = eigen_pure(5).build(es);
  EXPECT_EQ(f.values(), es.eigenfunctions().col(5));
  EXPECT_THROW(eigen_pure(10000).build(es), std::invalid_argument);
  EXPECT_THROW(square_wave().build(es), std::invalid_argument);
  EXPECT_THROW(lacunary(1.0, 3).build(es), std::invalid_argument);
}

TEST(Corpus, ManifestListsUniqueIds) {
  const auto corpus = default_corpus();
  ASSERT_EQ(corpus.size(), 10u);
  const auto manifest = corpus_manifest(corpus);
  std::set<std::string> ids;
  for (const auto& item : manifest) {
    ids.insert(item.at("id").get<std::string>());
    EXPECT_TRUE(item.contains("params"));
    EXPECT_TRUE(item.contains("expected_rate"));
  }
  EXPECT_EQ(ids.size(), corpus.size());
  EXPECT_EQ(manifest[0].at("expected_rate").get<double>(), 0.5);
  EXPECT_TRUE(manifest[5].at("expected_rate").is_null());
}
