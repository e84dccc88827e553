#pragma once

#include "besovlab/spectrum.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace besovlab {

/// A test function with known spectral content.
struct CorpusEntry {
  std::string id;
  nlohmann::json params;
  std::function<GridFunction(const EigenSystem&)> build;
  /// (basis index, coefficient) pairs in the circle ordering; exact on any
  /// grid that resolves them unless `coefficients_exact` is false.
  std::optional<std::vector<std::pair<Eigen::Index, double>>> known_coefficients;
  bool coefficients_exact = true;
  std::optional<double> expected_rate;  // decay exponent of E(f, 4^j, 2) in j
  std::string notes;
  bool circle_only = false;
};

namespace detail {

inline void require_circle(const EigenSystem& es, const std::string& id) {
  if (es.model()->kind() != ManifoldKind::circle) throw std::invalid_argument(id + " is defined on the circle only");
}

}  // namespace detail

/// f(x) = sum_{m=1}^{M} 2^(-alpha m) cos(2^m x).
inline CorpusEntry lacunary(double alpha, int M) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lacunary needs alpha > 0");
  if (M < 2) throw std::invalid_argument("lacunary needs M >= 2");
  CorpusEntry e;
  e.id = "lacunary_a" + nlohmann::json(alpha).dump() + "_M" + std::to_string(M);
  e.params = {{"alpha", alpha}, {"M", M}};
  e.circle_only = true;
  e.build = [alpha, M, id = e.id](const EigenSystem& es) {
    detail::require_circle(es, id);
    const int n = static_cast<int>(es.model()->size());
    if (2 * (1 << M) >= n) throw std::invalid_argument(id + ": grid does not resolve frequency 2^M");
    return GridFunction::sample(es.model(), [&](const auto& x) {
      double s = 0.0;
      for (int m = 1; m <= M; ++m) s += std::exp2(-alpha * m) * std::cos(std::ldexp(1.0, m) * x[0]);
      return s;
    });
  };
  std::vector<std::pair<Eigen::Index, double>> coefs;
  for (int m = 1; m <= M; ++m) coefs.emplace_back(circle_cos_index(1 << m), std::exp2(-alpha * m) * std::sqrt(kPi));
  e.known_coefficients = std::move(coefs);
  e.expected_rate = alpha;
  e.notes = "lacunary cosine series; E(f,4^j,2)^2 = pi sum_{m>j} 4^(-alpha m)";
  return e;
}

/// f = u_l, the l-th eigenfunction of whatever eigensystem it is built on.
inline CorpusEntry eigen_pure(Eigen::Index l) {
  if (l < 0) throw std::invalid_argument("eigen_pure needs l >= 0");
  CorpusEntry e;
  e.id = "eigen_pure_" + std::to_string(l);
  e.params = {{"l", l}};
  e.build = [l](const EigenSystem& es) {
    if (l >= es.size()) throw std::invalid_argument("eigen_pure: index beyond the eigensystem");
    return GridFunction(es.model(), es.eigenfunctions().col(l));
  };
  e.known_coefficients = std::vector<std::pair<Eigen::Index, double>>{{l, 1.0}};
  e.notes = "single eigenfunction; error sequence is one step";
  return e;
}

/// i.i.d. standard normal coefficients on {lambda_l <= omega}, normalized
/// to unit L_2 norm.
inline CorpusEntry random_bandlimited(double omega, std::uint64_t seed) {
  CorpusEntry e;
  e.id = "random_bl_w" + nlohmann::json(omega).dump() + "_s" + std::to_string(seed);
  e.params = {{"omega", omega}, {"seed", seed}};
  e.build = [omega, seed](const EigenSystem& es) {
    if (omega > es.band_limit() * (1.0 + 1e-12)) throw std::invalid_argument("random_bandlimited: omega above band");
    const Eigen::Index count = es.count_upto(omega);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    CoefVector c = CoefVector::Zero(es.size());
    for (Eigen::Index l = 0; l < count; ++l) c[l] = normal(rng);
    c /= c.norm();
    return synthesize(es, c);
  };
  e.notes = "random element of E_omega(L)";
  return e;
}

/// f = sign(sin x); Fourier coefficients 4/(pi m) on sin(m x), m odd.
inline CorpusEntry square_wave() {
  CorpusEntry e;
  e.id = "square_wave";
  e.params = nlohmann::json::object();
  e.circle_only = true;
  e.build = [](const EigenSystem& es) {
    detail::require_circle(es, "square_wave");
    // right-continuous at the jumps: +1 on [0, pi), -1 on [pi, 2 pi)
    return GridFunction::sample(es.model(), [](const auto& x) { return x[0] < kPi - 1e-12 ? 1.0 : -1.0; });
  };
  std::vector<std::pair<Eigen::Index, double>> coefs;
  for (int m = 1; m <= 15; m += 2) coefs.emplace_back(circle_sin_index(m), 4.0 / (kPi * m) * std::sqrt(kPi));
  e.known_coefficients = std::move(coefs);
  e.coefficients_exact = false;  // sampled jump: aliasing of order 1/n
  e.expected_rate = 0.5;
  e.notes = "jump discontinuity; E(f,4^j,2)^2 = (16/pi) sum_{odd m>2^j} m^-2";
  return e;
}

/// The ten-function circle corpus used by the acceptance and CLI runs.
inline std::vector<CorpusEntry> default_corpus(int M = 7) {
  return {lacunary(0.5, M),       lacunary(1.0, M),       lacunary(1.5, M),  lacunary(2.0, M),
          square_wave(),          eigen_pure(5),          eigen_pure(17),    random_bandlimited(64.0, 1),
          random_bandlimited(400.0, 2), random_bandlimited(4096.0, 3)};
}

inline nlohmann::json corpus_manifest(const std::vector<CorpusEntry>& entries) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item{{"id", e.id}, {"params", e.params}, {"notes", e.notes}};
    item["expected_rate"] = e.expected_rate ? nlohmann::json(*e.expected_rate) : nlohmann::json(nullptr);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace besovlab
