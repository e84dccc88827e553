#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace besovlab {

/// C-infinity cutoff h on [0, inf): 1 on [0,1], 0 on [4, inf), and the
/// exp(-1/x) smooth step in between.
class SmoothCutoff {
 public:
  static constexpr double kPlateauEnd = 1.0;
  static constexpr double kSupportEnd = 4.0;

  static double g(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

  double operator()(double lambda) const {
    if (lambda <= kPlateauEnd) return 1.0;
    if (lambda >= kSupportEnd) return 0.0;
    const double width = kSupportEnd - kPlateauEnd;
    const double a = g((kSupportEnd - lambda) / width);
    const double b = g((lambda - kPlateauEnd) / width);
    return a / (a + b);
  }
};

inline SmoothCutoff make_bump() { return SmoothCutoff{}; }

/// Dyadic Littlewood-Paley blocks built from h:
///   F(l) = h(l/4) - h(l),  F_0 = h,  F_j(l) = F(l / 4^(j-1)),
///   Psi(l) = F(l) / l^(k/2),  Psi_j(l) = Psi(l / 4^(j-1)),
/// so that sum_j F_j = 1 and F_j(l) = 2^(-(j-1)k) Psi_j(l) l^(k/2).
class FilterFamily {
 public:
  explicit FilterFamily(int k = 2, SmoothCutoff h = {}) : h_(h), k_(k) {
    if (k < 0) throw std::invalid_argument("Sobolev order k must be >= 0");
  }

  int k() const { return k_; }
  const SmoothCutoff& cutoff() const { return h_; }

  double h(double lambda) const { return h_(lambda); }
  double F(double lambda) const { return h_(lambda / 4.0) - h_(lambda); }

  double Fj(int j, double lambda) const {
    if (j < 0) throw std::invalid_argument("F_j needs j >= 0");
    if (j == 0) return h_(lambda);
    return F(scaled(j, lambda));
  }

  double Psi(double lambda) const {
    if (lambda <= 0.0) return 0.0;
    const double f = F(lambda);
    return f == 0.0 ? 0.0 : f / std::pow(lambda, 0.5 * k_);
  }

  // Evaluated in the scaled variable so 4^(j-1) is never formed.
  double Psij(int j, double lambda) const {
    if (j < 1) throw std::invalid_argument("Psi_j needs j >= 1");
    return Psi(scaled(j, lambda));
  }

  /// sum_{j=0}^{J} F_j(lambda); telescopes to h(lambda / 4^J).
  double partial_sum(int J, double lambda) const {
    double s = 0.0;
    for (int j = 0; j <= J; ++j) s += Fj(j, lambda);
    return s;
  }

 private:
  static double scaled(int j, double lambda) { return std::ldexp(lambda, -2 * (j - 1)); }

  SmoothCutoff h_;
  int k_;
};

struct PartitionCheck {
  double max_deviation = 0.0;    // over grid points with lambda <= 4^J
  int certified_points = 0;
  int out_of_range_points = 0;   // lambda > 4^J, where the partial sum may drop below 1
};

/// Deviation of sum_{j=0}^{J} F_j from 1 on the certified range [0, 4^J].
inline PartitionCheck check_partition(const FilterFamily& family, int J, std::span<const double> lambda_grid) {
  if (J < 0) throw std::invalid_argument("check_partition needs J >= 0");
  const double top = std::ldexp(1.0, 2 * J);
  PartitionCheck out;
  for (double lambda : lambda_grid) {
    if (lambda < 0.0) throw std::invalid_argument("check_partition: negative lambda");
    if (lambda > top) {
      ++out.out_of_range_points;
      continue;
    }
    ++out.certified_points;
    out.max_deviation = std::max(out.max_deviation, std::abs(family.partial_sum(J, lambda) - 1.0));
  }
  return out;
}

}  // namespace besovlab
