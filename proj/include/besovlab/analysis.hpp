#pragma once

#include "besovlab/approx.hpp"
#include "besovlab/filters.hpp"
#include "besovlab/operators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace besovlab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct BesovParams {
  double alpha = 1.0;
  double p = 2.0;
  double q = 2.0;  // (0, inf]; q < 1 gives a quasi-norm
  int J = 6;       // dyadic truncation, 4^J <= band limit

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("Besov alpha must be positive");
    if (!(p >= 1.0)) throw std::invalid_argument("Besov p must be >= 1");
    if (!(q > 0.0)) throw std::invalid_argument("Besov q must be positive");
    if (J < 1) throw std::invalid_argument("Besov J must be >= 1");
  }
};

/// Memoized E(f, omega, p) for one (f, p). Spans are identified by their
/// eigenpair count, so every omega between two eigenvalues shares one solve.
class ErrorCache {
 public:
  ErrorCache(const EigenSystem& es, GridFunction f, double p, ApproxOptions opts = {})
      : es_(&es), f_(std::move(f)), p_(p), opts_(opts) {}

  const ApproxResult& at(double omega) {
    const Eigen::Index count = es_->count_upto(omega);
    auto it = cache_.find(count);
    if (it == cache_.end()) {
      it = cache_.emplace(count, best_approx(*es_, f_, omega, p_, opts_)).first;
    }
    return it->second;
  }

  double error(double omega) { return at(omega).error; }
  double lp_norm_f() const { return lp_norm(f_, p_); }
  const GridFunction& function() const { return f_; }
  const EigenSystem& eigensystem() const { return *es_; }
  double p() const { return p_; }
  std::size_t solves() const { return cache_.size(); }

 private:
  const EigenSystem* es_;
  GridFunction f_;
  double p_;
  ApproxOptions opts_;
  std::map<Eigen::Index, ApproxResult> cache_;
};

struct NormReport {
  double a_norm = 0.0;
  double lp_part = 0.0;
  double tail_part = 0.0;             // (sum_j (2^(alpha j) E_j)^q)^(1/q)
  std::vector<double> errors;         // E(f, 4^j, p), j = 0..J
  std::vector<double> dyadic_terms;   // 2^(alpha j) E(f, 4^j, p)
  double truncation_residual = 0.0;   // bound 2^(alpha (J+1)) E_J on the first dropped term
  double estimated_rate = kInf;       // fitted decay exponent of E_j in j (log2); inf if band-limited
  bool divergence_flag = false;       // alpha exceeds the estimated rate: the untruncated sum blows up
  bool converged = true;              // all solves converged
  double comparator_norm = kNaN;
  double ratio = kNaN;                // a_norm / comparator_norm
};

inline double lq_combine(const std::vector<double>& terms, double q) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double t : terms) m = std::max(m, t);
    return m;
  }
  double s = 0.0;
  for (double t : terms) s += std::pow(t, q);
  return std::pow(s, 1.0 / q);
}

/// Least-squares slope of -log2 E_j over the levels with E_j above
/// `floor`; +inf when fewer than two such levels exist.
inline double fitted_decay_rate(const std::vector<double>& errors, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t j = 0; j < errors.size(); ++j) {
    if (!(errors[j] > floor)) continue;
    const double x = static_cast<double>(j), y = std::log2(errors[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    m += 1;
  }
  if (m < 2) return kInf;
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline constexpr double kRateMargin = 0.05;

/// Dyadic A-norm from a precomputed error sequence E_0..E_J.
inline NormReport a_norm_from_errors(double lp_part, const std::vector<double>& errors, double alpha, double q) {
  if (errors.empty()) throw std::invalid_argument("a_norm needs at least one error level");
  NormReport r;
  r.lp_part = lp_part;
  r.errors = errors;
  for (std::size_t j = 0; j < errors.size(); ++j) r.dyadic_terms.push_back(errors[j] * std::exp2(alpha * static_cast<double>(j)));
  r.tail_part = lq_combine(r.dyadic_terms, q);
  r.a_norm = lp_part + r.tail_part;
  const auto J = static_cast<double>(errors.size() - 1);
  r.truncation_residual = std::exp2(alpha * (J + 1.0)) * errors.back();
  r.estimated_rate = fitted_decay_rate(errors, 1e-12 * std::max(lp_part, 1e-300));
  r.divergence_flag = std::isinf(q) ? alpha > r.estimated_rate + kRateMargin : alpha > r.estimated_rate - kRateMargin;
  return r;
}

inline NormReport a_norm(ErrorCache& cache, double alpha, double q, int J) {
  std::vector<double> errors;
  bool converged = true;
  for (int j = 0; j <= J; ++j) {
    const ApproxResult& res = cache.at(std::ldexp(1.0, 2 * j));
    errors.push_back(res.error);
    converged = converged && res.converged;
  }
  NormReport r = a_norm_from_errors(cache.lp_norm_f(), errors, alpha, q);
  r.converged = converged;
  return r;
}

/// ||f||_p + (sum_{j=0}^{J} (2^(alpha j) E(f, 4^j, p))^q)^(1/q).
inline NormReport a_norm(const EigenSystem& es, const GridFunction& f, const BesovParams& params,
                         const ApproxOptions& opts = {}) {
  params.validate();
  ErrorCache cache(es, f, params.p, opts);
  return a_norm(cache, params.alpha, params.q, params.J);
}

/// Logarithmic grid with `per_octave` points per doubling on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int per_octave) {
  if (!(lo > 0.0 && hi >= lo && per_octave >= 1)) throw std::invalid_argument("log_grid: bad range");
  const auto steps = static_cast<int>(std::ceil(std::log2(hi / lo) * per_octave - 1e-9));
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(std::min(hi, lo * std::exp2(static_cast<double>(i) / per_octave)));
  return g;
}

/// Distinct eigenvalues in [lo, hi] plus both end points; a grid on which
/// the step function E(f, t, p) is resolved exactly.
inline std::vector<double> eigenvalue_grid(const EigenSystem& es, double lo, double hi) {
  std::vector<double> g{lo};
  for (Eigen::Index l = 0; l < es.size(); ++l) {
    const double lam = es.eigenvalues()[l];
    if (lam > g.back() * (1.0 + 1e-12) && lam < hi) g.push_back(lam);
  }
  if (hi > g.back()) g.push_back(hi);
  return g;
}

/// Continuous A-norm ||f||_p + (int (t^(alpha/2) E(f, t, p))^q dt/t)^(1/q)
/// over the range of `t_grid`, where t is the eigenvalue cutoff omega. E is
/// taken constant on each grid cell [t_k, t_{k+1}) at its left-end value
/// and the power is integrated exactly, so the value is exact once the grid
/// contains every eigenvalue in range and does not change under further
/// refinement.
inline double a_norm_continuous(ErrorCache& cache, double alpha, double q, const std::vector<double>& t_grid) {
  if (!(alpha > 0.0 && q > 0.0)) throw std::invalid_argument("a_norm_continuous needs alpha, q > 0");
  if (t_grid.size() < 2) throw std::invalid_argument("a_norm_continuous needs at least two grid points");
  const double half = 0.5 * alpha;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k) {
    const double a = t_grid[k], b = t_grid[k + 1];
    if (!(a > 0.0 && b > a)) throw std::invalid_argument("a_norm_continuous needs an increasing positive grid");
    const double e = cache.error(a);
    if (std::isinf(q)) {
      acc = std::max(acc, std::pow(b, half) * e);
    } else {
      const double s = half * q;
      acc += std::pow(e, q) * (std::pow(b, s) - std::pow(a, s)) / s;
    }
  }
  const double tail = std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
  return cache.lp_norm_f() + tail;
}

/// ||f||_p + ||L^(k/2) f||_p for f in the eigensystem span.
inline double sobolev_norm(const EigenSystem& es, const GridFunction& f, double k, double p) {
  if (out_of_band_fraction(es, f) > 1e-8) throw std::invalid_argument("sobolev_norm needs a band-limited function");
  return lp_norm(f, p) + lp_norm(apply_power(es, f, 0.5 * k), p);
}

/// ||F_0(L) f||_p + (sum_{j=1}^{J+1} (2^(alpha j) ||F_j(L) f||_p)^q)^(1/q),
/// a Littlewood-Paley Besov norm built from the dyadic filter blocks.
inline double lp_comparator_norm(const EigenSystem& es, const GridFunction& f, const BesovParams& params,
                                 const FilterFamily& family = FilterFamily{}) {
  params.validate();
  const CoefVector c = project(es, f);
  auto block_norm = [&](int j) {
    CoefVector cj(c.size());
    for (Eigen::Index l = 0; l < c.size(); ++l) cj[l] = family.Fj(j, es.eigenvalues()[l]) * c[l];
    return lp_norm(synthesize(es, cj), params.p);
  };
  std::vector<double> terms;
  for (int j = 1; j <= params.J + 1; ++j) terms.push_back(std::exp2(params.alpha * j) * block_norm(j));
  return block_norm(0) + lq_combine(terms, params.q);
}

struct JacksonReport {
  std::vector<double> ratios;  // 2^(jk) E(f, 4^j, p) / ||L^(k/2) f||_p
  double smoothness_norm = 0.0;
  bool flagged = false;        // nonzero error with ||L^(k/2) f||_p = 0
  double max_over_median = 0.0;  // over the nonzero ratios
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Jackson ratios with the omega^(-k/2) normalization (omega = 4^j gives 2^(jk)).
inline JacksonReport jackson_ratios(ErrorCache& cache, double k, int J) {
  const EigenSystem& es = cache.eigensystem();
  JacksonReport r;
  r.smoothness_norm = lp_norm(apply_power(es, cache.function(), 0.5 * k), cache.p());
  const double floor = 1e-13 * std::max(cache.lp_norm_f(), 1e-300);
  std::vector<double> nonzero;
  for (int j = 0; j <= J; ++j) {
    const double e = cache.error(std::ldexp(1.0, 2 * j));
    double ratio = 0.0;
    if (e > floor) {
      if (r.smoothness_norm == 0.0) {
        r.flagged = true;
        ratio = kInf;
      } else {
        ratio = std::exp2(k * j) * e / r.smoothness_norm;
        nonzero.push_back(ratio);
      }
    }
    r.ratios.push_back(ratio);
  }
  if (!nonzero.empty()) r.max_over_median = *std::max_element(nonzero.begin(), nonzero.end()) / median(nonzero);
  return r;
}

inline JacksonReport jackson_ratios(const EigenSystem& es, const GridFunction& f, double k, double p, int J,
                                    const ApproxOptions& opts = {}) {
  if (out_of_band_fraction(es, f) > 1e-8) throw std::invalid_argument("jackson_ratios needs a band-limited function");
  ErrorCache cache(es, f, p, opts);
  return jackson_ratios(cache, k, J);
}

/// ||L^k f||_p / (omega^k ||f||_p) for f in E_omega(L).
inline double bernstein_ratio(const EigenSystem& es, const GridFunction& f, double k, double p, double omega) {
  const CoefVector c = project(es, f);
  const Eigen::Index count = es.count_upto(omega);
  const double scale = c.norm();
  const double above = c.tail(c.size() - count).norm();
  const GridFunction back = synthesize(es, c.head(count));
  const double residual = lp_norm(*f.model(), f.values() - back.values(), 2.0);
  if (above > 1e-10 * std::max(scale, 1e-300) || residual > 1e-8 * std::max(lp_norm(f, 2.0), 1e-300)) {
    throw std::invalid_argument("bernstein_ratio: function has components above omega");
  }
  const double base = lp_norm(f, p);
  if (base == 0.0) return 0.0;
  const double top = lp_norm(synthesize(es, apply_power(es, CoefVector(c.head(count)), k)), p);
  return top / (std::pow(omega, k) * base);
}

/// Quadratic K-functional for the pair (L_2, W^k_2):
///   K2(f, t)^2 = sum_l c_l^2 t^2 mu_l / (1 + t^2 mu_l),  mu_l = (1 + lambda_l^(k/2))^2,
/// the exact minimum of ||f - g||_2^2 + t^2 ||g||_W^2 coefficient by coefficient.
inline double k_functional_quadratic(const EigenSystem& es, const CoefVector& c, double t, double k) {
  if (!(t > 0.0)) throw std::invalid_argument("K-functional needs t > 0");
  double s = 0.0;
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    const double root = 1.0 + std::pow(es.eigenvalues()[l], 0.5 * k);
    const double tm = t * t * root * root;
    s += c[l] * c[l] * tm / (1.0 + tm);
  }
  return std::sqrt(s);
}

inline double k_functional_quadratic(const EigenSystem& es, const GridFunction& f, double t, double k) {
  return k_functional_quadratic(es, project(es, f), t, k);
}

/// Default grid for interpolation_norm: log-spaced from well below the
/// smallest resolved scale band^(-k/2) up to 1.
inline std::vector<double> default_k_grid(const EigenSystem& es, double k, int per_octave = 4) {
  const double lo = 1e-2 * std::pow(1.0 + std::pow(es.band_limit(), 0.5 * k), -1.0);
  return log_grid(lo, 1.0, per_octave);
}

/// ||f||_2 + (int (t^-theta K2(f, t))^q dt/t)^(1/q) over the range of t_grid
/// (trapezoid rule in log t; sup over the grid for q = inf).
inline double interpolation_norm(const EigenSystem& es, const GridFunction& f, double theta, double q, double k,
                                 const std::vector<double>& t_grid) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("interpolation_norm needs 0 < theta < 1");
  if (!(q > 0.0)) throw std::invalid_argument("interpolation_norm needs q > 0");
  if (t_grid.size() < 2) throw std::invalid_argument("interpolation_norm needs at least two grid points");
  const CoefVector c = project(es, f);
  std::vector<double> vals;
  for (double t : t_grid) vals.push_back(std::pow(t, -theta) * k_functional_quadratic(es, c, t, k));
  double tail = 0.0;
  if (std::isinf(q)) {
    tail = *std::max_element(vals.begin(), vals.end());
  } else {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
      const double h = std::log(t_grid[i + 1] / t_grid[i]);
      acc += 0.5 * h * (std::pow(vals[i], q) + std::pow(vals[i + 1], q));
    }
    tail = std::pow(acc, 1.0 / q);
  }
  return lp_norm(f, 2.0) + tail;
}

}  // namespace besovlab
