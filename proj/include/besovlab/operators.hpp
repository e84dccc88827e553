#pragma once

#include "besovlab/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace besovlab {

/// Multipliers G(t^2 lambda_l) of the spectral operator G(t^2 L).
template <class Filter>
Eigen::VectorXd filter_multipliers(const EigenSystem& es, Filter&& G, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("filter scale t must be positive");
  Eigen::VectorXd m(es.size());
  for (Eigen::Index l = 0; l < es.size(); ++l) m[l] = G(t * t * es.eigenvalues()[l]);
  if (!m.allFinite()) throw std::invalid_argument("filter is not finite on the spectrum");
  return m;
}

/// [G(t^2 L) f] computed on eigen-coefficients.
template <class Filter>
GridFunction apply_filter(const EigenSystem& es, Filter&& G, double t, const GridFunction& f) {
  const Eigen::VectorXd m = filter_multipliers(es, G, t);
  return synthesize(es, m.cwiseProduct(project(es, f)));
}

/// Dense kernel K(x_i, x_j) = sum_l G(t^2 lambda_l) u_l(x_i) u_l(x_j).
struct KernelMatrix {
  ModelPtr model;
  double t = 0.0;
  std::string filter;
  Eigen::MatrixXd values;
};

template <class Filter>
KernelMatrix build_kernel(const EigenSystem& es, Filter&& G, double t, std::string descriptor = "") {
  const Eigen::VectorXd m = filter_multipliers(es, G, t);
  const auto& U = es.eigenfunctions();
  const Eigen::Index n = U.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  // K = V+ V+^T - V- V-^T over the eigenpairs with nonzero multiplier
  for (double sign : {1.0, -1.0}) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index l = 0; l < m.size(); ++l) {
      if (sign * m[l] > 0.0) active.push_back(l);
    }
    if (active.empty()) continue;
    Eigen::MatrixXd V(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) V.col(k) = U.col(active[k]) * std::sqrt(std::abs(m[active[k]]));
    K.selfadjointView<Eigen::Lower>().rankUpdate(V, sign);
  }
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  return KernelMatrix{es.model(), t, std::move(descriptor), std::move(K)};
}

/// Quadrature action (K f)(x_i) = sum_j w_j K(x_i, x_j) f(x_j).
inline GridFunction apply_kernel(const KernelMatrix& K, const GridFunction& f) {
  require_same_model(K.model, f.model(), "apply_kernel");
  return GridFunction(K.model, K.values * K.model->weights().cwiseProduct(f.values()));
}

inline double kernel_asymmetry(const KernelMatrix& K) {
  return (K.values - K.values.transpose()).cwiseAbs().maxCoeff();
}

struct AlphaNorms {
  double row_max = 0.0;     // max over x of (int |K(x,y)|^alpha dy)^(1/alpha)
  double column_max = 0.0;  // max over y of (int |K(x,y)|^alpha dx)^(1/alpha)
  double max() const { return std::max(row_max, column_max); }
};

inline AlphaNorms kernel_alpha_norms(const KernelMatrix& K, double alpha) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("kernel alpha-norm requires alpha >= 1");
  const ManifoldModel& model = *K.model;
  AlphaNorms out;
  for (Eigen::Index i = 0; i < K.values.rows(); ++i) {
    out.row_max = std::max(out.row_max, lp_norm(model, K.values.row(i).transpose(), alpha));
    out.column_max = std::max(out.column_max, lp_norm(model, K.values.col(i), alpha));
  }
  return out;
}

struct YoungCheck {
  double lhs = 0.0;       // ||K f||_q
  double rhs = 0.0;       // C ||f||_p
  double constant = 0.0;  // C = max of the row and column alpha-norms
  double slack() const { return rhs - lhs; }
};

inline double reciprocal(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

/// Young-type bound ||K f||_q <= C ||f||_p for 1/q + 1 = 1/p + 1/alpha.
inline YoungCheck young_apply_check(const KernelMatrix& K, const GridFunction& f, double p, double q, double alpha) {
  if (!(p >= 1.0 && q >= 1.0 && alpha >= 1.0)) throw std::invalid_argument("Young check needs p, q, alpha >= 1");
  if (std::abs(reciprocal(q) + 1.0 - reciprocal(p) - reciprocal(alpha)) > 1e-12) {
    throw std::invalid_argument("Young check needs 1/q + 1 = 1/p + 1/alpha");
  }
  YoungCheck out;
  out.constant = kernel_alpha_norms(K, alpha).max();
  out.lhs = lp_norm(apply_kernel(K, f), q);
  out.rhs = out.constant * lp_norm(f, p);
  return out;
}

/// Smallest C with |K(x,y)| <= C t^-n (1 + d(x,y)/t)^-N on every node pair.
struct DecayFit {
  double t = 0.0;
  double N = 0.0;
  double C = 0.0;
  double max_abs_K = 0.0;
  Eigen::Index argmax_row = 0;
  Eigen::Index argmax_col = 0;
};

inline DecayFit fit_decay_constant(const KernelMatrix& K, double N) {
  const ManifoldModel& model = *K.model;
  const int n = model.dim();
  if (!(N > n)) throw std::invalid_argument("decay exponent N must exceed the dimension");
  const double t = K.t;
  DecayFit fit{t, N, 0.0, K.values.cwiseAbs().maxCoeff(), 0, 0};
  const double tn = std::pow(t, n);
  for (Eigen::Index j = 0; j < K.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.values.rows(); ++i) {
      const double a = std::abs(K.values(i, j));
      if (a == 0.0) continue;
      const double c = a * tn * std::pow(1.0 + model.distance(i, j) / t, N);
      if (c > fit.C) {
        fit.C = c;
        fit.argmax_row = i;
        fit.argmax_col = j;
      }
    }
  }
  return fit;
}

/// max over centers x of t^-n sum_j w_j (1 + d(x, x_j)/t)^-N. All nodes are
/// used as centers when `centers` is empty.
inline double volume_integral_bound(const ManifoldModel& model, double t, double N,
                                    std::span<const Eigen::Index> centers = {}) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  const double scale = std::pow(t, -model.dim());
  auto at = [&](Eigen::Index x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < model.size(); ++j) s += model.weights()[j] * std::pow(1.0 + model.distance(x, j) / t, -N);
    return scale * s;
  };
  double best = 0.0;
  if (centers.empty()) {
    for (Eigen::Index x = 0; x < model.size(); ++x) best = std::max(best, at(x));
  } else {
    for (Eigen::Index x : centers) best = std::max(best, at(x));
  }
  return best;
}

/// Lower estimate of ||G(t^2 L)||_{p->q}: the best ratio ||G f||_q / ||f||_p
/// over `trials` test functions drawn from four families (point masses, sign
/// patterns of kernel columns, single eigenfunctions, random band-limited
/// combinations). Deterministic for a given seed.
template <class Filter>
double operator_norm_estimate(const EigenSystem& es, Filter&& G, double t, double p, double q, int trials,
                              std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("operator_norm_estimate needs trials >= 1");
  const ManifoldModel& model = *es.model();
  const Eigen::VectorXd m = filter_multipliers(es, G, t);
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const auto& U = es.eigenfunctions();
  const Eigen::VectorXd& w = model.weights();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick_node(0, model.size() - 1);
  std::normal_distribution<double> normal;

  std::vector<double> eig_weights(static_cast<std::size_t>(m.size()));
  for (Eigen::Index l = 0; l < m.size(); ++l) eig_weights[l] = std::abs(m[l]);
  std::discrete_distribution<Eigen::Index> pick_eig(eig_weights.begin(), eig_weights.end());

  double best = 0.0;
  auto consider = [&](const Eigen::VectorXd& f) {
    const double in = lp_norm(model, f, p);
    if (in == 0.0) return;
    const Eigen::VectorXd c = U.transpose() * w.cwiseProduct(f);
    const Eigen::VectorXd out = U * m.cwiseProduct(c);
    best = std::max(best, lp_norm(model, out, q) / in);
  };

  for (int k = 0; k < trials; ++k) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(model.size());
    switch (k % 4) {
      case 0: {
        const Eigen::Index y = pick_node(rng);
        f[y] = 1.0 / w[y];
        break;
      }
      case 1: {
        const Eigen::Index y = pick_node(rng);
        const Eigen::VectorXd column = U * m.cwiseProduct(U.row(y).transpose());
        f = column.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
        break;
      }
      case 2: f = U.col(pick_eig(rng)); break;
      default: {
        Eigen::VectorXd c(m.size());
        for (Eigen::Index l = 0; l < m.size(); ++l) c[l] = normal(rng) * m[l];
        f = U * c;
        break;
      }
    }
    consider(f);
  }
  return best;
}

}  // namespace besovlab
