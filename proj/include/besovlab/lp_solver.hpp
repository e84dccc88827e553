#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace besovlab {

/// min c^T x  s.t.  A x = b,  0 <= x <= upper  (upper entries may be +inf).
struct BoundedLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd upper;
};

struct LpOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct LpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // lambda for A x = b
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Mehrotra predictor-corrector interior-point method. The dual is
///   max b^T lambda - upper^T v  s.t.  A^T lambda + s - v = c,  s, v >= 0.
/// Upper bounds enter through slacks w = upper - x; the Newton systems are
/// reduced to the normal equations A D A^T.
inline LpSolution solve_lp(const BoundedLp& lp, const LpOptions& opts = {}) {
  const Eigen::Index m = lp.A.rows(), n = lp.A.cols();
  if (lp.b.size() != m || lp.c.size() != n || lp.upper.size() != n) {
    throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
  }
  const Eigen::ArrayXd bounded = lp.upper.array().isFinite().cast<double>();
  const Eigen::ArrayXd ub = lp.upper.array().isFinite().select(lp.upper.array(), 0.0);
  if ((ub < 0.0).any()) throw std::invalid_argument("solve_lp: negative upper bound");
  const double n_compl = static_cast<double>(n) + bounded.sum();

  Eigen::ArrayXd x = (bounded > 0.0).select(0.5 * ub, 1.0);
  Eigen::ArrayXd w = bounded * (ub - x);
  Eigen::ArrayXd s = Eigen::ArrayXd::Ones(n);
  Eigen::ArrayXd v = bounded;  // 1 where bounded, 0 otherwise
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);

  const double b_scale = 1.0 + lp.b.norm();
  const double c_scale = 1.0 + lp.c.norm();

  // Largest step in (0, 1] keeping z + a dz >= 0 on the mask.
  auto max_step = [](const Eigen::ArrayXd& z, const Eigen::ArrayXd& dz, const Eigen::ArrayXd& mask) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (mask[i] > 0.0 && dz[i] < 0.0) a = std::min(a, -z[i] / dz[i]);
    }
    return a;
  };
  const Eigen::ArrayXd all = Eigen::ArrayXd::Ones(n);

  LpSolution sol, best;
  double best_merit = std::numeric_limits<double>::infinity();
  int stalled = 0;
  auto finish = [&]() {
    if (!best.x.size()) {
      best = sol;
      best.x = x.matrix();
      best.multipliers = lambda;
    }
    return best;
  };
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd rb = lp.b - lp.A * x.matrix();
    const Eigen::ArrayXd rc = lp.c.array() - (lp.A.transpose() * lambda).array() - s + v;
    const Eigen::ArrayXd ru = bounded * (ub - x - w);
    const double mu = ((x * s).sum() + (w * v).sum()) / n_compl;

    sol.primal_objective = lp.c.dot(x.matrix());
    sol.dual_objective = lp.b.dot(lambda) - (ub * v).sum();
    sol.primal_infeasibility = std::max(rb.norm(), ru.matrix().norm()) / b_scale;
    sol.dual_infeasibility = rc.matrix().norm() / c_scale;
    sol.iterations = it;
    const double gap = std::abs(sol.primal_objective - sol.dual_objective) / (1.0 + std::abs(sol.primal_objective));
    const double merit = std::max({sol.primal_infeasibility, sol.dual_infeasibility, gap});
    if (!std::isfinite(merit)) break;
    if (merit < best_merit) {
      stalled = 0;
      best_merit = merit;
      best = sol;
      best.x = x.matrix();
      best.multipliers = lambda;
    }
    if (merit < opts.tolerance) {
      best.converged = true;
      break;
    }
    // Late iterations can lose feasibility once the scaling degenerates.
    if (merit >= best_merit && best_merit < 1e3 * opts.tolerance && ++stalled >= 5) break;

    const Eigen::ArrayXd w_safe = (bounded > 0.0).select(w, 1.0);
    const Eigen::ArrayXd dinv = s / x + bounded * v / w_safe;
    const Eigen::ArrayXd d = dinv.inverse();
    Eigen::MatrixXd M = lp.A * d.matrix().asDiagonal() * lp.A.transpose();
    const Eigen::LDLT<Eigen::MatrixXd> factor(M);
    if (factor.info() != Eigen::Success) break;

    struct Step {
      Eigen::ArrayXd dx, dw, ds, dv;
      Eigen::VectorXd dlambda;
    };
    auto solve = [&](const Eigen::ArrayXd& rxs, const Eigen::ArrayXd& rwv) {
      const Eigen::ArrayXd rho = rc - rxs / x + bounded * (rwv - v * ru) / w_safe;
      Step st;
      st.dlambda = factor.solve(rb + lp.A * (d * rho).matrix());
      st.dx = d * ((lp.A.transpose() * st.dlambda).array() - rho);
      st.ds = (rxs - s * st.dx) / x;
      st.dw = bounded * (ru - st.dx);
      st.dv = bounded * (rwv - v * st.dw) / w_safe;
      return st;
    };

    const Step aff = solve(-x * s, -w * v);
    const double ap_aff = std::min(max_step(x, aff.dx, all), max_step(w, aff.dw, bounded));
    const double ad_aff = std::min(max_step(s, aff.ds, all), max_step(v, aff.dv, bounded));
    const double mu_aff = (((x + ap_aff * aff.dx) * (s + ad_aff * aff.ds)).sum() +
                           ((w + ap_aff * aff.dw) * (v + ad_aff * aff.dv)).sum()) /
                          n_compl;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Step cor = solve(sigma * mu - x * s - aff.dx * aff.ds, bounded * (sigma * mu - w * v - aff.dw * aff.dv));
    const double eta = std::max(0.995, 1.0 - mu);
    const double ap = std::min(1.0, eta * std::min(max_step(x, cor.dx, all), max_step(w, cor.dw, bounded)));
    const double ad = std::min(1.0, eta * std::min(max_step(s, cor.ds, all), max_step(v, cor.dv, bounded)));

    x += ap * cor.dx;
    w += ap * cor.dw;
    lambda += ad * cor.dlambda;
    s += ad * cor.ds;
    v += ad * cor.dv;
    sol.iterations = it + 1;
    if (!(x.allFinite() && s.allFinite() && lambda.allFinite())) break;
  }
  return finish();
}

}  // namespace besovlab
