#pragma once

#include "besovlab/lp_solver.hpp"
#include "besovlab/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace besovlab {

enum class ApproxSolver { projection, irls, linear_program };

inline std::string to_string(ApproxSolver s) {
  switch (s) {
    case ApproxSolver::projection: return "projection";
    case ApproxSolver::irls: return "irls";
    case ApproxSolver::linear_program: return "linear_program";
  }
  return "unknown";
}

struct ApproxOptions {
  double irls_epsilon = 1e-10;     // weight floor max(|r|, eps)^(p-2), on f scaled to unit sup norm
  double irls_tolerance = 1e-9;    // relative change of the error
  int irls_max_iterations = 500;
  double lp_tolerance = 1e-9;
  int lp_max_iterations = 200;
};

/// Best approximation of f from E_omega(L) in the quadrature L_p norm.
struct ApproxResult {
  double omega = 0.0;
  double p = 2.0;
  double error = 0.0;        // ||f - g||_p for the returned coefficients
  double lower_bound = 0.0;  // certified lower bound on the infimum (dual value); equals error for p = 2
  CoefVector coefficients;   // g in the basis {u_l : lambda_l <= omega}
  ApproxSolver solver = ApproxSolver::projection;
  int iterations = 0;
  bool converged = true;
  double residual_change = 0.0;
};

namespace detail {

inline double sum_weighted_power(const Eigen::VectorXd& w, const Eigen::VectorXd& r, double p) {
  return w.dot(r.cwiseAbs().array().pow(p).matrix());
}

// Newton-damped IRLS on f scaled to unit sup norm. The weighted least
// squares solution c_wls with weights max(|r|, eps)^(p-2) gives the Newton
// step (c_wls - c) / (p - 1) for sum w |r|^p; a backtracking search keeps
// the objective decreasing.
inline void irls(const Eigen::Ref<const Eigen::MatrixXd>& B, const Eigen::VectorXd& w, const Eigen::VectorXd& f, double p,
                 const ApproxOptions& opts, ApproxResult& res) {
  Eigen::VectorXd c = res.coefficients;
  Eigen::VectorXd r = f - B * c;
  double phi = sum_weighted_power(w, r, p);
  double err = std::pow(phi, 1.0 / p);
  res.converged = false;
  res.iterations = 0;
  for (int it = 1; it <= opts.irls_max_iterations; ++it) {
    res.iterations = it;
    if (err == 0.0) {
      res.converged = true;
      res.residual_change = 0.0;
      break;
    }
    const Eigen::VectorXd rho =
        w.cwiseProduct(r.cwiseAbs().cwiseMax(opts.irls_epsilon).array().pow(p - 2.0).matrix());
    const Eigen::MatrixXd normal = B.transpose() * rho.asDiagonal() * B;
    const Eigen::VectorXd c_wls = normal.ldlt().solve(B.transpose() * rho.cwiseProduct(f));
    const Eigen::VectorXd newton = (c_wls - c) / (p - 1.0);

    Eigen::VectorXd best_c = c, best_r = r;
    double best_phi = phi;
    double step = 1.0;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const Eigen::VectorXd trial = c + step * newton;
      const Eigen::VectorXd tr = f - B * trial;
      const double tphi = sum_weighted_power(w, tr, p);
      if (tphi < best_phi) {
        best_c = trial;
        best_r = tr;
        best_phi = tphi;
        break;
      }
    }
    const double new_err = std::pow(best_phi, 1.0 / p);
    res.residual_change = std::abs(err - new_err) / err;
    c = best_c;
    r = best_r;
    phi = best_phi;
    err = new_err;
    if (res.residual_change < opts.irls_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.coefficients = c;
  res.error = err;
  res.lower_bound = 0.0;
}

// Weak-duality bound f^T y for an approximate dual point y: y is projected
// onto B^T y = 0 and scaled into the dual ball, so the bound holds whatever
// the accuracy of the solve. `ball` maps y to the factor by which it must
// shrink (<= 1 means already inside).
template <class Ball>
double certified_dual_bound(const Eigen::Ref<const Eigen::MatrixXd>& B, const Eigen::VectorXd& f, Eigen::VectorXd y,
                            Ball&& ball) {
  const Eigen::MatrixXd G = B.transpose() * B;
  y -= B * G.ldlt().solve(B.transpose() * y);
  const double shrink = ball(y);
  if (!(shrink > 0.0) || !std::isfinite(shrink)) return 0.0;
  if (shrink > 1.0) y /= shrink;
  return std::max(0.0, f.dot(y));
}

// p = inf: dual LP  max f^T y  s.t.  B^T y = 0,  sum |y_i| <= 1, written with
// y = (z+ - z-)/N, z >= 0, and a slack. Coefficients are c = -N lambda_B.
inline void chebyshev_lp(const Eigen::Ref<const Eigen::MatrixXd>& B, const Eigen::VectorXd& f, const ApproxOptions& opts,
                         ApproxResult& res) {
  const Eigen::Index N = B.rows(), d = B.cols();
  const auto Nd = static_cast<double>(N);
  BoundedLp lp;
  lp.A = Eigen::MatrixXd::Zero(d + 1, 2 * N + 1);
  lp.A.block(0, 0, d, N) = B.transpose();
  lp.A.block(0, N, d, N) = -B.transpose();
  lp.A.row(d).setOnes();
  lp.b = Eigen::VectorXd::Zero(d + 1);
  lp.b[d] = Nd;
  lp.c = Eigen::VectorXd::Zero(2 * N + 1);
  lp.c.head(N) = -f / Nd;
  lp.c.segment(N, N) = f / Nd;
  lp.upper = Eigen::VectorXd::Constant(2 * N + 1, kInf);
  const LpSolution sol = solve_lp(lp, {opts.lp_tolerance, opts.lp_max_iterations});
  res.coefficients = -Nd * sol.multipliers.head(d);
  res.error = (f - B * res.coefficients).cwiseAbs().maxCoeff();
  const Eigen::VectorXd y = (sol.x.head(N) - sol.x.segment(N, N)) / Nd;
  res.lower_bound = certified_dual_bound(B, f, y, [](const Eigen::VectorXd& v) { return v.lpNorm<1>(); });
  res.iterations = sol.iterations;
  res.converged = sol.converged;
}

// p = 1: dual LP  max f^T y  s.t.  B^T y = 0,  |y_i| <= w_i, written with
// y = w (z - 1), 0 <= z <= 2. Coefficients are c = -lambda.
inline void l1_lp(const Eigen::Ref<const Eigen::MatrixXd>& B, const Eigen::VectorXd& w, const Eigen::VectorXd& f,
                  const ApproxOptions& opts, ApproxResult& res) {
  const Eigen::Index N = B.rows();
  BoundedLp lp;
  lp.A = B.transpose() * w.asDiagonal();
  lp.b = B.transpose() * w;
  lp.c = -f.cwiseProduct(w);
  lp.upper = Eigen::VectorXd::Constant(N, 2.0);
  const LpSolution sol = solve_lp(lp, {opts.lp_tolerance, opts.lp_max_iterations});
  res.coefficients = -sol.multipliers;
  res.error = w.dot((f - B * res.coefficients).cwiseAbs());
  const Eigen::VectorXd y = w.cwiseProduct(sol.x - Eigen::VectorXd::Ones(N));
  res.lower_bound = certified_dual_bound(B, f, y, [&](const Eigen::VectorXd& v) { return v.cwiseQuotient(w).cwiseAbs().maxCoeff(); });
  res.iterations = sol.iterations;
  res.converged = sol.converged;
}

}  // namespace detail

/// E(f, omega, p) = inf over g in E_omega(L) of ||f - g||_p.
///
/// p = 2 uses the orthogonal projection; 1 < p < inf runs IRLS started at
/// the projection; p = 1 and p = inf solve a linear program. A solve that
/// stops early is returned with converged = false. Throws if omega exceeds
/// the eigensystem's band limit.
inline ApproxResult best_approx(const EigenSystem& es, const GridFunction& f, double omega, double p,
                                const ApproxOptions& opts = {}) {
  require_same_model(es.model(), f.model(), "best_approx");
  if (!(p >= 1.0)) throw std::invalid_argument("best_approx requires p >= 1");
  if (!(omega >= 0.0)) throw std::invalid_argument("best_approx requires omega >= 0");
  if (omega > es.band_limit() * (1.0 + 1e-12)) {
    throw std::invalid_argument("omega " + std::to_string(omega) + " exceeds the computed band " +
                                std::to_string(es.band_limit()));
  }
  const ManifoldModel& model = *es.model();
  const Eigen::VectorXd& w = model.weights();
  const Eigen::Index count = es.count_upto(omega);
  const auto B = es.basis(count);

  ApproxResult res;
  res.omega = omega;
  res.p = p;
  res.coefficients = B.transpose() * w.cwiseProduct(f.values());
  const Eigen::VectorXd r2 = f.values() - B * res.coefficients;
  res.error = lp_norm(model, r2, p);
  res.lower_bound = p == 2.0 ? res.error : 0.0;

  const double scale = f.values().cwiseAbs().maxCoeff();
  if (p == 2.0 || scale == 0.0 || r2.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
    res.lower_bound = p == 2.0 ? res.error : 0.0;
    return res;
  }

  const ApproxResult projection = res;
  const Eigen::VectorXd fs = f.values() / scale;
  res.coefficients /= scale;
  if (std::isinf(p)) {
    res.solver = ApproxSolver::linear_program;
    detail::chebyshev_lp(B, fs, opts, res);
  } else if (p == 1.0) {
    res.solver = ApproxSolver::linear_program;
    detail::l1_lp(B, w, fs, opts, res);
  } else {
    res.solver = ApproxSolver::irls;
    detail::irls(B, w, fs, p, opts, res);
  }
  if (!res.coefficients.allFinite()) {
    res.coefficients = projection.coefficients / scale;
    res.converged = false;
  }
  res.coefficients *= scale;
  res.error = lp_norm(model, f.values() - B * res.coefficients, p);
  res.lower_bound = std::max(0.0, std::min(res.lower_bound * scale, res.error));
  // LP solves count as converged when the certified duality gap is small,
  // independently of the interior-point stopping test.
  if (res.solver == ApproxSolver::linear_program) {
    res.converged =
        res.error - res.lower_bound <= opts.lp_tolerance * (scale * std::pow(model.total_measure(), 1.0 / p) + res.error);
  }
  // The projection is admissible; never report anything worse.
  if (projection.error < res.error) {
    res.error = projection.error;
    res.coefficients = projection.coefficients;
  }
  return res;
}

/// E(f, 4^j, p) for j = 0..J.
inline std::vector<ApproxResult> error_sequence(const EigenSystem& es, const GridFunction& f, double p, int J,
                                                const ApproxOptions& opts = {}) {
  if (J < 0) throw std::invalid_argument("error_sequence needs J >= 0");
  if (std::ldexp(1.0, 2 * J) > es.band_limit() * (1.0 + 1e-12)) {
    throw std::invalid_argument("error_sequence: 4^J exceeds the band limit");
  }
  std::vector<ApproxResult> out;
  out.reserve(static_cast<std::size_t>(J + 1));
  for (int j = 0; j <= J; ++j) out.push_back(best_approx(es, f, std::ldexp(1.0, 2 * j), p, opts));
  return out;
}

/// Norm of the gradient of sum_i w_i |r_i|^p with respect to the
/// coefficients at a result; 0 at an exact minimizer for 1 < p < inf.
inline double optimality_gradient_norm(const EigenSystem& es, const GridFunction& f, const ApproxResult& res) {
  if (!(res.p > 1.0) || std::isinf(res.p)) throw std::invalid_argument("gradient certificate needs 1 < p < inf");
  const auto B = es.basis(res.coefficients.size());
  const Eigen::VectorXd r = f.values() - B * res.coefficients;
  const Eigen::VectorXd g =
      r.unaryExpr([p = res.p](double v) { return std::copysign(std::pow(std::abs(v), p - 1.0), v); });
  return (res.p * B.transpose() * es.model()->weights().cwiseProduct(g)).norm();
}

}  // namespace besovlab
