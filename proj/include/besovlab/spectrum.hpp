#pragma once

#include "besovlab/manifold.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace besovlab {

/// Eigen-coefficients of a function, aligned with EigenSystem::eigenvalues().
using CoefVector = Eigen::VectorXd;

/// Raised when an eigensolver does not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ascending eigenvalues of L on a model together with node samples of
/// quadrature-orthonormal eigenfunctions (one column per eigenfunction).
/// The columns with eigenvalue <= omega span E_omega(L).
class EigenSystem {
 public:
  EigenSystem(ModelPtr model, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenfunctions, double band_limit,
              std::vector<std::string> labels = {})
      : model_(std::move(model)),
        eigenvalues_(std::move(eigenvalues)),
        eigenfunctions_(std::move(eigenfunctions)),
        band_limit_(band_limit),
        labels_(std::move(labels)) {
    if (!model_) throw std::invalid_argument("eigensystem needs a model");
    if (eigenfunctions_.rows() != model_->size() || eigenfunctions_.cols() != eigenvalues_.size()) {
      throw std::invalid_argument("eigenfunction matrix shape does not match model and eigenvalues");
    }
    if (eigenvalues_.size() == 0) throw std::invalid_argument("eigensystem is empty");
    for (Eigen::Index l = 1; l < eigenvalues_.size(); ++l) {
      if (eigenvalues_[l] < eigenvalues_[l - 1]) throw std::invalid_argument("eigenvalues must be ascending");
    }
    if (eigenvalues_[0] != 0.0) throw std::invalid_argument("lowest eigenvalue must be 0");
    if (labels_.empty()) {
      labels_.resize(static_cast<std::size_t>(eigenvalues_.size()));
      for (std::size_t l = 0; l < labels_.size(); ++l) labels_[l] = "u" + std::to_string(l);
    }
  }

  const ModelPtr& model() const { return model_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenfunctions() const { return eigenfunctions_; }
  double band_limit() const { return band_limit_; }
  Eigen::Index size() const { return eigenvalues_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Number of eigenpairs with eigenvalue <= omega; ties at omega count.
  Eigen::Index count_upto(double omega) const {
    const double cut = omega * (1.0 + 1e-12) + 1e-12;
    return std::upper_bound(eigenvalues_.data(), eigenvalues_.data() + eigenvalues_.size(), cut) -
           eigenvalues_.data();
  }

  /// First `count` eigenfunction columns.
  auto basis(Eigen::Index count) const { return eigenfunctions_.leftCols(count); }

 private:
  ModelPtr model_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenfunctions_;
  double band_limit_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Analytic bases

/// Circle basis ordering: 1, cos x, sin x, cos 2x, sin 2x, ...
inline Eigen::Index circle_cos_index(int m) { return m == 0 ? 0 : 2 * m - 1; }
inline Eigen::Index circle_sin_index(int m) {
  if (m < 1) throw std::invalid_argument("sin index needs m >= 1");
  return 2 * m;
}

namespace detail {

inline int isqrt_floor(double x) {
  auto m = static_cast<int>(std::floor(std::sqrt(std::max(0.0, x))));
  while (static_cast<double>(m + 1) * (m + 1) <= x) ++m;
  while (m > 0 && static_cast<double>(m) * m > x) --m;
  return m;
}

// Orthonormal 1-D trigonometric function of basis index b (circle ordering).
inline double trig_basis(Eigen::Index b, double theta) {
  if (b == 0) return 1.0 / std::sqrt(2.0 * kPi);
  const auto m = static_cast<double>((b + 1) / 2);
  return (b % 2 == 1 ? std::cos(m * theta) : std::sin(m * theta)) / std::sqrt(kPi);
}

// Frequencies below n/2 are orthonormal under the n-point trapezoid rule.
inline void require_trig_resolution(int max_freq, int n, const char* what) {
  if (2 * max_freq >= n) {
    throw std::invalid_argument(std::string(what) + ": band limit needs frequency " + std::to_string(max_freq) +
                                " but a grid of " + std::to_string(n) + " nodes resolves frequencies < " +
                                std::to_string(n / 2));
  }
}

// Fully normalized associated Legendre functions Pbar_l^m(z) for 0 <= m <= l
// <= lmax, scaled so that Y_l^0 = Pbar_l^0 and Y_l^m = sqrt(2) Pbar_l^m cos(m phi).
inline std::vector<std::vector<double>> normalized_legendre(int lmax, double z) {
  std::vector<std::vector<double>> P(static_cast<std::size_t>(lmax + 1));
  for (int l = 0; l <= lmax; ++l) P[l].assign(static_cast<std::size_t>(l + 1), 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= -s * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    P[m][m] = pmm;
    if (m + 1 <= lmax) P[m + 1][m] = z * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      P[l][m] = a * (z * P[l - 1][m] - b * P[l - 2][m]);
    }
  }
  return P;
}

}  // namespace detail

/// Real spherical harmonic of degree l and order m (m < 0 selects sin).
inline double real_spherical_harmonic(int l, int m, double colatitude, double longitude) {
  const auto P = detail::normalized_legendre(l, std::cos(colatitude));
  if (m == 0) return P[l][0];
  const int am = std::abs(m);
  return std::sqrt(2.0) * P[l][am] * (m > 0 ? std::cos(am * longitude) : std::sin(am * longitude));
}

namespace detail {

inline EigenSystem circle_eigensystem(const ModelPtr& model, double band_limit) {
  const int n = static_cast<int>(model->size());
  const int mmax = isqrt_floor(band_limit);
  require_trig_resolution(mmax, n, "circle");
  const Eigen::Index count = 2 * mmax + 1;
  Eigen::VectorXd lambda(count);
  Eigen::MatrixXd U(n, count);
  std::vector<std::string> labels;
  for (Eigen::Index b = 0; b < count; ++b) {
    const auto m = (b + 1) / 2;
    lambda[b] = static_cast<double>(m * m);
    for (int i = 0; i < n; ++i) U(i, b) = trig_basis(b, model->points()(i, 0));
    labels.push_back(b == 0 ? "const" : (b % 2 ? "cos" : "sin") + std::to_string(m));
  }
  return EigenSystem(model, std::move(lambda), std::move(U), band_limit, std::move(labels));
}

inline EigenSystem torus_eigensystem(const ModelPtr& model, double band_limit) {
  const int n = model->descriptor().resolution;
  const int mmax = isqrt_floor(band_limit);
  require_trig_resolution(mmax, n, "torus2");
  struct Pair {
    double lambda;
    Eigen::Index a, b;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index a = 0; a <= 2 * mmax; ++a) {
    for (Eigen::Index b = 0; b <= 2 * mmax; ++b) {
      const double ma = static_cast<double>((a + 1) / 2), mb = static_cast<double>((b + 1) / 2);
      const double lam = ma * ma + mb * mb;
      if (lam <= band_limit) pairs.push_back({lam, a, b});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.lambda < y.lambda; });
  const auto count = static_cast<Eigen::Index>(pairs.size());
  Eigen::VectorXd lambda(count);
  Eigen::MatrixXd U(model->size(), count);
  std::vector<std::string> labels;
  for (Eigen::Index k = 0; k < count; ++k) {
    lambda[k] = pairs[k].lambda;
    for (Eigen::Index i = 0; i < model->size(); ++i) {
      U(i, k) = trig_basis(pairs[k].a, model->points()(i, 0)) * trig_basis(pairs[k].b, model->points()(i, 1));
    }
    labels.push_back("t" + std::to_string(pairs[k].a) + "_" + std::to_string(pairs[k].b));
  }
  return EigenSystem(model, std::move(lambda), std::move(U), band_limit, std::move(labels));
}

inline EigenSystem sphere_eigensystem(const ModelPtr& model, double band_limit) {
  int lmax = 0;
  while (static_cast<double>(lmax + 1) * (lmax + 2) <= band_limit) ++lmax;
  const int band = model->descriptor().resolution;
  if (lmax > band) {
    throw std::invalid_argument("sphere2: band limit needs degree " + std::to_string(lmax) +
                                " but the quadrature is exact only up to degree " + std::to_string(band));
  }
  const Eigen::Index count = static_cast<Eigen::Index>(lmax + 1) * (lmax + 1);
  Eigen::VectorXd lambda(count);
  Eigen::MatrixXd U(model->size(), count);
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < model->size(); ++i) {
    const double theta = model->sphere_angles()(i, 0), phi = model->sphere_angles()(i, 1);
    const auto P = normalized_legendre(lmax, std::cos(theta));
    Eigen::Index k = 0;
    for (int l = 0; l <= lmax; ++l) {
      U(i, k++) = P[l][0];
      for (int m = 1; m <= l; ++m) {
        U(i, k++) = std::sqrt(2.0) * P[l][m] * std::cos(m * phi);
        U(i, k++) = std::sqrt(2.0) * P[l][m] * std::sin(m * phi);
      }
    }
  }
  for (int l = 0; l <= lmax; ++l) {
    lambda.segment(static_cast<Eigen::Index>(l) * l, 2 * l + 1).setConstant(static_cast<double>(l) * (l + 1));
    labels.push_back("Y" + std::to_string(l) + "_0");
    for (int m = 1; m <= l; ++m) {
      labels.push_back("Y" + std::to_string(l) + "_" + std::to_string(m));
      labels.push_back("Y" + std::to_string(l) + "_-" + std::to_string(m));
    }
  }
  return EigenSystem(model, std::move(lambda), std::move(U), band_limit, std::move(labels));
}

// Generalized problem S u = lambda M u with lumped diagonal M, solved as the
// symmetric problem M^{-1/2} S M^{-1/2}.
inline EigenSystem mesh_eigensystem(const ModelPtr& model, double band_limit) {
  const TriangleMesh& mesh = *model->mesh();
  const Eigen::VectorXd inv_sqrt_m = model->weights().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = cotangent_stiffness(mesh);
  const Eigen::MatrixXd A = inv_sqrt_m.asDiagonal() * S * inv_sqrt_m.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) throw SolverError("mesh eigensolver did not converge");
  const Eigen::VectorXd& evals = solver.eigenvalues();
  Eigen::Index count = 0;
  while (count < evals.size() && evals[count] <= band_limit) ++count;
  if (count < 1) throw std::invalid_argument("mesh: band limit below the lowest eigenvalue");
  if (2 * count > model->size()) {
    throw std::invalid_argument("mesh: band limit keeps " + std::to_string(count) + " eigenpairs on " +
                                std::to_string(model->size()) + " vertices; at most half are resolved");
  }
  Eigen::VectorXd lambda = evals.head(count);
  Eigen::MatrixXd U = inv_sqrt_m.asDiagonal() * solver.eigenvectors().leftCols(count);
  // The kernel of the cotangent Laplacian on a connected closed mesh is the
  // constants; pin it exactly.
  lambda[0] = 0.0;
  U.col(0).setConstant(1.0 / std::sqrt(model->total_measure()));
  for (Eigen::Index l = 1; l < count; ++l) lambda[l] = std::max(lambda[l], 0.0);
  return EigenSystem(model, std::move(lambda), std::move(U), band_limit);
}

}  // namespace detail

/// Eigenpairs of the model's Laplace-Beltrami operator with eigenvalue <=
/// band_limit. Throws std::invalid_argument if the grid cannot resolve the
/// band and SolverError if the mesh eigensolver fails.
inline EigenSystem build_eigensystem(const ModelPtr& model, double band_limit) {
  if (!(band_limit > 0.0)) throw std::invalid_argument("band limit must be positive");
  switch (model->kind()) {
    case ManifoldKind::circle: return detail::circle_eigensystem(model, band_limit);
    case ManifoldKind::torus2: return detail::torus_eigensystem(model, band_limit);
    case ManifoldKind::sphere2: return detail::sphere_eigensystem(model, band_limit);
    case ManifoldKind::mesh: return detail::mesh_eigensystem(model, band_limit);
  }
  throw std::invalid_argument("unknown manifold kind");
}

/// A value below which every eigenvalue of the operator is in the system:
/// the next analytic eigenvalue past the band, or the band itself for meshes.
inline double completeness_bound(const EigenSystem& es) {
  const double band = es.band_limit();
  switch (es.model()->kind()) {
    case ManifoldKind::circle: {
      const double m = detail::isqrt_floor(band) + 1.0;
      return m * m;
    }
    case ManifoldKind::torus2: return std::floor(band) + 1.0;
    case ManifoldKind::sphere2: {
      double l = std::floor(0.5 * (std::sqrt(1.0 + 4.0 * band) - 1.0));
      while ((l + 1.0) * (l + 2.0) <= band) l += 1.0;
      while (l * (l + 1.0) > band) l -= 1.0;
      return (l + 1.0) * (l + 2.0);
    }
    case ManifoldKind::mesh: return band;
  }
  return band;
}

// ---------------------------------------------------------------------------
// Analysis and synthesis

/// Quadrature Gram matrix G_lm = sum_i w_i u_l(x_i) u_m(x_i).
inline Eigen::MatrixXd gram_matrix(const EigenSystem& es) {
  const auto& U = es.eigenfunctions();
  return U.transpose() * es.model()->weights().asDiagonal() * U;
}

/// Entrywise max |G - I|.
inline double check_orthonormality(const EigenSystem& es) {
  const Eigen::MatrixXd G = gram_matrix(es);
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

inline CoefVector project(const EigenSystem& es, const GridFunction& f) {
  require_same_model(es.model(), f.model(), "project");
  return es.eigenfunctions().transpose() * es.model()->weights().cwiseProduct(f.values());
}

inline GridFunction synthesize(const EigenSystem& es, const CoefVector& c) {
  if (c.size() > es.size()) throw std::invalid_argument("synthesize: more coefficients than eigenfunctions");
  return GridFunction(es.model(), es.basis(c.size()) * c);
}

/// c_l -> lambda_l^s c_l with 0^0 = 1.
inline CoefVector apply_power(const EigenSystem& es, const CoefVector& c, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("apply_power requires s >= 0");
  if (c.size() > es.size()) throw std::invalid_argument("apply_power: more coefficients than eigenvalues");
  CoefVector out(c.size());
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    const double lam = es.eigenvalues()[l];
    out[l] = (s == 0.0 ? 1.0 : std::pow(lam, s)) * c[l];
  }
  return out;
}

/// L^s f for f in the span of the eigensystem.
inline GridFunction apply_power(const EigenSystem& es, const GridFunction& f, double s) {
  return synthesize(es, apply_power(es, project(es, f), s));
}

/// Relative L_2 size of the part of f outside the eigensystem span.
inline double out_of_band_fraction(const EigenSystem& es, const GridFunction& f) {
  const double total = lp_norm(f, 2.0);
  if (total == 0.0) return 0.0;
  const GridFunction back = synthesize(es, project(es, f));
  return lp_norm(*f.model(), f.values() - back.values(), 2.0) / total;
}

// ---------------------------------------------------------------------------
// JSON cache

inline nlohmann::json to_json(const ModelDescriptor& d) {
  return {{"kind", to_string(d.kind)},
          {"dim", d.dim},
          {"resolution", d.resolution},
          {"node_count", d.node_count},
          {"source", d.source}};
}

/// Eigenvalues, row-major eigenfunction matrix (nodes x eigenpairs) and the
/// model descriptor.
inline nlohmann::json export_eigensystem(const EigenSystem& es) {
  const auto& U = es.eigenfunctions();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(U.size()));
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index j = 0; j < U.cols(); ++j) data.push_back(U(i, j));
  }
  return {{"model", to_json(es.model()->descriptor())},
          {"band_limit", es.band_limit()},
          {"eigenvalues", std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + es.size())},
          {"labels", es.labels()},
          {"eigenfunctions", {{"rows", U.rows()}, {"cols", U.cols()}, {"data", std::move(data)}}}};
}

/// Rebuilds an eigensystem from export_eigensystem output; the document must
/// describe `model`.
inline EigenSystem import_eigensystem(const nlohmann::json& doc, const ModelPtr& model) {
  const auto& m = doc.at("model");
  const ModelDescriptor& d = model->descriptor();
  if (m.at("kind").get<std::string>() != to_string(d.kind) || m.at("node_count").get<Eigen::Index>() != d.node_count ||
      m.at("resolution").get<int>() != d.resolution) {
    throw std::invalid_argument("cached eigensystem was computed for a different model");
  }
  const auto values = doc.at("eigenvalues").get<std::vector<double>>();
  const auto& ef = doc.at("eigenfunctions");
  const auto rows = ef.at("rows").get<Eigen::Index>(), cols = ef.at("cols").get<Eigen::Index>();
  const auto data = ef.at("data").get<std::vector<double>>();
  if (rows != model->size() || cols != static_cast<Eigen::Index>(values.size()) ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("cached eigensystem has inconsistent shape");
  }
  Eigen::MatrixXd U(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) U(i, j) = data[static_cast<std::size_t>(i * cols + j)];
  }
  Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(values.data(), cols);
  std::vector<std::string> labels;
  if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<std::string>>();
  return EigenSystem(model, std::move(lambda), std::move(U), doc.at("band_limit").get<double>(), std::move(labels));
}

}  // namespace besovlab
