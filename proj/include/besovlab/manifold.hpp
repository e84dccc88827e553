#pragma once

#include "besovlab/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace besovlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ManifoldKind { circle, torus2, sphere2, mesh };

inline std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::torus2: return "torus2";
    case ManifoldKind::sphere2: return "sphere2";
    case ManifoldKind::mesh: return "mesh";
  }
  return "unknown";
}

/// Identifies a model well enough to check that cached data (eigensystems)
/// belongs to it.
struct ModelDescriptor {
  ManifoldKind kind = ManifoldKind::circle;
  int dim = 1;
  int resolution = 0;  // n_nodes, n_per_dim, band, or vertex count
  Eigen::Index node_count = 0;
  std::string source;  // mesh path, empty for analytic models

  bool operator==(const ModelDescriptor&) const = default;
};

/// A compact Riemannian manifold sampled by quadrature nodes.
///
/// `points` holds intrinsic angles for the circle (theta) and torus
/// (theta1, theta2) and ambient xyz coordinates for the sphere and meshes.
/// Immutable once built; share through ModelPtr.
class ManifoldModel {
 public:
  struct Data {
    ModelDescriptor descriptor;
    Eigen::MatrixXd points;
    Eigen::MatrixXd sphere_angles;  // colatitude, longitude (sphere2 only)
    Eigen::VectorXd weights;
    double injectivity_radius_proxy = 0.0;
    std::shared_ptr<const TriangleMesh> mesh;
    std::shared_ptr<const Eigen::MatrixXd> distance_table;  // mesh only
  };

  explicit ManifoldModel(Data data) : data_(std::move(data)) {
    if (data_.weights.size() != data_.points.rows() || data_.weights.size() == 0) {
      throw std::invalid_argument("weights and nodes disagree in length");
    }
    if ((data_.weights.array() <= 0.0).any()) throw std::invalid_argument("quadrature weights must be positive");
    data_.descriptor.node_count = data_.weights.size();
    total_measure_ = data_.weights.sum();
  }

  ManifoldKind kind() const { return data_.descriptor.kind; }
  int dim() const { return data_.descriptor.dim; }
  Eigen::Index size() const { return data_.weights.size(); }
  const ModelDescriptor& descriptor() const { return data_.descriptor; }
  const Eigen::MatrixXd& points() const { return data_.points; }
  const Eigen::MatrixXd& sphere_angles() const { return data_.sphere_angles; }
  const Eigen::VectorXd& weights() const { return data_.weights; }
  double total_measure() const { return total_measure_; }
  double injectivity_radius_proxy() const { return data_.injectivity_radius_proxy; }
  const TriangleMesh* mesh() const { return data_.mesh.get(); }

  /// Geodesic distance between nodes i and j.
  double distance(Eigen::Index i, Eigen::Index j) const {
    const auto& P = data_.points;
    switch (kind()) {
      case ManifoldKind::circle: return circle_distance(P(i, 0), P(j, 0));
      case ManifoldKind::torus2:
        return std::hypot(circle_distance(P(i, 0), P(j, 0)), circle_distance(P(i, 1), P(j, 1)));
      case ManifoldKind::sphere2: {
        const Eigen::Vector3d a = P.row(i).transpose(), b = P.row(j).transpose();
        return std::atan2(a.cross(b).norm(), a.dot(b));
      }
      case ManifoldKind::mesh: return (*data_.distance_table)(i, j);
    }
    return 0.0;
  }

  static double circle_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2.0 * kPi);
    return std::min(d, 2.0 * kPi - d);
  }

 private:
  Data data_;
  double total_measure_ = 0.0;
};

using ModelPtr = std::shared_ptr<const ManifoldModel>;

/// Node samples of a real function on a model.
class GridFunction {
 public:
  GridFunction(ModelPtr model, Eigen::VectorXd values) : model_(std::move(model)), values_(std::move(values)) {
    if (!model_) throw std::invalid_argument("grid function needs a model");
    if (values_.size() != model_->size()) {
      throw std::invalid_argument("grid function length " + std::to_string(values_.size()) +
                                  " does not match node count " + std::to_string(model_->size()));
    }
    if (!values_.allFinite()) throw std::invalid_argument("grid function has non-finite values");
  }

  /// Samples `fn` at every node; `fn` receives the node's row of points().
  template <class Fn>
  static GridFunction sample(const ModelPtr& model, Fn&& fn) {
    Eigen::VectorXd v(model->size());
    for (Eigen::Index i = 0; i < model->size(); ++i) v[i] = fn(model->points().row(i));
    return GridFunction(model, std::move(v));
  }

  static GridFunction zero(const ModelPtr& model) { return GridFunction(model, Eigen::VectorXd::Zero(model->size())); }

  const ModelPtr& model() const { return model_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

 private:
  ModelPtr model_;
  Eigen::VectorXd values_;
};

// ---------------------------------------------------------------------------
// Builders

inline ModelPtr build_circle(int n_nodes) {
  if (n_nodes < 8) throw std::invalid_argument("circle needs at least 8 nodes");
  if (n_nodes % 2 != 0) throw std::invalid_argument("circle node count must be even");
  ManifoldModel::Data d;
  d.descriptor = {ManifoldKind::circle, 1, n_nodes, n_nodes, ""};
  d.points.resize(n_nodes, 1);
  for (int i = 0; i < n_nodes; ++i) d.points(i, 0) = 2.0 * kPi * i / n_nodes;
  d.weights = Eigen::VectorXd::Constant(n_nodes, 2.0 * kPi / n_nodes);
  d.injectivity_radius_proxy = kPi;
  return std::make_shared<const ManifoldModel>(std::move(d));
}

/// Node (i, j) has index i * n + j and angles (2 pi i / n, 2 pi j / n).
inline ModelPtr build_torus2(int n_per_dim) {
  if (n_per_dim < 8) throw std::invalid_argument("torus needs at least 8 nodes per dimension");
  if (n_per_dim % 2 != 0) throw std::invalid_argument("torus node count per dimension must be even");
  const int n = n_per_dim;
  ManifoldModel::Data d;
  d.descriptor = {ManifoldKind::torus2, 2, n, n * n, ""};
  d.points.resize(n * n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      d.points(i * n + j, 0) = 2.0 * kPi * i / n;
      d.points(i * n + j, 1) = 2.0 * kPi * j / n;
    }
  }
  const double h = 2.0 * kPi / n;
  d.weights = Eigen::VectorXd::Constant(n * n, h * h);
  d.injectivity_radius_proxy = kPi;
  return std::make_shared<const ManifoldModel>(std::move(d));
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  // P_n(z) and P_n'(z) by the three-term recurrence.
  auto legendre = [n](double z) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (z * p1 - p0) / (z * z - 1.0)};
  };
  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double dp = legendre(z).second;
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Product quadrature on the unit sphere: band+1 Gauss-Legendre rings in
/// cos(colatitude) times 2*band+1 equispaced longitudes. Integrates products
/// of spherical harmonics of degree <= band exactly.
inline ModelPtr build_sphere2(int band) {
  if (band < 4) throw std::invalid_argument("sphere band must be >= 4");
  const int n_lat = band + 1;
  const int n_lon = 2 * band + 1;
  const auto [z, wz] = gauss_legendre(n_lat);
  ManifoldModel::Data d;
  d.descriptor = {ManifoldKind::sphere2, 2, band, n_lat * n_lon, ""};
  d.points.resize(n_lat * n_lon, 3);
  d.sphere_angles.resize(n_lat * n_lon, 2);
  d.weights.resize(n_lat * n_lon);
  for (int i = 0; i < n_lat; ++i) {
    const double theta = std::acos(z[i]);
    const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2.0 * kPi * j / n_lon;
      const int idx = i * n_lon + j;
      d.points.row(idx) << s * std::cos(phi), s * std::sin(phi), z[i];
      d.sphere_angles.row(idx) << theta, phi;
      d.weights[idx] = wz[i] * 2.0 * kPi / n_lon;
    }
  }
  d.injectivity_radius_proxy = kPi;
  return std::make_shared<const ManifoldModel>(std::move(d));
}

/// Model of a closed triangle mesh: vertices as nodes, lumped vertex areas as
/// weights, edge-graph shortest paths as distance.
inline ModelPtr build_mesh_model(TriangleMesh mesh, std::string source = "") {
  validate_closed_mesh(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  ManifoldModel::Data d;
  d.descriptor = {ManifoldKind::mesh, 2, static_cast<int>(n), n, std::move(source)};
  d.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) d.points.row(i) = mesh.vertices[i].transpose();
  d.weights = lumped_vertex_areas(mesh);
  auto dist = std::make_shared<Eigen::MatrixXd>(edge_graph_distances(mesh));
  if (!dist->allFinite()) throw MeshError("mesh is not connected");
  // Shortest edge is a conservative stand-in for the injectivity radius.
  double shortest = kInf;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      shortest = std::min(shortest, (mesh.vertices[f[e]] - mesh.vertices[f[(e + 1) % 3]]).norm());
    }
  }
  d.injectivity_radius_proxy = shortest;
  d.distance_table = std::move(dist);
  d.mesh = std::make_shared<const TriangleMesh>(std::move(mesh));
  return std::make_shared<const ManifoldModel>(std::move(d));
}

inline ModelPtr load_mesh(const std::string& path) { return build_mesh_model(read_off(path), path); }

// ---------------------------------------------------------------------------
// Norms and geometry

/// Quadrature L_p norm (sum_i w_i |f_i|^p)^(1/p); node max for p = inf.
inline double lp_norm(const ManifoldModel& model, const Eigen::Ref<const Eigen::VectorXd>& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  if (f.size() != model.size()) throw std::invalid_argument("lp_norm: length does not match model");
  const double peak = f.cwiseAbs().maxCoeff();
  if (std::isinf(p) || peak == 0.0) return peak;
  if (p == 1.0) return model.weights().dot(f.cwiseAbs());
  if (p == 2.0) return std::sqrt(model.weights().dot(f.cwiseAbs2()));
  // Scale by the peak so large p does not overflow.
  const double s = model.weights().dot((f.cwiseAbs() / peak).array().pow(p).matrix());
  return peak * std::pow(s, 1.0 / p);
}

inline double lp_norm(const GridFunction& f, double p) { return lp_norm(*f.model(), f.values(), p); }

/// |B(x_center, r)| estimated as the weight of nodes within distance r.
inline double ball_volume(const ManifoldModel& model, Eigen::Index center, double r) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    if (model.distance(center, j) <= r) v += model.weights()[j];
  }
  return v;
}

/// Least-squares slope of log|B(x,r)| against log r.
inline double fit_ball_exponent(const ManifoldModel& model, Eigen::Index center, std::span<const double> radii) {
  if (radii.size() < 2) throw std::invalid_argument("need at least two radii");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(radii.size());
  for (double r : radii) {
    const double x = std::log(r), y = std::log(ball_volume(model, center, r));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline void require_same_model(const ModelPtr& a, const ModelPtr& b, const char* what) {
  if (a.get() != b.get() && !(a && b && a->descriptor() == b->descriptor())) {
    throw std::invalid_argument(std::string(what) + ": function and eigensystem live on different models");
  }
}

}  // namespace besovlab
