#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace besovlab {

/// Raised for malformed OFF input and for meshes that are not closed
/// 2-manifolds made of non-degenerate triangles.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
};

inline constexpr double kDegenerateArea = 1e-14;

inline double triangle_area(const TriangleMesh& mesh, const std::array<int, 3>& f) {
  const Eigen::Vector3d& a = mesh.vertices[f[0]];
  const Eigen::Vector3d& b = mesh.vertices[f[1]];
  const Eigen::Vector3d& c = mesh.vertices[f[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

namespace detail {

// Next non-empty, non-comment line. OFF allows '#' comments.
inline bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace detail

/// Checks that every face references valid vertices, no triangle is
/// degenerate, every vertex is used and every undirected edge is shared by
/// exactly two faces (closed 2-manifold).
inline void validate_closed_mesh(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw MeshError("mesh has no triangles");
  const int nv = static_cast<int>(mesh.vertices.size());
  std::vector<bool> used(mesh.vertices.size(), false);
  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    for (int v : f) {
      if (v < 0 || v >= nv) {
        throw MeshError("face " + std::to_string(fi) + " references vertex " + std::to_string(v) +
                        " out of range");
      }
      used[v] = true;
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw MeshError("face " + std::to_string(fi) + " repeats a vertex");
    }
    const double area = triangle_area(mesh, f);
    if (!(area >= kDegenerateArea)) {
      throw MeshError("degenerate triangle " + std::to_string(fi) + " (area " + std::to_string(area) + ")");
    }
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (!used[v]) throw MeshError("vertex " + std::to_string(v) + " is not referenced by any face");
  }
  for (const auto& [edge, count] : edge_count) {
    if (count != 2) {
      throw MeshError("mesh is not closed: edge (" + std::to_string(edge.first) + "," +
                      std::to_string(edge.second) + ") has " + std::to_string(count) + " incident faces");
    }
  }
}

/// Parses an ASCII OFF triangle mesh and validates it.
inline TriangleMesh parse_off(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!detail::next_content_line(in, line, line_no)) throw MeshError("empty OFF input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw MeshError("line " + std::to_string(line_no) + ": expected 'OFF' header");

  // Counts may share the header line.
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!detail::next_content_line(in, line, line_no)) throw MeshError("missing counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw MeshError("line " + std::to_string(line_no) + ": malformed counts");
    counts >> ne;
  }
  if (nv <= 0 || nf <= 0) throw MeshError("vertex and face counts must be positive");

  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!detail::next_content_line(in, line, line_no)) throw MeshError("unexpected end of file in vertex list");
    std::istringstream vs(line);
    double x, y, z;
    if (!(vs >> x >> y >> z) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw MeshError("line " + std::to_string(line_no) + ": malformed vertex");
    }
    mesh.vertices.emplace_back(x, y, z);
  }
  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!detail::next_content_line(in, line, line_no)) throw MeshError("unexpected end of file in face list");
    std::istringstream fs(line);
    int count;
    std::array<int, 3> f{};
    if (!(fs >> count)) throw MeshError("line " + std::to_string(line_no) + ": malformed face");
    if (count != 3) throw MeshError("line " + std::to_string(line_no) + ": only triangles are supported");
    if (!(fs >> f[0] >> f[1] >> f[2])) throw MeshError("line " + std::to_string(line_no) + ": malformed face");
    mesh.faces.push_back(f);
  }
  validate_closed_mesh(mesh);
  return mesh;
}

inline TriangleMesh read_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return parse_off(in);
}

inline void write_off(std::ostream& out, const TriangleMesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void write_off(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file '" + path + "'");
  write_off(out, mesh);
}

/// Regular icosahedron inscribed in the unit sphere.
inline TriangleMesh make_icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  const double raw[12][3] = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (const auto& p : raw) mesh.vertices.push_back(Eigen::Vector3d(p[0], p[1], p[2]).normalized());
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return mesh;
}

/// Icosahedron subdivided `level` times (each triangle into four), with
/// vertices projected onto the unit sphere. Level 3 has 642 vertices.
inline TriangleMesh make_icosphere(int level) {
  if (level < 0) throw std::invalid_argument("icosphere level must be >= 0");
  TriangleMesh mesh = make_icosahedron();
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(faces);
  }
  return mesh;
}

/// Barycentric (lumped) vertex areas: each triangle gives a third of its
/// area to each corner.
inline Eigen::VectorXd lumped_vertex_areas(const TriangleMesh& mesh) {
  Eigen::VectorXd areas = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (const auto& f : mesh.faces) {
    const double a = triangle_area(mesh, f) / 3.0;
    for (int v : f) areas[v] += a;
  }
  return areas;
}

/// Dense cotangent stiffness matrix S with S_ij = -(cot a + cot b)/2 for
/// each edge and zero row sums; symmetric positive semidefinite.
inline Eigen::MatrixXd cotangent_stiffness(const TriangleMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (const auto& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      const int i = f[(c + 1) % 3], j = f[(c + 2) % 3];
      const Eigen::Vector3d u = mesh.vertices[i] - mesh.vertices[f[c]];
      const Eigen::Vector3d v = mesh.vertices[j] - mesh.vertices[f[c]];
      const double cot = u.dot(v) / u.cross(v).norm();
      S(i, j) -= 0.5 * cot;
      S(j, i) -= 0.5 * cot;
      S(i, i) += 0.5 * cot;
      S(j, j) += 0.5 * cot;
    }
  }
  return S;
}

/// All-pairs shortest paths on the edge graph with Euclidean edge lengths.
inline Eigen::MatrixXd edge_graph_distances(const TriangleMesh& mesh) {
  const auto n = static_cast<int>(mesh.vertices.size());
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  std::map<std::pair<int, int>, double> edges;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const auto key = std::minmax(f[e], f[(e + 1) % 3]);
      edges.emplace(key, (mesh.vertices[key.first] - mesh.vertices[key.second]).norm());
    }
  }
  for (const auto& [e, len] : edges) {
    adj[e.first].emplace_back(e.second, len);
    adj[e.second].emplace_back(e.first, len);
  }

  Eigen::MatrixXd dist(n, n);
  using Item = std::pair<double, int>;
  for (int src = 0; src < n; ++src) {
    std::vector<double> d(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    d[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > d[u]) continue;
      for (const auto& [v, len] : adj[u]) {
        if (du + len < d[v]) {
          d[v] = du + len;
          heap.emplace(d[v], v);
        }
      }
    }
    for (int v = 0; v < n; ++v) dist(src, v) = d[v];
  }
  // Symmetrize exactly; Dijkstra from both ends can differ in the last ulp.
  dist = 0.5 * (dist + dist.transpose()).eval();
  return dist;
}

}  // namespace besovlab
