#pragma once

// Discrete coupled space on a TwoPhaseMesh.
//
// Velocity: continuous piecewise quadratics (vertex + edge-midpoint nodes,
// two components each). Nodes on Gamma0 are shared by both subdomains, so
// the no-slip transmission condition u1 = u2 holds exactly. Nodes on Gamma1
// and Gamma2 are Dirichlet (zero).
// Pressure: piecewise linears, continuous inside each subdomain and stored
// twice along Gamma0 (one copy per side).
// Periodic node pairs of the mesh are identified for both fields.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "hbflow/core_tensor.hpp"
#include "hbflow/mesh.hpp"
#include "hbflow/quadrature.hpp"

namespace hbflow {

struct SpaceOptions {
  bool dirichlet = true;             // constrain Gamma1 and Gamma2 velocity nodes
  TriangleRule rule = dunavant_degree4();
  int edge_points = 3;               // Gauss points on interface edges
};

/// Quadratic Lagrange basis on a triangle, in barycentric coordinates.
/// Local order: vertices 0, 1, 2, then midpoints of edges (0,1), (1,2), (2,0).
struct P2Basis {
  static constexpr int size = 6;
  static constexpr std::array<std::array<int, 2>, 3> edge_vertices{{{0, 1}, {1, 2}, {2, 0}}};

  static std::array<double, 6> values(const std::array<double, 3>& l) {
    return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
            4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
  }

  /// Physical gradients given the (constant) barycentric gradients.
  static std::array<Point2, 6> gradients(const std::array<double, 3>& l, const std::array<Point2, 3>& gl) {
    std::array<Point2, 6> g;
    for (int i = 0; i < 3; ++i) g[i] = (4 * l[i] - 1) * gl[i];
    for (int k = 0; k < 3; ++k) {
      const int a = edge_vertices[k][0], b = edge_vertices[k][1];
      g[3 + k] = 4.0 * (l[a] * gl[b] + l[b] * gl[a]);
    }
    return g;
  }
};

/// Velocity/pressure coefficient vectors. Velocity is interleaved (x, y) per node.
struct MixedField {
  Eigen::VectorXd velocity;
  Eigen::VectorXd pressure;
};

class MixedSpace {
 public:
  explicit MixedSpace(std::shared_ptr<const TwoPhaseMesh> mesh, SpaceOptions opts = {})
      : mesh_(std::move(mesh)), opts_(std::move(opts)) {
    build();
  }
  explicit MixedSpace(const TwoPhaseMesh& mesh, SpaceOptions opts = {})
      : MixedSpace(std::make_shared<const TwoPhaseMesh>(mesh), std::move(opts)) {}

  const TwoPhaseMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TwoPhaseMesh> mesh_ptr() const { return mesh_; }
  const SpaceOptions& options() const { return opts_; }
  const TriangleRule& rule() const { return opts_.rule; }

  int num_elements() const { return static_cast<int>(mesh_->num_triangles()); }
  int num_velocity_nodes() const { return static_cast<int>(vnode_pos_.size()); }
  int num_velocity_dofs() const { return 2 * num_velocity_nodes(); }
  int num_pressure_dofs() const { return static_cast<int>(pnode_pos_.size()); }

  int tag(int e) const { return mesh_->triangle(e).tag; }
  double area(int e) const { return area_[static_cast<std::size_t>(e)]; }

  /// Global velocity node of local P2 node `a` of element `e`.
  int velocity_node(int e, int a) const { return vnode_[static_cast<std::size_t>(e)][static_cast<std::size_t>(a)]; }
  int velocity_dof(int e, int a, int comp) const { return 2 * velocity_node(e, a) + comp; }
  int pressure_dof(int e, int a) const { return pnode_[static_cast<std::size_t>(e)][static_cast<std::size_t>(a)]; }

  /// Position of a velocity node (for periodic classes: of the representative).
  Point2 velocity_node_position(int n) const { return vnode_pos_[static_cast<std::size_t>(n)]; }
  Point2 pressure_node_position(int n) const { return pnode_pos_[static_cast<std::size_t>(n)]; }
  int pressure_node_tag(int n) const { return pnode_tag_[static_cast<std::size_t>(n)]; }
  /// Bit i-1 set when the velocity node touches a tag-i element.
  unsigned velocity_node_tags(int n) const { return vnode_tags_[static_cast<std::size_t>(n)]; }
  /// Bit set when the velocity node lies on a wall labeled 1 (bit 0) or 2 (bit 1).
  unsigned velocity_node_walls(int n) const { return vnode_walls_[static_cast<std::size_t>(n)]; }
  /// Mesh vertex of a pressure node (the periodic representative).
  int pressure_node_vertex(int n) const { return pnode_vertex_[static_cast<std::size_t>(n)]; }

  bool is_dirichlet(int dof) const { return dirichlet_[static_cast<std::size_t>(dof)] != 0; }
  const std::vector<char>& dirichlet_mask() const { return dirichlet_; }

  const std::array<Point2, 3>& bary_gradients(int e) const { return gl_[static_cast<std::size_t>(e)]; }

  Point2 physical_point(int e, const std::array<double, 3>& l) const {
    const auto& t = mesh_->triangle(e);
    return l[0] * mesh_->node(t.v[0]) + l[1] * mesh_->node(t.v[1]) + l[2] * mesh_->node(t.v[2]);
  }

  // --- field evaluation -----------------------------------------------------

  MixedField zero_field() const {
    return {Eigen::VectorXd::Zero(num_velocity_dofs()), Eigen::VectorXd::Zero(num_pressure_dofs())};
  }

  Point2 velocity(const MixedField& f, int e, const std::array<double, 3>& l) const {
    return velocity(f.velocity, e, l);
  }

  Point2 velocity(const Eigen::VectorXd& u, int e, const std::array<double, 3>& l) const {
    const auto n = P2Basis::values(l);
    Point2 v;
    for (int a = 0; a < 6; ++a) {
      const int node = velocity_node(e, a);
      v.x += n[a] * u[2 * node];
      v.y += n[a] * u[2 * node + 1];
    }
    return v;
  }

  /// Velocity gradient G[l][m] = du_l/dx_m.
  std::array<std::array<double, 2>, 2> velocity_gradient(const Eigen::VectorXd& u, int e,
                                                          const std::array<double, 3>& l) const {
    const auto g = P2Basis::gradients(l, bary_gradients(e));
    std::array<std::array<double, 2>, 2> G{};
    for (int a = 0; a < 6; ++a) {
      const int node = velocity_node(e, a);
      const double ux = u[2 * node], uy = u[2 * node + 1];
      G[0][0] += ux * g[a].x;
      G[0][1] += ux * g[a].y;
      G[1][0] += uy * g[a].x;
      G[1][1] += uy * g[a].y;
    }
    return G;
  }

  double pressure(const MixedField& f, int e, const std::array<double, 3>& l) const {
    double p = 0.0;
    for (int a = 0; a < 3; ++a) p += l[a] * f.pressure[pressure_dof(e, a)];
    return p;
  }

  /// Interpolates a vector function at the velocity nodes (Dirichlet entries zeroed).
  template <typename F>
  Eigen::VectorXd interpolate_velocity(F&& fn, bool apply_mask = true) const {
    Eigen::VectorXd u(num_velocity_dofs());
    for (int n = 0; n < num_velocity_nodes(); ++n) {
      const Point2 v = fn(velocity_node_position(n));
      u[2 * n] = v.x;
      u[2 * n + 1] = v.y;
    }
    if (apply_mask) zero_dirichlet(u);
    return u;
  }

  void zero_dirichlet(Eigen::VectorXd& u) const {
    for (int i = 0; i < num_velocity_dofs(); ++i)
      if (dirichlet_[static_cast<std::size_t>(i)]) u[i] = 0.0;
  }

  /// Throws InvariantError when a Dirichlet entry is nonzero or an entry is not finite.
  void check_field(const MixedField& f) const {
    if (f.velocity.size() != num_velocity_dofs() || f.pressure.size() != num_pressure_dofs())
      throw InvariantError("field size does not match the space");
    for (int i = 0; i < num_velocity_dofs(); ++i) {
      if (!std::isfinite(f.velocity[i])) throw InvariantError("non-finite velocity entry " + std::to_string(i));
      if (dirichlet_[static_cast<std::size_t>(i)] && f.velocity[i] != 0.0)
        throw InvariantError("Dirichlet velocity entry " + std::to_string(i) + " is not zero");
    }
    for (int i = 0; i < num_pressure_dofs(); ++i)
      if (!std::isfinite(f.pressure[i])) throw InvariantError("non-finite pressure entry " + std::to_string(i));
  }

 private:
  void build();

  std::shared_ptr<const TwoPhaseMesh> mesh_;
  SpaceOptions opts_;
  std::vector<std::array<int, 6>> vnode_;
  std::vector<std::array<int, 3>> pnode_;
  std::vector<Point2> vnode_pos_;
  std::vector<unsigned> vnode_tags_;
  std::vector<unsigned> vnode_walls_;
  std::vector<Point2> pnode_pos_;
  std::vector<int> pnode_tag_;
  std::vector<int> pnode_vertex_;
  std::vector<char> dirichlet_;
  std::vector<std::array<Point2, 3>> gl_;
  std::vector<double> area_;
};

inline void MixedSpace::build() {
  const auto& m = *mesh_;
  const int nv = static_cast<int>(m.num_nodes());
  const int ne = static_cast<int>(m.num_triangles());

  // Edge ownership and labels.
  std::unordered_map<std::uint64_t, int> owner_count;
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.triangle(e);
    for (int k = 0; k < 3; ++k) ++owner_count[detail::edge_key(t.v[k], t.v[(k + 1) % 3])];
  }
  std::unordered_map<std::uint64_t, int> label;
  for (const auto& b : m.boundary_edges()) label[detail::edge_key(b.v[0], b.v[1])] = b.label;

  // Vertex nodes: one per periodic class.
  std::vector<int> vertex_node(static_cast<std::size_t>(nv), -1);
  for (int i = 0; i < nv; ++i) {
    const int r = m.periodic_rep(i);
    if (vertex_node[static_cast<std::size_t>(r)] < 0) {
      vertex_node[static_cast<std::size_t>(r)] = static_cast<int>(vnode_pos_.size());
      vnode_pos_.push_back(m.node(r));
    }
  }
  for (int i = 0; i < nv; ++i) vertex_node[static_cast<std::size_t>(i)] = vertex_node[static_cast<std::size_t>(m.periodic_rep(i))];

  // Edge nodes: one per geometric edge; unlabeled outer edges (the periodic
  // seams) are matched with their partner through the vertex classes.
  std::unordered_map<std::uint64_t, int> edge_node;
  std::unordered_map<std::uint64_t, int> seam_node;
  vnode_.resize(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.triangle(e);
    auto& nodes = vnode_[static_cast<std::size_t>(e)];
    for (int a = 0; a < 3; ++a) nodes[static_cast<std::size_t>(a)] = vertex_node[static_cast<std::size_t>(t.v[a])];
    for (int k = 0; k < 3; ++k) {
      const int a = t.v[P2Basis::edge_vertices[k][0]], b = t.v[P2Basis::edge_vertices[k][1]];
      const auto key = detail::edge_key(a, b);
      auto it = edge_node.find(key);
      if (it == edge_node.end()) {
        int id = -1;
        const bool seam = owner_count[key] == 1 && !label.contains(key);
        if (seam) {
          const auto skey = detail::edge_key(m.periodic_rep(a), m.periodic_rep(b));
          if (auto s = seam_node.find(skey); s != seam_node.end()) id = s->second;
        }
        if (id < 0) {
          id = static_cast<int>(vnode_pos_.size());
          vnode_pos_.push_back(0.5 * (m.node(a) + m.node(b)));
          if (seam) seam_node.emplace(detail::edge_key(m.periodic_rep(a), m.periodic_rep(b)), id);
        }
        it = edge_node.emplace(key, id).first;
      }
      nodes[static_cast<std::size_t>(3 + k)] = it->second;
    }
  }

  vnode_tags_.assign(vnode_pos_.size(), 0u);
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < 6; ++a) vnode_tags_[static_cast<std::size_t>(velocity_node(e, a))] |= 1u << (tag(e) - 1);

  // Wall nodes.
  vnode_walls_.assign(vnode_pos_.size(), 0u);
  for (const auto& b : m.boundary_edges()) {
    if (b.label == 0) continue;
    const unsigned bit = 1u << (b.label - 1);
    vnode_walls_[static_cast<std::size_t>(vertex_node[static_cast<std::size_t>(b.v[0])])] |= bit;
    vnode_walls_[static_cast<std::size_t>(vertex_node[static_cast<std::size_t>(b.v[1])])] |= bit;
    vnode_walls_[static_cast<std::size_t>(edge_node.at(detail::edge_key(b.v[0], b.v[1])))] |= bit;
  }
  dirichlet_.assign(2 * vnode_pos_.size(), 0);
  if (opts_.dirichlet)
    for (std::size_t n = 0; n < vnode_pos_.size(); ++n)
      if (vnode_walls_[n]) dirichlet_[2 * n] = dirichlet_[2 * n + 1] = 1;

  // Pressure nodes keyed by (vertex class, subdomain).
  std::unordered_map<std::uint64_t, int> pkey;
  pnode_.resize(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.triangle(e);
    for (int a = 0; a < 3; ++a) {
      const int r = m.periodic_rep(t.v[a]);
      const auto key = (static_cast<std::uint64_t>(r) << 2) | static_cast<std::uint64_t>(t.tag);
      auto [it, fresh] = pkey.emplace(key, static_cast<int>(pnode_pos_.size()));
      if (fresh) {
        pnode_pos_.push_back(m.node(r));
        pnode_tag_.push_back(t.tag);
        pnode_vertex_.push_back(r);
      }
      pnode_[static_cast<std::size_t>(e)][static_cast<std::size_t>(a)] = it->second;
    }
  }

  // Geometry.
  gl_.resize(static_cast<std::size_t>(ne));
  area_.resize(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.triangle(e);
    const Point2 p0 = m.node(t.v[0]), p1 = m.node(t.v[1]), p2 = m.node(t.v[2]);
    const double a2 = cross(p1 - p0, p2 - p0);
    area_[static_cast<std::size_t>(e)] = 0.5 * a2;
    gl_[static_cast<std::size_t>(e)] = {Point2{(p1.y - p2.y) / a2, (p2.x - p1.x) / a2},
                                        Point2{(p2.y - p0.y) / a2, (p0.x - p2.x) / a2},
                                        Point2{(p0.y - p1.y) / a2, (p1.x - p0.x) / a2}};
  }
}

/// Symmetrized gradient of a velocity gradient matrix.
inline SymTensor2 symmetric_gradient(const std::array<std::array<double, 2>, 2>& G) {
  return SymTensor2::symmetric_part(G);
}

/// Rate of deformation 1/2 (grad u + grad u^T) of the discrete velocity.
inline SymTensor2 rate_of_deformation(const MixedSpace& space, const MixedField& field, int e,
                                      const std::array<double, 3>& bary) {
  return symmetric_gradient(space.velocity_gradient(field.velocity, e, bary));
}

/// Same, at point `q` of the space's quadrature rule.
inline SymTensor2 rate_of_deformation(const MixedSpace& space, const MixedField& field, int e, std::size_t q) {
  return rate_of_deformation(space, field, e, space.rule().points.at(q).bary);
}

}  // namespace hbflow
