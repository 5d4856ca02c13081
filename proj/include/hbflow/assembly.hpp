#pragma once

// Forms of the coupled weak problem on a MixedSpace:
//
//   viscous     a(u; v)     = sum_i int_{Omega_i} eta_i(|D(state)|) D(u) : D(v)
//   convection  b(w; u, v)  = sum_i int_{Omega_i} (w . grad) u . v
//   divergence  (q, div u)  with per-subdomain pressure test functions
//   yield       j(v)        = sum_i g_i int_{Omega_i} |D(v)|
//
// together with loads, the nonlinear flux operator and the norms that enter
// the a priori estimates. Element kernels are shared between the standalone
// assemblers below and the fused saddle-point assembly of the solver.

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "hbflow/core_tensor.hpp"
#include "hbflow/parallel.hpp"
#include "hbflow/quadrature.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

/// Per-subdomain material records, indexed by tag - 1.
using Materials = std::array<FluidParams, 2>;
/// Constant body force density per subdomain, indexed by tag - 1.
using BodyForces = std::array<Point2, 2>;

inline const FluidParams& fluid(const Materials& m, int tag) { return m[static_cast<std::size_t>(tag - 1)]; }

inline Materials with_eps(Materials m, double eps) {
  for (auto& f : m) f.eps = eps;
  return m;
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Basis data at one quadrature point of one element.
struct QuadSample {
  double weight = 0.0;  // rule weight times element area
  std::array<double, 3> bary{};
  std::array<double, 6> N{};
  std::array<Point2, 6> G{};
};

template <typename Fn>
void for_each_quad(const MixedSpace& space, int e, Fn&& fn) {
  const auto& gl = space.bary_gradients(e);
  const double area = space.area(e);
  const auto& pts = space.rule().points;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    QuadSample s;
    s.weight = pts[q].weight * area;
    s.bary = pts[q].bary;
    s.N = P2Basis::values(s.bary);
    s.G = P2Basis::gradients(s.bary, gl);
    fn(q, s);
  }
}

/// D(N_a e_c) for the 12 local vector basis functions, index 2a + c.
inline std::array<SymTensor2, 12> basis_strains(const std::array<Point2, 6>& G) {
  std::array<SymTensor2, 12> d;
  for (int a = 0; a < 6; ++a) {
    SymTensor2 dx, dy;
    dx(0, 0) = G[a].x;
    dx(0, 1) = 0.5 * G[a].y;
    dy(1, 1) = G[a].y;
    dy(0, 1) = 0.5 * G[a].x;
    d[2 * a] = dx;
    d[2 * a + 1] = dy;
  }
  return d;
}

inline SymTensor2 strain_at(const Eigen::VectorXd& u, const MixedSpace& space, int e, const QuadSample& s) {
  Matrix2 G{};
  for (int a = 0; a < 6; ++a) {
    const int n = space.velocity_node(e, a);
    const double ux = u[2 * n], uy = u[2 * n + 1];
    G[0][0] += ux * s.G[a].x;
    G[0][1] += ux * s.G[a].y;
    G[1][0] += uy * s.G[a].x;
    G[1][1] += uy * s.G[a].y;
  }
  return symmetric_gradient(G);
}

inline Point2 value_at(const Eigen::VectorXd& u, const MixedSpace& space, int e, const QuadSample& s) {
  Point2 v;
  for (int a = 0; a < 6; ++a) {
    const int n = space.velocity_node(e, a);
    v.x += s.N[a] * u[2 * n];
    v.y += s.N[a] * u[2 * n + 1];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Convecting velocity sources

/// Discrete velocity of a field as the convecting velocity.
struct FieldVelocity {
  const MixedSpace* space;
  const Eigen::VectorXd* u;
  Point2 operator()(int e, const QuadSample& s, Point2) const { return value_at(*u, *space, e, s); }
};

/// Closed-form velocity x -> w(x) as the convecting velocity.
template <typename F>
struct AnalyticVelocity {
  F fn;
  Point2 operator()(int, const QuadSample&, Point2 x) const { return fn(x); }
};
template <typename F>
AnalyticVelocity(F) -> AnalyticVelocity<F>;

// ---------------------------------------------------------------------------
// Element kernels

using ElementMatrix = Eigen::Matrix<double, 12, 12>;
using ElementDivergence = Eigen::Matrix<double, 3, 12>;

/// int eta D(phi_j) : D(phi_i), with eta(e, sample index, sample).
template <typename Eta>
void viscous_element(const MixedSpace& space, int e, Eta&& eta, ElementMatrix& out) {
  out.setZero();
  for_each_quad(space, e, [&](std::size_t q, const QuadSample& s) {
    const double c = s.weight * eta(e, q, s);
    const auto d = basis_strains(s.G);
    for (int i = 0; i < 12; ++i)
      for (int j = i; j < 12; ++j) out(i, j) += c * d[i].dot(d[j]);
  });
  out.template triangularView<Eigen::StrictlyLower>() = out.transpose();
}

/// Jacobian of u -> int eta(|D(u)|) D(u) : D(v) at `u` (regularized law).
inline void viscous_tangent_element(const MixedSpace& space, int e, const Eigen::VectorXd& u,
                                    const Materials& mats, ElementMatrix& out) {
  out.setZero();
  const FluidParams& fp = fluid(mats, space.tag(e));
  for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
    const SymTensor2 D = strain_at(u, space, e, s);
    const double dn = D.frobenius_norm();
    const double eta = effective_viscosity(dn, fp);
    const double slope = effective_viscosity_slope_over_s(dn, fp);
    const auto d = basis_strains(s.G);
    std::array<double, 12> proj;
    for (int i = 0; i < 12; ++i) proj[i] = D.dot(d[i]);
    for (int i = 0; i < 12; ++i)
      for (int j = i; j < 12; ++j) out(i, j) += s.weight * (eta * d[i].dot(d[j]) + slope * proj[i] * proj[j]);
  });
  out.triangularView<Eigen::StrictlyLower>() = out.transpose();
}

/// int (w . grad phi_j) . phi_i
template <typename W>
void convection_element(const MixedSpace& space, int e, const W& w, ElementMatrix& out) {
  out.setZero();
  for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
    const Point2 wq = w(e, s, space.physical_point(e, s.bary));
    std::array<double, 6> adv;
    for (int b = 0; b < 6; ++b) adv[b] = wq.x * s.G[b].x + wq.y * s.G[b].y;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double v = s.weight * s.N[a] * adv[b];
        out(2 * a, 2 * b) += v;
        out(2 * a + 1, 2 * b + 1) += v;
      }
  });
}

/// int q_i div(phi_j), q_i the P1 pressure basis.
inline void divergence_element(const MixedSpace& space, int e, ElementDivergence& out) {
  out.setZero();
  for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
    for (int i = 0; i < 3; ++i)
      for (int b = 0; b < 6; ++b) {
        out(i, 2 * b) += s.weight * s.bary[i] * s.G[b].x;
        out(i, 2 * b + 1) += s.weight * s.bary[i] * s.G[b].y;
      }
  });
}

// ---------------------------------------------------------------------------
// Standalone assemblers (raw: no Dirichlet reduction)

namespace detail {

template <typename Kernel>
Eigen::SparseMatrix<double> assemble_velocity_block(const MixedSpace& space, Kernel&& kernel) {
  const int ne = space.num_elements();
  std::vector<ElementMatrix> local(static_cast<std::size_t>(ne));
  parallel_for(ne, [&](int e) { kernel(e, local[static_cast<std::size_t>(e)]); });
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ne) * 144);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        trip.emplace_back(space.velocity_dof(e, i / 2, i % 2), space.velocity_dof(e, j / 2, j % 2),
                          local[static_cast<std::size_t>(e)](i, j));
  Eigen::SparseMatrix<double> A(space.num_velocity_dofs(), space.num_velocity_dofs());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

}  // namespace detail

/// Frozen-viscosity matrix with eta evaluated from |D(state)| per subdomain.
inline Eigen::SparseMatrix<double> assemble_viscous(const MixedSpace& space, const MixedField& state,
                                                    const Materials& mats) {
  return detail::assemble_velocity_block(space, [&](int e, ElementMatrix& out) {
    const FluidParams& fp = fluid(mats, space.tag(e));
    viscous_element(space, e,
                    [&](int el, std::size_t, const QuadSample& s) {
                      return effective_viscosity(strain_at(state.velocity, space, el, s).frobenius_norm(), fp);
                    },
                    out);
  });
}

/// Frozen-viscosity matrix for an arbitrary viscosity eta(e, q, sample).
template <typename Eta>
Eigen::SparseMatrix<double> assemble_viscous_with(const MixedSpace& space, Eta&& eta) {
  return detail::assemble_velocity_block(space, [&](int e, ElementMatrix& out) { viscous_element(space, e, eta, out); });
}

template <typename W>
Eigen::SparseMatrix<double> assemble_convection(const MixedSpace& space, const W& w) {
  return detail::assemble_velocity_block(space, [&](int e, ElementMatrix& out) { convection_element(space, e, w, out); });
}

inline Eigen::SparseMatrix<double> assemble_convection(const MixedSpace& space, const MixedField& w) {
  return assemble_convection(space, FieldVelocity{&space, &w.velocity});
}

/// Rows: pressure dofs; columns: velocity dofs.
inline Eigen::SparseMatrix<double> assemble_divergence(const MixedSpace& space) {
  std::vector<Eigen::Triplet<double>> trip;
  ElementDivergence B;
  for (int e = 0; e < space.num_elements(); ++e) {
    divergence_element(space, e, B);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 12; ++j) trip.emplace_back(space.pressure_dof(e, i), space.velocity_dof(e, j / 2, j % 2), B(i, j));
  }
  Eigen::SparseMatrix<double> M(space.num_pressure_dofs(), space.num_velocity_dofs());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// int f_i . phi over each subdomain.
inline Eigen::VectorXd load_vector(const MixedSpace& space, const BodyForces& f) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(space.num_velocity_dofs());
  for (int e = 0; e < space.num_elements(); ++e) {
    const Point2 fe = f[static_cast<std::size_t>(space.tag(e) - 1)];
    for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
      for (int a = 0; a < 6; ++a) {
        F[space.velocity_dof(e, a, 0)] += s.weight * s.N[a] * fe.x;
        F[space.velocity_dof(e, a, 1)] += s.weight * s.N[a] * fe.y;
      }
    });
  }
  return F;
}

/// Integral of each pressure basis function (gauge row).
inline Eigen::VectorXd pressure_mass(const MixedSpace& space) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(space.num_pressure_dofs());
  for (int e = 0; e < space.num_elements(); ++e)
    for (int a = 0; a < 3; ++a) m[space.pressure_dof(e, a)] += space.area(e) / 3.0;
  return m;
}

/// Vector of <flux(D(u)), D(phi_k)> for every velocity dof, with
/// flux(tag, D) -> SymTensor2 evaluated at each quadrature point.
template <typename Flux>
Eigen::VectorXd apply_flux(const MixedSpace& space, const Eigen::VectorXd& u, Flux&& flux) {
  const int ne = space.num_elements();
  std::vector<std::array<double, 12>> local(static_cast<std::size_t>(ne));
  parallel_for(ne, [&](int e) {
    auto& r = local[static_cast<std::size_t>(e)];
    r.fill(0.0);
    const int tag = space.tag(e);
    for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
      const SymTensor2 sigma = flux(tag, strain_at(u, space, e, s));
      const auto d = basis_strains(s.G);
      for (int i = 0; i < 12; ++i) r[i] += s.weight * sigma.dot(d[i]);
    });
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.num_velocity_dofs());
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 12; ++i) out[space.velocity_dof(e, i / 2, i % 2)] += local[static_cast<std::size_t>(e)][i];
  return out;
}

/// Unregularized power-law operator: mu_i |D|^{p_i - 2} D, zero where D = 0.
inline Eigen::VectorXd power_law_operator(const MixedSpace& space, const Eigen::VectorXd& u, const Materials& mats) {
  return apply_flux(space, u, [&](int tag, const SymTensor2& D) {
    const FluidParams& fp = fluid(mats, tag);
    return power_law_flux(D, fp.p, fp.mu);
  });
}

/// Regularized operator eta_eps(|D|) D including the smoothed yield term.
inline Eigen::VectorXd regularized_operator(const MixedSpace& space, const Eigen::VectorXd& u, const Materials& mats) {
  return apply_flux(space, u, [&](int tag, const SymTensor2& D) {
    return effective_viscosity(D.frobenius_norm(), fluid(mats, tag)) * D;
  });
}

/// Sum over elements of weight * g(tag, e, sample), reduced in element order.
template <typename Integrand>
double integrate(const MixedSpace& space, Integrand&& g) {
  const int ne = space.num_elements();
  std::vector<double> local(static_cast<std::size_t>(ne), 0.0);
  parallel_for(ne, [&](int e) {
    double acc = 0.0;
    for_each_quad(space, e, [&](std::size_t, const QuadSample& s) { acc += s.weight * g(space.tag(e), e, s); });
    local[static_cast<std::size_t>(e)] = acc;
  });
  double total = 0.0;
  for (double v : local) total += v;
  return total;
}

/// j(v) = g_1 int_{Omega_1} |D(v)| + g_2 int_{Omega_2} |D(v)|.
inline double yield_functional(const MixedSpace& space, const Eigen::VectorXd& u, const Materials& mats) {
  return integrate(space, [&](int tag, int e, const QuadSample& s) {
    return fluid(mats, tag).g * strain_at(u, space, e, s).frobenius_norm();
  });
}

inline double yield_functional(const MixedSpace& space, const MixedField& f, const Materials& mats) {
  return yield_functional(space, f.velocity, mats);
}

struct FieldNorms {
  std::array<double, 2> w1p{};  // ||u_i||_{W^{1,p_i}(Omega_i)}
  double v_norm = 0.0;          // w1p[0] + w1p[1]
  double l2 = 0.0;              // over Omega
  double l6 = 0.0;              // over Omega
};

inline double l6_norm(const MixedSpace& space, const Eigen::VectorXd& u) {
  const double s = integrate(space, [&](int, int e, const QuadSample& q) {
    const Point2 v = value_at(u, space, e, q);
    const double m2 = dot(v, v);
    return m2 * m2 * m2;
  });
  return std::pow(s, 1.0 / 6.0);
}

inline double l2_norm(const MixedSpace& space, const Eigen::VectorXd& u) {
  return std::sqrt(integrate(space, [&](int, int e, const QuadSample& q) {
    const Point2 v = value_at(u, space, e, q);
    return dot(v, v);
  }));
}

/// W^{1,p} norm (int |u|^p + |grad u|^p)^{1/p} restricted to one subdomain.
inline double w1p_norm(const MixedSpace& space, const Eigen::VectorXd& u, int tag, double p) {
  const double s = integrate(space, [&](int t, int e, const QuadSample& q) {
    if (t != tag) return 0.0;
    const Point2 v = value_at(u, space, e, q);
    Matrix2 G{};
    for (int a = 0; a < 6; ++a) {
      const int n = space.velocity_node(e, a);
      G[0][0] += u[2 * n] * q.G[a].x;
      G[0][1] += u[2 * n] * q.G[a].y;
      G[1][0] += u[2 * n + 1] * q.G[a].x;
      G[1][1] += u[2 * n + 1] * q.G[a].y;
    }
    const double g2 = G[0][0] * G[0][0] + G[0][1] * G[0][1] + G[1][0] * G[1][0] + G[1][1] * G[1][1];
    return std::pow(dot(v, v), 0.5 * p) + std::pow(g2, 0.5 * p);
  });
  return std::pow(s, 1.0 / p);
}

inline FieldNorms norms(const MixedSpace& space, const Eigen::VectorXd& u, const std::array<double, 2>& p) {
  FieldNorms n;
  n.w1p[0] = w1p_norm(space, u, 1, p[0]);
  n.w1p[1] = w1p_norm(space, u, 2, p[1]);
  n.v_norm = n.w1p[0] + n.w1p[1];
  n.l2 = l2_norm(space, u);
  n.l6 = l6_norm(space, u);
  return n;
}

inline FieldNorms norms(const MixedSpace& space, const MixedField& f, const Materials& mats) {
  return norms(space, f.velocity, {mats[0].p, mats[1].p});
}

// ---------------------------------------------------------------------------
// Trilinear identity check with closed-form fields

/// Vector field with its gradient G[l][m] = dv_l/dx_m, both in closed form.
struct AnalyticField {
  std::function<Point2(Point2)> value;
  std::function<Matrix2(Point2)> gradient;
};

struct TrilinearIdentitySides {
  double lhs = 0.0;  // B_i(v1, v2, v3) + B_i(v1, v3, v2)
  double rhs = 0.0;  // (-1)^{i+1} int_{Gamma0} (v1 . n)(v2 . v3)
};

/// Both sides of the integration-by-parts identity for the convection form
/// on subdomain `tag`, with high-order volume and edge quadrature.
inline TrilinearIdentitySides trilinear_identity_sides(const AnalyticField& v1, const AnalyticField& v2,
                                                       const AnalyticField& v3, const TwoPhaseMesh& mesh, int tag,
                                                       int order = 10) {
  const TriangleRule rule = collapsed_gauss(order);
  const auto line = gauss_legendre(order);
  TrilinearIdentitySides out;
  auto conv = [](Point2 a, const Matrix2& G, Point2 c) {
    // (a . grad) b . c with G = grad b
    return (a.x * G[0][0] + a.y * G[0][1]) * c.x + (a.x * G[1][0] + a.y * G[1][1]) * c.y;
  };
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tr = mesh.triangle(static_cast<int>(t));
    if (tr.tag != tag) continue;
    const double area = mesh.area(static_cast<int>(t));
    const Point2 p0 = mesh.node(tr.v[0]), p1 = mesh.node(tr.v[1]), p2 = mesh.node(tr.v[2]);
    for (const auto& q : rule.points) {
      const Point2 x = q.bary[0] * p0 + q.bary[1] * p1 + q.bary[2] * p2;
      const Point2 a = v1.value(x), b = v2.value(x), c = v3.value(x);
      out.lhs += q.weight * area * (conv(a, v2.gradient(x), c) + conv(a, v3.gradient(x), b));
    }
  }
  const double sign = tag == 1 ? 1.0 : -1.0;
  for (const auto& ie : mesh.interface_edges()) {
    const Point2 pa = mesh.node(ie.v[0]), pb = mesh.node(ie.v[1]);
    for (const auto& g : line) {
      const Point2 x = pa + g.s * (pb - pa);
      out.rhs += sign * g.weight * ie.length * dot(v1.value(x), ie.normal) * dot(v2.value(x), v3.value(x));
    }
  }
  return out;
}

inline double trilinear_identity_residual(const AnalyticField& v1, const AnalyticField& v2, const AnalyticField& v3,
                                          const TwoPhaseMesh& mesh, int tag) {
  const auto s = trilinear_identity_sides(v1, v2, v3, mesh, tag);
  return std::abs(s.lhs - s.rhs);
}

}  // namespace hbflow
