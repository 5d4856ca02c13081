#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>

#include "hbflow/assembly.hpp"
#include "hbflow/properties.hpp"

using namespace hbflow;

namespace {

// Unit square, split at y = 1/2, no Dirichlet dofs.
MixedSpace free_box(int n = 4) {
  SpaceOptions opts;
  opts.dirichlet = false;
  return MixedSpace(std::make_shared<const TwoPhaseMesh>(
                        generate_channel_mesh(ChannelSpec{n, n, 0.5, 1.0, ChannelClosure::box})),
                    opts);
}

MixedSpace channel(int n = 6) {
  return MixedSpace(std::make_shared<const TwoPhaseMesh>(generate_channel_mesh(ChannelSpec{n, n, 0.5})));
}

Materials newtonian(double mu1 = 1.0, double mu2 = 1.0) {
  Materials m;
  m[0] = {mu1, 0.0, 2.0, 1e-4};
  m[1] = {mu2, 0.0, 2.0, 1e-4};
  return m;
}

Eigen::VectorXd random_velocity(const MixedSpace& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd v(s.num_velocity_dofs());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  s.zero_dirichlet(v);
  return v;
}

void expect_strain(const MixedSpace& s, const Eigen::VectorXd& u, double xx, double xy, double yy) {
  for (int e = 0; e < s.num_elements(); ++e)
    for_each_quad(s, e, [&](std::size_t, const QuadSample& q) {
      const SymTensor2 d = strain_at(u, s, e, q);
      EXPECT_NEAR(d(0, 0), xx, 1e-13);
      EXPECT_NEAR(d(0, 1), xy, 1e-13);
      EXPECT_NEAR(d(1, 1), yy, 1e-13);
    });
}

}  // namespace

TEST(RateOfDeformation, LinearFields) {
  const MixedSpace s = free_box();
  expect_strain(s, s.interpolate_velocity([](Point2 p) { return Point2{p.y, 0.0}; }, false), 0, 0.5, 0);
  expect_strain(s, s.interpolate_velocity([](Point2 p) { return Point2{p.x, -p.y}; }, false), 1, 0, -1);
  expect_strain(s, s.interpolate_velocity([](Point2 p) { return Point2{-p.y, p.x}; }, false), 0, 0, 0);
}

TEST(AssembleViscous, Symmetric) {
  const MixedSpace s = channel();
  std::mt19937_64 rng(3);
  MixedField state = s.zero_field();
  state.velocity = random_velocity(s, rng);
  Materials m;
  m[0] = {1.0, 0.3, 1.6, 1e-3};
  m[1] = {2.0, 0.1, 2.0, 1e-3};
  const Eigen::MatrixXd A(assemble_viscous(s, state, m));
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12 * A.cwiseAbs().maxCoeff());
}

TEST(AssembleViscous, NewtonianShearAction) {
  // u = (y, 0): D(u) = [[0, 1/2], [1/2, 0]], so v^T A u = mu int (dv_x/dy + dv_y/dx) / 2.
  const MixedSpace s = free_box();
  const Materials m = newtonian(1.5, 2.5);
  const Eigen::SparseMatrix<double> A = assemble_viscous(s, s.zero_field(), m);
  const Eigen::VectorXd u = s.interpolate_velocity([](Point2 p) { return Point2{p.y, 0.0}; }, false);
  // v = (x y, x^2): dv_x/dy + dv_y/dx = x + 2x = 3x, mean over each half is 3/2.
  const Eigen::VectorXd v = s.interpolate_velocity([](Point2 p) { return Point2{p.x * p.y, p.x * p.x}; }, false);
  const double expect = (1.5 + 2.5) * 0.5 * 0.5 * 1.5;
  EXPECT_NEAR(v.dot(A * u), expect, 1e-13);
}

TEST(AssembleViscous, QuadraticFormMatchesDirectQuadrature) {
  // Same rule, but the strain is taken from the space's own gradient evaluation.
  const MixedSpace s = channel(5);
  std::mt19937_64 rng(11);
  Materials m;
  m[0] = {1.0, 0.2, 1.7, 1e-2};
  m[1] = {3.0, 0.5, 2.0, 1e-2};
  MixedField state = s.zero_field();
  state.velocity = random_velocity(s, rng);
  const Eigen::VectorXd v = random_velocity(s, rng);
  const double form = v.dot(assemble_viscous(s, state, m) * v);
  double ref = 0.0;
  for (int e = 0; e < s.num_elements(); ++e)
    for (const auto& q : s.rule().points) {
      const SymTensor2 dw = symmetric_gradient(s.velocity_gradient(state.velocity, e, q.bary));
      const SymTensor2 dv = symmetric_gradient(s.velocity_gradient(v, e, q.bary));
      ref += q.weight * s.area(e) * effective_viscosity(dw.frobenius_norm(), fluid(m, s.tag(e))) * dv.dot(dv);
    }
  EXPECT_NEAR(form, ref, 1e-10 * std::abs(ref));
}

TEST(AssembleConvection, ZeroWind) {
  const MixedSpace s = channel(4);
  EXPECT_EQ(assemble_convection(s, s.zero_field()).norm(), 0.0);
}

TEST(AssembleConvection, ConstantWindOnLinearField) {
  // w = (1, 0), u = (x, 0), v = (1, 0): int (w . grad u) . v = area = 1.
  const MixedSpace s = free_box();
  const auto C = assemble_convection(s, AnalyticVelocity{[](Point2) { return Point2{1.0, 0.0}; }});
  const Eigen::VectorXd u = s.interpolate_velocity([](Point2 p) { return Point2{p.x, 0.0}; }, false);
  const Eigen::VectorXd v = s.interpolate_velocity([](Point2) { return Point2{1.0, 0.0}; }, false);
  EXPECT_NEAR(v.dot(C * u), 1.0, 1e-13);
}

TEST(AssembleConvection, SkewForTangentialWind) {
  // Periodic channel, w = (1, 0) tangential to the walls: u^T C(w) u = int d_x |u|^2 / 2 = 0.
  const MixedSpace s = channel(6);
  std::mt19937_64 rng(5);
  MixedField w = s.zero_field();
  w.velocity = s.interpolate_velocity([](Point2) { return Point2{1.0, 0.0}; }, false);
  const auto C = assemble_convection(s, w);
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd u = random_velocity(s, rng);
    EXPECT_NEAR(u.dot(C * u), 0.0, 1e-13 * u.squaredNorm());
  }
}

TEST(AssembleDivergence, Rows) {
  const MixedSpace s = free_box();
  const auto B = assemble_divergence(s);
  EXPECT_EQ(B.rows(), s.num_pressure_dofs());
  EXPECT_EQ(B.cols(), s.num_velocity_dofs());
  const Eigen::VectorXd sol = s.interpolate_velocity([](Point2 p) { return Point2{p.x, -p.y}; }, false);
  EXPECT_LE((B * sol).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::VectorXd c = s.interpolate_velocity([](Point2) { return Point2{0.3, -2.0}; }, false);
  EXPECT_LE((B * c).cwiseAbs().maxCoeff(), 1e-15);
  // u = (x, 0): div u = 1, so row i is int q_i = (area of the support) / 3.
  const Eigen::VectorXd ux = s.interpolate_velocity([](Point2 p) { return Point2{p.x, 0.0}; }, false);
  Eigen::VectorXd support = Eigen::VectorXd::Zero(s.num_pressure_dofs());
  for (int e = 0; e < s.num_elements(); ++e)
    for (int a = 0; a < 3; ++a) support[s.pressure_dof(e, a)] += s.area(e) / 3.0;
  EXPECT_LE((B * ux - support).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LoadVector, IntegratesConstantForce) {
  const MixedSpace s = free_box();
  const Eigen::VectorXd F = load_vector(s, {Point2{2.0, -1.0}, Point2{3.0, 0.5}});
  double fx = 0.0, fy = 0.0;
  for (int n = 0; n < s.num_velocity_nodes(); ++n) {
    fx += F[2 * n];
    fy += F[2 * n + 1];
  }
  EXPECT_NEAR(fx, 0.5 * 2.0 + 0.5 * 3.0, 1e-14);
  EXPECT_NEAR(fy, 0.5 * -1.0 + 0.5 * 0.5, 1e-14);
}

TEST(YieldFunctional, Examples) {
  const MixedSpace s = free_box();
  Materials m;
  m[0] = {1.0, 1.0, 2.0, 1e-4};
  m[1] = {1.0, 1.0, 2.0, 1e-4};
  EXPECT_EQ(yield_functional(s, Eigen::VectorXd(Eigen::VectorXd::Zero(s.num_velocity_dofs())), m), 0.0);
  const Eigen::VectorXd u = s.interpolate_velocity([](Point2 p) { return Point2{p.y, 0.0}; }, false);
  EXPECT_NEAR(yield_functional(s, u, m), 1.0 / std::sqrt(2.0), 1e-14);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd r = random_velocity(s, rng);
  EXPECT_NEAR(yield_functional(s, Eigen::VectorXd(2.0 * r), m), 2.0 * yield_functional(s, r, m), 1e-12);
}

TEST(Norms, Examples) {
  const MixedSpace s = free_box();
  const FieldNorms z = norms(s, Eigen::VectorXd(Eigen::VectorXd::Zero(s.num_velocity_dofs())), {2.0, 2.0});
  EXPECT_EQ(z.l2, 0.0);
  EXPECT_EQ(z.l6, 0.0);
  EXPECT_EQ(z.v_norm, 0.0);
  const Eigen::VectorXd c = s.interpolate_velocity([](Point2) { return Point2{3.0, 4.0}; }, false);
  EXPECT_NEAR(l2_norm(s, c), 5.0, 1e-13);
  EXPECT_NEAR(l6_norm(s, c), 5.0, 1e-13);
  const Eigen::VectorXd shear = s.interpolate_velocity([](Point2 p) { return Point2{p.y, 0.0}; }, false);
  const FieldNorms n = norms(s, shear, {2.0, 2.0});
  EXPECT_NEAR(n.w1p[0] * n.w1p[0] + n.w1p[1] * n.w1p[1], 4.0 / 3.0, 1e-13);
  EXPECT_NEAR(n.w1p[0] * n.w1p[0], 1.0 / 24.0 + 0.5, 1e-13);
  EXPECT_DOUBLE_EQ(n.v_norm, n.w1p[0] + n.w1p[1]);
}

TEST(Integrate, DeterministicAcrossCalls) {
  const MixedSpace s = channel(8);
  std::mt19937_64 rng(9);
  const Eigen::VectorXd u = random_velocity(s, rng);
  const double a = l6_norm(s, u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(l6_norm(s, u), a);
}

TEST(TrilinearIdentity, ZeroFirstArgument) {
  const TwoPhaseMesh mesh = generate_channel_mesh(4, 4, 0.5);
  AnalyticField zero{[](Point2) { return Point2{}; }, [](Point2) { return Matrix2{}; }};
  const AnalyticField v = polynomial_field({1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(trilinear_identity_residual(zero, v, v, mesh, 1), 0.0);
}

TEST(TrilinearIdentity, BubbleVanishingOnWholeBoundary) {
  // psi = x^2 (1 - x)^2 y^2 (y - 1/2)^2 vanishes with its gradient on the whole boundary of Omega1.
  StreamFunction s = wall_bubble(0.0, 0.0);
  auto q = [](double y) { return (y - 0.5) * (y - 0.5); };
  auto qy = [](double y) { return 2 * (y - 0.5); };
  const StreamFunction base = s;
  s.psi_x = [=](Point2 p) { return base.psi_x(p) * q(p.y); };
  s.psi_y = [=](Point2 p) { return base.psi_y(p) * q(p.y) + (p.x * p.x * (1 - p.x) * (1 - p.x)) * p.y * p.y * qy(p.y); };
  // Second derivatives by central differences of the first; exactness is not needed for v1's role.
  const double h = 1e-6;
  s.psi_xx = [=](Point2 p) { return (s.psi_x({p.x + h, p.y}) - s.psi_x({p.x - h, p.y})) / (2 * h); };
  s.psi_xy = [=](Point2 p) { return (s.psi_x({p.x, p.y + h}) - s.psi_x({p.x, p.y - h})) / (2 * h); };
  s.psi_yy = [=](Point2 p) { return (s.psi_y({p.x, p.y + h}) - s.psi_y({p.x, p.y - h})) / (2 * h); };
  const AnalyticField v1 = s.field();
  const AnalyticField v2 = polynomial_field({1, -2, 0.5, 1, 0, 3, -1, 2});
  const AnalyticField v3 = polynomial_field({0, 1, 1, -1, 2, 0, 1, 1});
  const TwoPhaseMesh mesh = generate_channel_mesh(8, 8, 0.5);
  const auto sides = trilinear_identity_sides(v1, v2, v3, mesh, 1);
  EXPECT_NEAR(sides.rhs, 0.0, 1e-15);
  EXPECT_NEAR(sides.lhs, 0.0, 1e-9);
}

TEST(TrilinearIdentity, InterfaceTermBothSubdomains) {
  const TwoPhaseMesh mesh = generate_channel_mesh(8, 8, 0.5);
  const AnalyticField v2 = polynomial_field({1, -2, 0.5, 1, 0, 3, -1, 2});
  const AnalyticField v3 = polynomial_field({0, 1, 1, -1, 2, 0, 1, 1});
  for (const int tag : {1, 2}) {
    const AnalyticField v1 = wall_bubble(tag == 1 ? 0.0 : 1.0, 0.7).field();
    const auto sides = trilinear_identity_sides(v1, v2, v3, mesh, tag);
    EXPECT_GT(std::abs(sides.rhs), 1e-4) << "interface term should not vanish";
    EXPECT_LE(std::abs(sides.lhs - sides.rhs), 1e-8 * std::max(1.0, std::abs(sides.lhs)));
  }
}

TEST(OperatorProperties, FromVerifySuite) {
  std::mt19937_64 rng(21);
  for (const auto& r : {property_frozen_viscosity_spd(rng), property_operator_monotone(rng, 30),
                        property_operator_bounded(rng, 30), property_coercivity_ladder(rng),
                        property_yield_convex(rng, 20), property_quadrature_exact(rng)})
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
