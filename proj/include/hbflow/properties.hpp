#pragma once

// Property suite behind `hb verify`: sampled checks of the constitutive law,
// the discrete operator, the convection identity and the inner solver, each
// reported as pass/fail with a one-line detail.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hbflow/assembly.hpp"
#include "hbflow/core_tensor.hpp"
#include "hbflow/inner_solver.hpp"
#include "hbflow/mesh.hpp"
#include "hbflow/outer_fixed_point.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  unsigned long long seed = 2024;
  int tensor_pairs = 100000;  // per exponent, monotonicity certificate
  int field_pairs = 100;
  bool corrupt_certificate = false;  // self-test: use c = 2, invalid at p = 1.5
};

namespace props {

inline SymTensor2 random_tensor(std::mt19937_64& rng, bool trace_free = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), mag(-3.0, 3.0);
  SymTensor2 t;
  t(0, 0) = u(rng);
  t(0, 1) = u(rng);
  t(1, 1) = trace_free ? -t(0, 0) : u(rng);
  return std::pow(10.0, mag(rng)) * t;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

/// Small heterogeneous setting shared by the field properties.
struct FieldSetting {
  std::shared_ptr<const TwoPhaseMesh> mesh;
  MixedSpace space;
  Materials mats;

  explicit FieldSetting(int n = 8)
      : mesh(std::make_shared<const TwoPhaseMesh>(generate_channel_mesh(ChannelSpec{n, n, 0.5}))), space(mesh) {
    mats[0] = {1.0, 0.05, 1.7, 1e-4};
    mats[1] = {3.0, 0.15, 2.0, 1e-4};
  }

  Eigen::VectorXd random_field(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(space.num_velocity_dofs());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    space.zero_dirichlet(v);
    return v;
  }
};

}  // namespace props

// ---------------------------------------------------------------------------
// Constitutive law

inline PropertyResult property_deviator(std::mt19937_64& rng, int n = 10000) {
  double worst_trace = 0.0, worst_idem = 0.0;
  for (int k = 0; k < n; ++k) {
    const SymTensor2 t = props::random_tensor(rng);
    const SymTensor2 d = deviator(t);
    worst_trace = std::max(worst_trace, std::abs(d.trace()) / (1.0 + t.frobenius_norm()));
    worst_idem = std::max(worst_idem, (deviator(d) - d).frobenius_norm() / (1.0 + t.frobenius_norm()));
  }
  const bool ok = worst_trace <= 1e-12 && worst_idem <= 1e-12;
  return {"deviator is trace-free and idempotent", ok,
          "max |trace| " + props::fmt(worst_trace) + ", max idempotence defect " + props::fmt(worst_idem)};
}

inline PropertyResult property_stress_monotone_odd(std::mt19937_64& rng, int n = 10000) {
  double worst_gap = 0.0, worst_odd = 0.0;
  const double ps[] = {1.5, 1.75, 2.0};
  for (int k = 0; k < n; ++k) {
    const FluidParams fp{1.0 + (k % 3), 0.1 * (k % 5), ps[k % 3], 1e-3};
    const SymTensor2 a = props::random_tensor(rng, true), b = props::random_tensor(rng, true);
    const SymTensor2 sa = hb_stress(a, fp), sb = hb_stress(b, fp);
    const double scale = sa.frobenius_norm() * a.frobenius_norm() + sb.frobenius_norm() * b.frobenius_norm() + 1.0;
    worst_gap = std::min(worst_gap, (sa - sb).dot(a - b) / scale);
    worst_odd = std::max(worst_odd, (hb_stress(-1.0 * a, fp) + sa).frobenius_norm() / (1.0 + sa.frobenius_norm()));
  }
  const bool ok = worst_gap >= -1e-12 && worst_odd <= 1e-14;
  return {"regularized stress is monotone and odd", ok,
          "min normalized gap " + props::fmt(worst_gap) + ", max odd defect " + props::fmt(worst_odd)};
}

inline PropertyResult property_power_law_limit(std::mt19937_64& rng, int n = 10000) {
  // g = 0: |sigma| / (mu |d|^{p-1}) = (1 + eps^2/|d|^2)^{(p-2)/2}, off by at most
  // eps^2/|d|^2 plus the rounding of pow.
  std::uniform_real_distribution<double> up(1.5, 2.0), ue(-8.0, -2.0);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    SymTensor2 d = props::random_tensor(rng, true);
    if (d.frobenius_norm() < 1.0) d = (1.0 / d.frobenius_norm()) * d;
    const FluidParams fp{2.0, 0.0, up(rng), std::pow(10.0, ue(rng))};
    const double dn = d.frobenius_norm();
    const double exact = fp.mu * std::pow(dn, fp.p - 1.0);
    const double rel = std::abs(hb_stress(d, fp).frobenius_norm() - exact) / exact;
    worst = std::max(worst, rel / (fp.eps * fp.eps / (dn * dn) + 1e-14));
  }
  return {"regularized power law tends to mu |d|^{p-1}", worst <= 1.0,
          "max relative error / (eps^2/|d|^2 + 1e-14) = " + props::fmt(worst)};
}

/// Certificate for (|x|^{p-2}x - |y|^{p-2}y).(x - y) >= c |x - y|^2 / (|x| + |y|)^{2-p}.
inline PropertyResult property_monotonicity_certificate(std::mt19937_64& rng, int pairs, bool corrupt) {
  double worst = HUGE_VAL;
  double worst_p = 0.0;
  for (const double p : {1.5, 1.75, 2.0}) {
    const double c = corrupt && p == 1.5 ? 2.0 : p - 1.0;
    for (int k = 0; k < pairs; ++k) {
      SymTensor2 x = props::random_tensor(rng), y = props::random_tensor(rng);
      if (k % 10 == 0) y = SymTensor2{};               // equality family of p = 2
      else if (k % 10 == 1) y = -1.0 * x;              // antipodal pairs
      else if (k % 10 == 2) y = (1.0 + 1e-3 * (1 + k % 7)) * x;  // nearly parallel
      const double nx = x.frobenius_norm(), ny = y.frobenius_norm();
      const double g = monotonicity_gap(x, y, p, c) / std::pow(1.0 + nx + ny, 2.0);
      if (g < worst) {
        worst = g;
        worst_p = p;
      }
    }
  }
  const std::string name = corrupt ? "monotonicity certificate (self-test, c = 2 at p = 1.5)"
                                   : "monotonicity certificate with c = p - 1";
  return {name, worst >= -1e-10, "min normalized gap " + props::fmt(worst) + " at p = " + props::fmt(worst_p)};
}

// ---------------------------------------------------------------------------
// Discrete operator

inline PropertyResult property_frozen_viscosity_spd(std::mt19937_64& rng) {
  props::FieldSetting s;
  MixedField state = s.space.zero_field();
  state.velocity = s.random_field(rng);
  Eigen::SparseMatrix<double> A = assemble_viscous(s.space, state, s.mats);
  const double sym = (Eigen::MatrixXd(A) - Eigen::MatrixXd(A).transpose()).cwiseAbs().maxCoeff();
  Eigen::MatrixXd V(s.space.num_velocity_dofs(), 20);
  for (int k = 0; k < 20; ++k) V.col(k) = s.random_field(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), 20);
  const Eigen::MatrixXd R = Q.transpose() * (A * Q);
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (R + R.transpose())).eigenvalues().minCoeff();
  const double amax = Eigen::MatrixXd(A).cwiseAbs().maxCoeff();
  return {"frozen-viscosity matrix is symmetric positive definite", sym <= 1e-12 * amax && lmin > 0.0,
          "asymmetry " + props::fmt(sym) + ", smallest Ritz value " + props::fmt(lmin)};
}

inline PropertyResult property_operator_monotone(std::mt19937_64& rng, int pairs) {
  props::FieldSetting s;
  double worst = HUGE_VAL;
  for (int k = 0; k < pairs; ++k) {
    const Eigen::VectorXd u = s.random_field(rng) * std::pow(10.0, (k % 5) - 2.0);
    const Eigen::VectorXd v = s.random_field(rng) * std::pow(10.0, ((k + 2) % 5) - 2.0);
    const double g = (power_law_operator(s.space, v, s.mats) - power_law_operator(s.space, u, s.mats)).dot(v - u);
    worst = std::min(worst, g);
  }
  return {"discrete operator is monotone", worst >= -1e-10, "min gap " + props::fmt(worst)};
}

inline PropertyResult property_operator_bounded(std::mt19937_64& rng, int pairs) {
  props::FieldSetting s;
  const std::array<double, 2> p{s.mats[0].p, s.mats[1].p};
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Eigen::VectorXd u = s.random_field(rng) * std::pow(10.0, (k % 5) - 2.0);
    const Eigen::VectorXd v = k % 4 == 0 ? u : s.random_field(rng);
    const FieldNorms nu = norms(s.space, u, p), nv = norms(s.space, v, p);
    const double bound = s.mats[0].mu * std::pow(nu.w1p[0], p[0] - 1.0) + s.mats[1].mu * std::pow(nu.w1p[1], p[1] - 1.0);
    const double val = std::abs(power_law_operator(s.space, u, s.mats).dot(v));
    worst = std::max(worst, val / (bound * nv.v_norm));
  }
  return {"discrete operator is bounded by sum mu_i ||u_i||^{p_i - 1}", worst <= 1.0 + 1e-12,
          "max ratio to bound " + props::fmt(worst)};
}

inline PropertyResult property_coercivity_ladder(std::mt19937_64& rng) {
  props::FieldSetting s;
  const std::array<double, 2> p{s.mats[0].p, s.mats[1].p};
  const Eigen::VectorXd u0 = s.random_field(rng);
  std::vector<double> ratio;
  for (const double t : {1.0, 2.0, 4.0, 8.0}) {
    const Eigen::VectorXd u = t * u0;
    ratio.push_back(power_law_operator(s.space, u, s.mats).dot(u) / norms(s.space, u, p).v_norm);
  }
  bool ok = true;
  std::string detail = "ratios";
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    detail += " " + props::fmt(ratio[i]);
    if (i > 0 && ratio[i] < ratio[i - 1]) ok = false;
  }
  return {"coercivity ratio is nondecreasing along t u0", ok, detail};
}

inline PropertyResult property_yield_convex(std::mt19937_64& rng, int pairs = 50) {
  props::FieldSetting s;
  double worst = HUGE_VAL;
  for (int k = 0; k < pairs; ++k) {
    const Eigen::VectorXd a = s.random_field(rng), b = s.random_field(rng);
    const double mid = yield_functional(s.space, Eigen::VectorXd(0.5 * (a + b)), s.mats);
    worst = std::min(worst, 0.5 * (yield_functional(s.space, a, s.mats) + yield_functional(s.space, b, s.mats)) - mid);
  }
  return {"yield functional is midpoint convex", worst >= -1e-12, "min midpoint slack " + props::fmt(worst)};
}

/// p = 2 bilinear form against an independent high-order quadrature of
/// mu int |D(v)|^2 for quadratic polynomial fields.
inline PropertyResult property_quadrature_exact(std::mt19937_64& rng) {
  const auto mesh = std::make_shared<const TwoPhaseMesh>(
      generate_channel_mesh(ChannelSpec{4, 4, 0.5, 1.0, ChannelClosure::box}));
  SpaceOptions opts;
  opts.dirichlet = false;
  const MixedSpace space(mesh, opts);
  Materials mats;
  mats[0] = {1.5, 0.0, 2.0, 1e-4};
  mats[1] = {2.5, 0.0, 2.0, 1e-4};
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  double c[12];
  for (double& x : c) x = uc(rng);
  auto field = [&](Point2 p) {
    return Point2{c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y,
                  c[6] + c[7] * p.x + c[8] * p.y + c[9] * p.x * p.x + c[10] * p.x * p.y + c[11] * p.y * p.y};
  };
  auto grad = [&](Point2 p) {
    Matrix2 G;
    G[0][0] = c[1] + 2 * c[3] * p.x + c[4] * p.y;
    G[0][1] = c[2] + c[4] * p.x + 2 * c[5] * p.y;
    G[1][0] = c[7] + 2 * c[9] * p.x + c[10] * p.y;
    G[1][1] = c[8] + c[10] * p.x + 2 * c[11] * p.y;
    return G;
  };
  const Eigen::VectorXd v = space.interpolate_velocity(field, false);
  MixedField zero = space.zero_field();
  const double form = v.dot(assemble_viscous(space, zero, mats) * v);
  const TriangleRule rule = collapsed_gauss(6);
  double ref = 0.0;
  for (int e = 0; e < space.num_elements(); ++e) {
    const auto& t = mesh->triangle(e);
    const Point2 p0 = mesh->node(t.v[0]), p1 = mesh->node(t.v[1]), p2 = mesh->node(t.v[2]);
    for (const auto& q : rule.points) {
      const Point2 x = q.bary[0] * p0 + q.bary[1] * p1 + q.bary[2] * p2;
      const SymTensor2 D = symmetric_gradient(grad(x));
      ref += q.weight * space.area(e) * fluid(mats, t.tag).mu * D.dot(D);
    }
  }
  const double rel = std::abs(form - ref) / std::abs(ref);
  return {"p = 2 viscous form matches high-order quadrature", rel <= 1e-10, "relative difference " + props::fmt(rel)};
}

// ---------------------------------------------------------------------------
// Convection identity

/// Divergence-free closed-form field from a stream function psi(x, y) given
/// with its first and second derivatives: v = (psi_y, -psi_x).
struct StreamFunction {
  std::function<double(Point2)> psi_x, psi_y, psi_xx, psi_xy, psi_yy;
  AnalyticField field() const {
    AnalyticField f;
    auto px = psi_x, py = psi_y, pxx = psi_xx, pxy = psi_xy, pyy = psi_yy;
    f.value = [px, py](Point2 p) { return Point2{py(p), -px(p)}; };
    f.gradient = [pxx, pxy, pyy](Point2 p) {
      Matrix2 G;
      G[0][0] = pxy(p);
      G[0][1] = pyy(p);
      G[1][0] = -pxx(p);
      G[1][1] = -pxy(p);
      return G;
    };
    return f;
  }
};

/// psi = a(x) b(y) with a = x^2 (1 - x)^2 (vanishing with its slope at x = 0, 1)
/// and b(y) = (y - y_wall)^2 (1 + k y): the field vanishes on the wall y_wall and
/// on the lateral sides, but not on the interface.
inline StreamFunction wall_bubble(double y_wall, double k) {
  auto a = [](double x) { return x * x * (1 - x) * (1 - x); };
  auto ax = [](double x) { return 2 * x * (1 - x) * (1 - 2 * x); };
  auto axx = [](double x) { return 2 - 12 * x + 12 * x * x; };
  auto b = [=](double y) { return (y - y_wall) * (y - y_wall) * (1 + k * y); };
  auto by = [=](double y) { return 2 * (y - y_wall) * (1 + k * y) + k * (y - y_wall) * (y - y_wall); };
  auto byy = [=](double y) { return 2 * (1 + k * y) + 4 * k * (y - y_wall); };
  StreamFunction s;
  s.psi_x = [=](Point2 p) { return ax(p.x) * b(p.y); };
  s.psi_y = [=](Point2 p) { return a(p.x) * by(p.y); };
  s.psi_xx = [=](Point2 p) { return axx(p.x) * b(p.y); };
  s.psi_xy = [=](Point2 p) { return ax(p.x) * by(p.y); };
  s.psi_yy = [=](Point2 p) { return a(p.x) * byy(p.y); };
  return s;
}

/// Affine-plus-quadratic field c0 + c1 x + c2 y + c3 x y (per component).
inline AnalyticField polynomial_field(const std::array<double, 8>& c) {
  AnalyticField f;
  f.value = [c](Point2 p) {
    return Point2{c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.y, c[4] + c[5] * p.x + c[6] * p.y + c[7] * p.x * p.y};
  };
  f.gradient = [c](Point2 p) {
    Matrix2 G;
    G[0][0] = c[1] + c[3] * p.y;
    G[0][1] = c[2] + c[3] * p.x;
    G[1][0] = c[5] + c[7] * p.y;
    G[1][1] = c[6] + c[7] * p.x;
    return G;
  };
  return f;
}

inline PropertyResult property_trilinear_identity(std::mt19937_64& rng, int triples = 5) {
  const TwoPhaseMesh mesh = generate_channel_mesh(ChannelSpec{8, 8, 0.5});
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < triples; ++k) {
    const int tag = 1 + k % 2;
    const AnalyticField v1 = wall_bubble(tag == 1 ? 0.0 : 1.0, uc(rng)).field();
    std::array<double, 8> c2, c3;
    for (double& x : c2) x = uc(rng);
    for (double& x : c3) x = uc(rng);
    const auto sides = trilinear_identity_sides(v1, polynomial_field(c2), polynomial_field(c3), mesh, tag);
    worst = std::max(worst, std::abs(sides.lhs - sides.rhs) / std::max(1.0, std::abs(sides.lhs)));
  }
  return {"convection identity with interface term", worst <= 1e-8, "max normalized residual " + props::fmt(worst)};
}

// ---------------------------------------------------------------------------
// Inner solver

inline std::vector<PropertyResult> inner_solver_properties(std::mt19937_64& rng) {
  std::vector<PropertyResult> out;
  props::FieldSetting s;
  const BodyForces f{Point2{1.0, 0.0}, Point2{1.0, 0.0}};
  InnerConfig cfg;
  InnerSolver solver(s.space, s.mats, f);
  const MixedField w = s.space.zero_field();
  const InnerResult a = solver.solve(w, cfg);
  MixedField guess = s.space.zero_field();
  guess.velocity = 0.1 * s.random_field(rng);
  InnerConfig single = cfg;
  single.eps_schedule = {cfg.eps_final()};
  const InnerResult b = solver.solve(w, single, &guess);
  const std::array<double, 2> p{s.mats[0].p, s.mats[1].p};
  const double scale = std::max(1.0, norms(s.space, a.field.velocity, p).v_norm);
  const double diff = norms(s.space, Eigen::VectorXd(a.field.velocity - b.field.velocity), p).v_norm;
  out.push_back({"inner solution is independent of the initial guess", a.report.converged && b.report.converged &&
                                                                          diff <= 10.0 * cfg.tol_rel * scale,
                 "V-norm difference " + props::fmt(diff) + " (scale " + props::fmt(scale) + ")"});

  const double vn = norms(s.space, a.field.velocity, p).v_norm;
  out.push_back({"discrete divergence vanishes", a.report.divergence_norm <= 1e-8 * vn,
                 "||Bu|| = " + props::fmt(a.report.divergence_norm) + ", ||u||_V = " + props::fmt(vn)});

  const double slack = a.report.estimate_rhs - a.report.convection_defect - a.report.estimate_lhs;
  out.push_back({"a posteriori energy estimate", slack >= -1e-8 * std::max(1.0, std::abs(a.report.estimate_rhs)),
                 "f.u - b(w;u,u) - <phi(u),u> = " + props::fmt(slack)});

  // Energy descent of the Picard iteration with w = 0.
  InnerConfig pic = cfg;
  pic.linearization = Linearization::picard;
  pic.eps_schedule = {1e-2};
  const InnerResult c = solver.solve(w, pic);
  bool descent = c.report.converged;
  double worst = 0.0;
  for (std::size_t i = 1; i < c.report.energies.size(); ++i) {
    const double inc = c.report.energies[i] - c.report.energies[i - 1];
    worst = std::max(worst, inc);
    if (inc > pic.tol_rel * std::max(1.0, std::abs(c.report.energies[i - 1]))) descent = false;
  }
  out.push_back({"energy decreases along Picard iterates", descent,
                 std::to_string(c.report.energies.size()) + " iterates, max increase " + props::fmt(worst)});
  return out;
}

/// Every property, in a fixed order.
inline std::vector<PropertyResult> run_properties(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::vector<PropertyResult> out;
  out.push_back(property_deviator(rng));
  out.push_back(property_stress_monotone_odd(rng));
  out.push_back(property_power_law_limit(rng));
  out.push_back(property_monotonicity_certificate(rng, opt.tensor_pairs, opt.corrupt_certificate));
  out.push_back(property_frozen_viscosity_spd(rng));
  out.push_back(property_operator_monotone(rng, opt.field_pairs));
  out.push_back(property_operator_bounded(rng, opt.field_pairs));
  out.push_back(property_coercivity_ladder(rng));
  out.push_back(property_yield_convex(rng));
  out.push_back(property_quadrature_exact(rng));
  out.push_back(property_trilinear_identity(rng));
  for (auto& r : inner_solver_properties(rng)) out.push_back(std::move(r));
  return out;
}

}  // namespace hbflow
