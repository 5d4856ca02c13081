#pragma once

// Fixed-point iteration on the convecting field. L(w) = u is one inner solve
// with convection frozen at w; the coupled solution is a fixed point L(u) = u.
// Also houses the runtime diagnostics that accompany it: the a priori ball
// radius R, the variational-inequality test battery and the continuity probe
// of L.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/inner_solver.hpp"
#include "hbflow/linear_system.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

struct OuterConfig {
  double tol_fixed_point = 1e-7;  // relative to the L6 norm of the iterate
  int max_outer = 50;
  double relaxation = 1.0;
  unsigned long long seed = 12345;  // test battery and continuity probe
  int battery_size = 20;
  bool continuity_check = false;

  void validate() const {
    std::ostringstream msg;
    if (!(tol_fixed_point > 0.0)) msg << "tol_fixed_point must be positive";
    else if (max_outer < 1) msg << "max_outer must be at least 1";
    else if (!(relaxation > 0.0 && relaxation <= 1.0)) msg << "relaxation must lie in (0, 1]";
    else if (battery_size < 0) msg << "battery size must be nonnegative";
    if (!msg.str().empty()) throw InputError(msg.str());
  }
};

struct BatteryReport {
  std::vector<double> slack;        // regularized inequality, per test field
  std::vector<double> exact_slack;  // same with the unregularized operator and yield functional
  std::vector<double> scale;        // max(1, |(f, v - u)|)
  double min_normalized_slack = std::numeric_limits<double>::infinity();
  double min_normalized_exact_slack = std::numeric_limits<double>::infinity();
  bool passed = true;
};

struct ContinuityReport {
  std::vector<double> perturbation;  // ||delta||_L6 / ||u||_L6
  std::vector<double> ratio;         // ||L(u + delta) - L(u)||_L6 / ||delta||_L6
  double bound = 0.0;
  bool bounded = false;
};

struct OuterReport {
  std::vector<double> l6_difference;  // ||L(w^k) - w^k||_L6
  std::vector<double> v_norm;         // ||L(w^k)||_V
  std::vector<double> contraction;    // successive ratios of l6_difference
  std::vector<double> relaxation;     // factor used at each step
  std::vector<int> inner_iterations;
  std::vector<double> inner_residual;
  std::vector<double> convection_defect;
  bool converged = false;
  bool inner_converged = true;
  int iterations = 0;
  double scale = 0.0;   // ||u||_L6 of the returned field
  double radius = 0.0;  // R
  std::array<double, 2> korn{};
  bool ball_ok = true;
  InnerReport last_inner;
  BatteryReport battery;
  std::optional<ContinuityReport> continuity;
};

struct OuterResult {
  MixedField field;
  OuterReport report;
};

// ---------------------------------------------------------------------------
// A priori radius

/// Smallest generalized eigenvalue of int_{Omega_i} D(v):D(v) against
/// int_{Omega_i} |v|^2 + |grad v|^2 over velocity fields on Omega_i that
/// vanish on the wall of Omega_i (free on the interface), for i = 1, 2.
inline std::array<double, 2> korn_constants(const MixedSpace& space, int max_iter = 500, double tol = 1e-12) {
  std::array<double, 2> out{};
  for (int tag = 1; tag <= 2; ++tag) {
    std::vector<int> local(static_cast<std::size_t>(space.num_velocity_dofs()), -1);
    int n = 0;
    for (int e = 0; e < space.num_elements(); ++e) {
      if (space.tag(e) != tag) continue;
      for (int i = 0; i < 12; ++i) {
        const int d = space.velocity_dof(e, i / 2, i % 2);
        if (!space.is_dirichlet(d) && local[static_cast<std::size_t>(d)] < 0) local[static_cast<std::size_t>(d)] = n++;
      }
    }
    if (n == 0) throw InvariantError("Korn probe: subdomain has no free velocity dofs");
    std::vector<Eigen::Triplet<double>> tk, tm;
    for (int e = 0; e < space.num_elements(); ++e) {
      if (space.tag(e) != tag) continue;
      ElementMatrix K = ElementMatrix::Zero(), M = ElementMatrix::Zero();
      for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
        const auto d = basis_strains(s.G);
        for (int i = 0; i < 12; ++i)
          for (int j = 0; j < 12; ++j) {
            K(i, j) += s.weight * d[i].dot(d[j]);
            if (i % 2 == j % 2) M(i, j) += s.weight * (s.N[i / 2] * s.N[j / 2] + dot(s.G[i / 2], s.G[j / 2]));
          }
      });
      for (int i = 0; i < 12; ++i) {
        const int r = local[static_cast<std::size_t>(space.velocity_dof(e, i / 2, i % 2))];
        if (r < 0) continue;
        for (int j = 0; j < 12; ++j) {
          const int c = local[static_cast<std::size_t>(space.velocity_dof(e, j / 2, j % 2))];
          if (c < 0) continue;
          tk.emplace_back(r, c, K(i, j));
          tm.emplace_back(r, c, M(i, j));
        }
      }
    }
    Eigen::SparseMatrix<double> K(n, n), M(n, n);
    K.setFromTriplets(tk.begin(), tk.end());
    M.setFromTriplets(tm.begin(), tm.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw InvariantError("Korn probe: strain matrix is singular (missing wall constraint?)");
    // Inverse iteration; the start vector has components along every mode.
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) x[i] += 0.1 * std::sin(1.0 + i);
    double lambda = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
      x = ldlt.solve(M * x);
      x /= std::sqrt(x.dot(M * x));
      const double next = x.dot(K * x);
      const bool done = std::abs(next - lambda) <= tol * next;
      lambda = next;
      if (done) break;
    }
    if (!(lambda > 0.0)) throw InvariantError("Korn probe returned a nonpositive constant");
    out[static_cast<std::size_t>(tag - 1)] = lambda;
  }
  return out;
}

/// ||f||_dual = max_i ||f_i||_{L^{p_i'}(Omega_i)} for constant forces.
inline double dual_force_norm(const MixedSpace& space, const Materials& mats, const BodyForces& f) {
  double out = 0.0;
  for (int tag = 1; tag <= 2; ++tag) {
    const double p = fluid(mats, tag).p;
    const double pc = p / (p - 1.0);
    out = std::max(out, norm(f[static_cast<std::size_t>(tag - 1)]) * std::pow(space.mesh().subdomain_area(tag), 1.0 / pc));
  }
  return out;
}

/// Radius of the ball containing every solution:
///   R = (||f||_dual / c_K)^{1/(p_min - 1)},  c_K = 2^{1 - p_min} min_i mu_i kappa_i.
inline double estimate_R(const Materials& mats, const BodyForces& f, const MixedSpace& space,
                         const std::array<double, 2>& korn) {
  const double pmin = std::min(mats[0].p, mats[1].p);
  const double ck = std::pow(2.0, 1.0 - pmin) * std::min(mats[0].mu * korn[0], mats[1].mu * korn[1]);
  if (!(ck > 0.0)) throw InvariantError("estimate_R: nonpositive coercivity constant (constraint error)");
  const double fd = dual_force_norm(space, mats, f);
  if (fd == 0.0) return 0.0;
  return std::pow(fd / ck, 1.0 / (pmin - 1.0));
}

inline double estimate_R(const Materials& mats, const BodyForces& f, const MixedSpace& space) {
  return estimate_R(mats, f, space, korn_constants(space));
}

// ---------------------------------------------------------------------------
// Discretely divergence-free random fields

/// Mass-orthogonal projection onto {v : B v = 0, v = 0 on the walls}.
class DivergenceFreeProjector {
 public:
  explicit DivergenceFreeProjector(const MixedSpace& space) : space_(&space), system_(space) {
    system_.assemble([&](int e, ElementMatrix& K) { mass_element(e, K); });
    system_.factorize();
    mass_ = assemble_velocity_mass();
  }

  Eigen::VectorXd project(const Eigen::VectorXd& r) {
    Eigen::VectorXd rr = r;
    space_->zero_dirichlet(rr);
    const Eigen::VectorXd x = system_.solve(system_.rhs(mass_ * rr));
    Eigen::VectorXd v = x.head(system_.velocity_size());
    space_->zero_dirichlet(v);
    return v;
  }

  /// Projected field with independent uniform nodal values in [-1, 1].
  template <typename Rng>
  Eigen::VectorXd random(Rng& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd r(space_->num_velocity_dofs());
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = dist(rng);
    return project(r);
  }

 private:
  void mass_element(int e, ElementMatrix& K) const {
    K.setZero();
    for_each_quad(*space_, e, [&](std::size_t, const QuadSample& s) {
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          const double v = s.weight * s.N[a] * s.N[b];
          K(2 * a, 2 * b) += v;
          K(2 * a + 1, 2 * b + 1) += v;
        }
    });
  }

  Eigen::SparseMatrix<double> assemble_velocity_mass() const {
    return detail::assemble_velocity_block(*space_, [&](int e, ElementMatrix& K) { mass_element(e, K); });
  }

  const MixedSpace* space_;
  SaddlePointSystem system_;
  Eigen::SparseMatrix<double> mass_;
};

// ---------------------------------------------------------------------------
// Variational-inequality battery

namespace detail {

inline double smoothed_yield(const MixedSpace& space, const Eigen::VectorXd& v, const Materials& mats) {
  return integrate(space, [&](int tag, int e, const QuadSample& s) {
    const FluidParams& fp = fluid(mats, tag);
    const double d = strain_at(v, space, e, s).frobenius_norm();
    return fp.g * (std::sqrt(fp.eps * fp.eps + d * d) - fp.eps);
  });
}

inline Eigen::VectorXd smoothed_power_operator(const MixedSpace& space, const Eigen::VectorXd& u, const Materials& mats) {
  return apply_flux(space, u, [&](int tag, const SymTensor2& D) {
    const FluidParams& fp = fluid(mats, tag);
    const double d = D.frobenius_norm();
    return (fp.mu * std::pow(fp.eps * fp.eps + d * d, 0.5 * (fp.p - 2.0))) * D;
  });
}

}  // namespace detail

/// Evaluates, for test fields v,
///   b(u; u, v - u) + <phi(u), v - u> + j(v) - j(u) - (f, v - u)
/// with phi and j smoothed at the materials' eps (the inequality the
/// regularized solution satisfies) and, as a diagnostic, unsmoothed.
inline BatteryReport vi_battery(const MixedSpace& space, const Materials& mats, const Eigen::VectorXd& load,
                                const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& tests, double tol = 1e-6) {
  BatteryReport rep;
  const Eigen::VectorXd conv = assemble_convection(space, FieldVelocity{&space, &u}) * u;
  const Eigen::VectorXd phi = detail::smoothed_power_operator(space, u, mats);
  const Eigen::VectorXd phi_exact = power_law_operator(space, u, mats);
  const double ju = detail::smoothed_yield(space, u, mats);
  const double ju_exact = yield_functional(space, u, mats);
  for (const auto& v : tests) {
    const Eigen::VectorXd d = v - u;
    const double work = load.dot(d);
    const double scale = std::max(1.0, std::abs(work));
    const double s = conv.dot(d) + phi.dot(d) + detail::smoothed_yield(space, v, mats) - ju - work;
    const double se = conv.dot(d) + phi_exact.dot(d) + yield_functional(space, v, mats) - ju_exact - work;
    rep.slack.push_back(s);
    rep.exact_slack.push_back(se);
    rep.scale.push_back(scale);
    rep.min_normalized_slack = std::min(rep.min_normalized_slack, s / scale);
    rep.min_normalized_exact_slack = std::min(rep.min_normalized_exact_slack, se / scale);
    if (!(s >= -tol * scale)) rep.passed = false;
  }
  return rep;
}

/// Admissible test fields around u: half are u + s delta with s spread over
/// four decades, half are independent random fields of the size of u.
inline std::vector<Eigen::VectorXd> battery_fields(DivergenceFreeProjector& proj, const Eigen::VectorXd& u, int count,
                                                   unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  const double umax = std::max(u.cwiseAbs().maxCoeff(), 1e-3);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd r = proj.random(rng);
    const double rmax = std::max(r.cwiseAbs().maxCoeff(), 1e-300);
    if (k % 2 == 0) {
      const double s = std::pow(10.0, -4.0 + 4.0 * (k / 2) / std::max(1.0, count / 2 - 1.0));
      out.push_back(u + (s * umax / rmax) * r);
    } else {
      out.push_back((umax * (0.1 + 1.9 * (k / 2) / std::max(1.0, count / 2 - 1.0)) / rmax) * r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-point loop

class TransmissionSolver {
 public:
  TransmissionSolver(const MixedSpace& space, const Materials& mats, const BodyForces& forces)
      : space_(&space), mats_(mats), forces_(forces), inner_(space, mats, forces) {}

  InnerSolver& inner() { return inner_; }

  /// One application of L with the inner solver warm-started at `guess`.
  MixedField apply(const MixedField& w, const InnerConfig& cfg, const MixedField* guess, InnerReport* rep = nullptr) {
    InnerResult r = inner_.solve(w, cfg, guess);
    if (rep) *rep = r.report;
    return std::move(r.field);
  }

  OuterResult solve(const InnerConfig& icfg, const OuterConfig& ocfg) {
    icfg.validate();
    ocfg.validate();
    OuterReport rep;
    rep.korn = korn_constants(*space_);
    rep.radius = estimate_R(mats_, forces_, *space_, rep.korn);
    const std::array<double, 2> pexp{mats_[0].p, mats_[1].p};

    InnerConfig warm = icfg;
    warm.eps_schedule = {icfg.eps_final()};

    MixedField w = space_->zero_field();
    MixedField u;
    double alpha = ocfg.relaxation;
    double prev_diff = std::numeric_limits<double>::infinity();
    for (int k = 0; k < ocfg.max_outer; ++k) {
      InnerReport ir;
      u = apply(w, k == 0 ? icfg : warm, k == 0 ? nullptr : &u, &ir);
      rep.inner_converged = rep.inner_converged && ir.converged;
      rep.inner_iterations.push_back(static_cast<int>(ir.residuals.size()) - 1);
      rep.inner_residual.push_back(ir.final_residual);
      rep.convection_defect.push_back(ir.convection_defect);
      rep.last_inner = ir;

      const Eigen::VectorXd diff = u.velocity - w.velocity;
      const double d = l6_norm(*space_, diff);
      const double scale = l6_norm(*space_, u.velocity);
      const FieldNorms nrm = norms(*space_, u.velocity, pexp);
      rep.l6_difference.push_back(d);
      rep.v_norm.push_back(nrm.v_norm);
      if (rep.l6_difference.size() > 1) rep.contraction.push_back(prev_diff > 0.0 ? d / prev_diff : 0.0);
      if (nrm.v_norm > rep.radius * (1.0 + 1e-12)) rep.ball_ok = false;
      rep.iterations = k + 1;
      rep.scale = scale;
      if (d <= ocfg.tol_fixed_point * scale) {
        rep.converged = true;
        break;
      }
      if (d > prev_diff) alpha = std::max(0.5 * alpha, 1.0 / 64.0);
      rep.relaxation.push_back(alpha);
      prev_diff = d;
      MixedField next;
      next.velocity = (1.0 - alpha) * w.velocity + alpha * u.velocity;
      next.pressure = u.pressure;
      w = std::move(next);
    }

    DivergenceFreeProjector proj(*space_);
    const auto tests = battery_fields(proj, u.velocity, ocfg.battery_size, ocfg.seed);
    rep.battery = vi_battery(*space_, with_eps(mats_, icfg.eps_final()), inner_.load(), u.velocity, tests);

    if (ocfg.continuity_check) rep.continuity = continuity_probe(u, warm, proj, ocfg.seed + 1);
    return {std::move(u), std::move(rep)};
  }

  /// Ratios ||L(u + delta) - L(u)||_L6 / ||delta||_L6 for admissible delta of
  /// relative L6 size 1e-2, 1e-3, 1e-4. Bounded when no ratio exceeds ten
  /// times the coarsest one (or 1e-3 when that is smaller).
  ContinuityReport continuity_probe(const MixedField& u, const InnerConfig& cfg, DivergenceFreeProjector& proj,
                                    unsigned long long seed) {
    ContinuityReport rep;
    std::mt19937_64 rng(seed);
    const MixedField base = apply(u, cfg, &u);
    const double scale = std::max(l6_norm(*space_, u.velocity), 1e-300);
    for (const double rel : {1e-2, 1e-3, 1e-4}) {
      const Eigen::VectorXd r = proj.random(rng);
      MixedField wp = u;
      wp.velocity += (rel * scale / l6_norm(*space_, r)) * r;
      const double dn = l6_norm(*space_, wp.velocity - u.velocity);
      const MixedField out = apply(wp, cfg, &base);
      rep.perturbation.push_back(dn / scale);
      rep.ratio.push_back(l6_norm(*space_, out.velocity - base.velocity) / dn);
    }
    rep.bound = 10.0 * std::max(rep.ratio.front(), 1e-3);
    rep.bounded = true;
    for (double r : rep.ratio)
      if (!std::isfinite(r) || r > rep.bound) rep.bounded = false;
    return rep;
  }

 private:
  const MixedSpace* space_;
  Materials mats_;
  BodyForces forces_;
  InnerSolver inner_;
};

inline OuterResult solve_transmission(const MixedSpace& space, const Materials& mats, const BodyForces& forces,
                                      const InnerConfig& icfg, const OuterConfig& ocfg) {
  TransmissionSolver solver(space, mats, forces);
  return solver.solve(icfg, ocfg);
}

}  // namespace hbflow
