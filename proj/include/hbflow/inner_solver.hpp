#pragma once

// Solver for the auxiliary problem with a frozen convecting field w: find
// (u, pressure) with
//
//   a_eps(u; u, v) + b(w; u, v) - (pressure, div v) = (f, v),   (q, div u) = 0,
//
// where the regularized viscosity eta_eps carries both the power-law and the
// yield part, continued over a decreasing eps schedule. Two linearizations:
// damped Picard on the viscosity (Kacanov iteration) and damped Newton on the
// regularized operator. Both share the residual, the backtracking rule and
// the stopping test; Newton is the default because Picard needs hundreds of
// factorizations once eps reaches 1e-4 in yield-stress problems.

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/linear_system.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

enum class Linearization { picard, newton };

inline const char* to_string(Linearization l) { return l == Linearization::picard ? "picard" : "newton"; }

struct InnerConfig {
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4};
  double tol_rel = 1e-8;
  int max_picard = 200;  // iteration cap per eps stage
  double damping = 1.0;
  Linearization linearization = Linearization::newton;

  double eps_final() const { return eps_schedule.back(); }

  void validate() const {
    std::ostringstream msg;
    if (eps_schedule.empty()) msg << "eps_schedule must not be empty";
    for (std::size_t i = 0; i < eps_schedule.size() && msg.str().empty(); ++i) {
      if (!(eps_schedule[i] > 0.0)) msg << "eps_schedule entries must be positive";
      else if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])) msg << "eps_schedule must be strictly decreasing";
    }
    if (msg.str().empty()) {
      if (!(tol_rel > 0.0 && tol_rel < 1.0)) msg << "tol_rel must lie in (0, 1)";
      else if (max_picard < 1) msg << "max_picard must be at least 1";
      else if (!(damping > 0.0 && damping <= 1.0)) msg << "damping must lie in (0, 1]";
    }
    if (!msg.str().empty()) throw InputError(msg.str());
  }
};

struct InnerReport {
  std::vector<double> residuals;       // relative algebraic residual per iteration, all stages
  std::vector<int> stage_iterations;   // iterations spent at each eps
  std::vector<double> energies;        // energy per iteration (w = 0 only), aligned with residuals
  bool converged = false;
  double final_residual = 0.0;
  double energy = 0.0;
  double divergence_norm = 0.0;        // ||B u||
  double interface_defect = 0.0;       // max velocity jump across the interface
  // A posteriori face of the a priori bound: phi(u).u + j(u) against f.u.
  double estimate_lhs = 0.0;           // <phi_eps(u), u> including the smoothed yield term
  double estimate_rhs = 0.0;           // (f, u)
  double convection_defect = 0.0;      // b(w; u, u)
  int linear_solves = 0;
};

struct InnerResult {
  MixedField field;
  InnerReport report;
};

/// Convex energy sum_i int Psi_eps(|D u|) - (f, u), with eps from the materials.
/// Convection is not a gradient and is not part of it.
inline double energy(const MixedSpace& space, const Eigen::VectorXd& u, const Materials& mats, const Eigen::VectorXd& load) {
  const double visc = integrate(space, [&](int tag, int e, const QuadSample& s) {
    return viscous_potential(strain_at(u, space, e, s).frobenius_norm(), fluid(mats, tag));
  });
  return visc - load.dot(u);
}

inline double energy(const MixedSpace& space, const MixedField& field, const Materials& mats, const BodyForces& f) {
  return energy(space, field.velocity, mats, load_vector(space, f));
}

/// Largest pointwise velocity jump across interface edges, sampled at Gauss
/// points of each edge from both adjacent triangles.
inline double interface_velocity_jump(const MixedSpace& space, const Eigen::VectorXd& u) {
  const TwoPhaseMesh& m = space.mesh();
  const auto line = gauss_legendre(3);
  auto bary_of = [&](int t, int va, int vb, double s) {
    std::array<double, 3> l{};
    const auto& tr = m.triangle(t);
    for (int k = 0; k < 3; ++k) {
      if (tr.v[k] == va) l[k] = 1.0 - s;
      if (tr.v[k] == vb) l[k] = s;
    }
    return l;
  };
  double jump = 0.0;
  for (const auto& ie : m.interface_edges())
    for (const auto& g : line) {
      const Point2 a = space.velocity(u, ie.tri1, bary_of(ie.tri1, ie.v[0], ie.v[1], g.s));
      const Point2 b = space.velocity(u, ie.tri2, bary_of(ie.tri2, ie.v[0], ie.v[1], g.s));
      jump = std::max(jump, norm(a - b));
    }
  return jump;
}

/// Owns the saddle-point workspace so repeated solves on one space (the outer
/// fixed-point loop) reuse the pattern and the symbolic factorization.
class InnerSolver {
 public:
  InnerSolver(const MixedSpace& space, const Materials& mats, const BodyForces& forces)
      : space_(&space), mats_(mats), system_(space), load_(load_vector(space, forces)) {
    for (const auto& fp : mats_) validate(fp);
    load_free_ = load_;
    space.zero_dirichlet(load_free_);
    load_norm_ = load_free_.norm();
  }

  const MixedSpace& space() const { return *space_; }
  const Materials& materials() const { return mats_; }
  const Eigen::VectorXd& load() const { return load_; }
  SaddlePointSystem& system() { return system_; }

  InnerResult solve(const MixedField& w, const InnerConfig& cfg, const MixedField* guess = nullptr) {
    cfg.validate();
    space_->check_field(w);
    const bool frozen_zero = w.velocity.cwiseAbs().maxCoeff() == 0.0;
    const Eigen::VectorXd b = system_.rhs(load_);
    const double scale = load_norm_ > 0.0 ? load_norm_ : 1.0;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(system_.size());
    if (guess) {
      space_->check_field(*guess);
      x = system_.join(*guess);
    }

    InnerReport rep;
    Eigen::VectorXd best_x = x;
    double best_res = std::numeric_limits<double>::infinity();
    bool stage_ok = false;

    for (const double eps : cfg.eps_schedule) {
      const Materials m = with_eps(mats_, eps);
      auto assemble_at = [&](const Eigen::VectorXd& state, Linearization lin) {
        system_.assemble([&](int e, ElementMatrix& K) {
          if (lin == Linearization::picard) {
            const FluidParams& fp = fluid(m, space_->tag(e));
            viscous_element(*space_, e,
                            [&](int el, std::size_t, const QuadSample& s) {
                              return effective_viscosity(strain_at(state, *space_, el, s).frobenius_norm(), fp);
                            },
                            K);
          } else {
            viscous_tangent_element(*space_, e, state, m, K);
          }
          if (!frozen_zero) {
            ElementMatrix C;
            convection_element(*space_, e, FieldVelocity{space_, &w.velocity}, C);
            K += C;
          }
        });
      };
      // Nonlinear residual A(u)x - b needs the frozen-viscosity matrix at u.
      auto residual_at = [&](const Eigen::VectorXd& state) {
        assemble_at(state, Linearization::picard);
        return system_.momentum_residual(state, b) / scale;
      };
      auto merit_energy = [&](const Eigen::VectorXd& state) { return energy(*space_, state.head(system_.velocity_size()), m, load_); };

      int it = 0;
      stage_ok = false;
      double res = residual_at(x);
      double merit = frozen_zero ? merit_energy(x) : res;
      best_res = std::numeric_limits<double>::infinity();
      for (;;) {
        rep.residuals.push_back(res);
        if (frozen_zero) rep.energies.push_back(merit);
        if (res < best_res) {
          best_res = res;
          best_x = x;
        }
        if (res <= cfg.tol_rel) {
          stage_ok = true;
          break;
        }
        if (it >= cfg.max_picard) break;
        ++it;

        Eigen::VectorXd target;
        if (cfg.linearization == Linearization::picard) {
          // System already holds A(u_k) from residual_at.
          system_.factorize();
          target = system_.solve(b);
        } else {
          const Eigen::VectorXd r = system_.matrix() * x - b;
          assemble_at(x, Linearization::newton);
          system_.factorize();
          target = x - system_.solve(r);
        }
        ++rep.linear_solves;

        double theta = cfg.damping;
        Eigen::VectorXd cand;
        double cand_res = 0.0, cand_merit = 0.0;
        for (int halvings = 0;; ++halvings) {
          cand = x + theta * (target - x);
          cand_res = residual_at(cand);
          cand_merit = frozen_zero ? merit_energy(cand) : cand_res;
          const double slack = frozen_zero ? cfg.tol_rel * std::max(1.0, std::abs(merit)) : 0.0;
          if (cand_merit <= merit + slack || halvings >= 12) break;
          theta *= 0.5;
        }
        x = std::move(cand);
        res = cand_res;
        merit = cand_merit;
      }
      rep.stage_iterations.push_back(it);
    }

    if (!stage_ok) x = best_x;
    finalize(x, w, frozen_zero, cfg.eps_final(), rep);
    rep.converged = stage_ok;

    InnerResult out{system_.split(x), std::move(rep)};
    return out;
  }

 private:
  void finalize(const Eigen::VectorXd& x, const MixedField& w, bool frozen_zero, double eps, InnerReport& rep) {
    const Eigen::VectorXd u = x.head(system_.velocity_size());
    const Materials m = with_eps(mats_, eps);
    rep.final_residual = rep.residuals.back();
    rep.energy = energy(*space_, u, m, load_);
    rep.divergence_norm = (assemble_divergence(*space_) * u).norm();
    rep.interface_defect = interface_velocity_jump(*space_, u);
    rep.estimate_lhs = regularized_operator(*space_, u, m).dot(u);
    rep.estimate_rhs = load_free_.dot(u);
    rep.convection_defect = frozen_zero ? 0.0 : u.dot(assemble_convection(*space_, w) * u);
  }

  const MixedSpace* space_;
  Materials mats_;
  SaddlePointSystem system_;
  Eigen::VectorXd load_;
  Eigen::VectorXd load_free_;
  double load_norm_ = 0.0;
};

/// One-shot convenience wrapper around InnerSolver.
inline InnerResult solve_inner(const MixedField& w, const MixedSpace& space, const Materials& mats,
                               const BodyForces& forces, const InnerConfig& cfg) {
  InnerSolver solver(space, mats, forces);
  return solver.solve(w, cfg);
}

}  // namespace hbflow
