#pragma once

// Semi-analytic two-layer Herschel-Bulkley channel flow u = (u(y), 0) driven
// by a uniform body force f along x, walls at y = 0 and y = h1 + h2, interface
// at y = h1. Momentum balance gives the shear stress
//
//   tau(y) = tau_c - f (y - h1),
//
// and for the tensor law sigma = mu |D|^{p-2} D + g D/|D| with |D| = |u'|/sqrt(2)
// the shear component is
//
//   tau = mu 2^{-p/2} |u'|^{p-2} u' + (g / sqrt 2) sign(u'),
//
// so u' = sign(tau) ((|tau| - g/sqrt 2) / (mu 2^{-p/2}))^{1/(p-1)} where
// |tau| > g/sqrt 2 and u' = 0 (plug) elsewhere. tau_c is fixed by u(H) = 0.
// Independent of the finite element code.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "hbflow/core_tensor.hpp"
#include "hbflow/errors.hpp"

namespace hbflow {

struct ChannelProblem {
  double h1 = 0.5;
  double h2 = 0.5;
  FluidParams fluid1;
  FluidParams fluid2;
  double f = 1.0;  // body force along x

  double height() const { return h1 + h2; }

  void validate() const {
    std::ostringstream msg;
    if (!(h1 > 0.0) || !(h2 > 0.0)) msg << "layer heights must be positive";
    else if (!(f >= 0.0) || !std::isfinite(f)) msg << "body force magnitude must be finite and nonnegative";
    else if (!(fluid1.mu > 0.0 && fluid2.mu > 0.0)) msg << "consistencies must be positive";
    else if (!(fluid1.g >= 0.0 && fluid2.g >= 0.0)) msg << "yield limits must be nonnegative";
    else if (!(fluid1.p > 1.0 && fluid1.p <= 2.0 && fluid2.p > 1.0 && fluid2.p <= 2.0))
      msg << "power-law indices must lie in (1, 2]";
    if (!msg.str().empty()) throw InputError("channel oracle: " + msg.str());
  }
};

/// Shear-stress yield threshold of a layer.
inline double shear_yield_stress(const FluidParams& fp) { return fp.g / std::sqrt(2.0); }

namespace detail {

inline double simpson_step(const std::function<double(double)>& fn, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = fn(lm), frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of fn over [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol = 1e-15,
                               int max_depth = 50) {
  if (b <= a) return 0.0;
  const double fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(fn, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Exact profile for one problem. Construction solves for tau_c; velocity(y)
/// integrates u' from the nearest precomputed breakpoint.
class ChannelSolution {
 public:
  explicit ChannelSolution(const ChannelProblem& prob) : prob_(prob) {
    prob_.validate();
    find_interface_stress();
  }

  const ChannelProblem& problem() const { return prob_; }
  double interface_stress() const { return tau_c_; }

  double shear_stress(double y) const { return tau_c_ - prob_.f * (y - prob_.h1); }

  int layer(double y) const { return y < prob_.h1 ? 1 : 2; }

  bool is_plug(double y) const {
    return std::abs(shear_stress(y)) <= shear_yield_stress(layer(y) == 1 ? prob_.fluid1 : prob_.fluid2);
  }

  /// True when u' vanishes on all of [0, H]. tau is affine, so checking both
  /// ends of each layer suffices.
  bool rigid() const {
    const double ends[2][2] = {{0.0, prob_.h1}, {prob_.h1, prob_.height()}};
    for (int l = 0; l < 2; ++l)
      for (double y : ends[l])
        if (!is_rounding_level(std::abs(shear_stress(y)) - shear_yield_stress(l == 0 ? prob_.fluid1 : prob_.fluid2)))
          return false;
    return true;
  }

  double slope(double y) const { return slope(y, tau_c_, layer(y)); }

  double velocity(double y) const {
    y = std::clamp(y, 0.0, prob_.height());
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
    const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - breaks_.begin()) - 1));
    return cumulative_[k] + integrate_slope(breaks_[k], y, tau_c_);
  }

  /// Maximal intervals of [0, H] on which |tau| <= g/sqrt(2) of the local layer.
  std::vector<std::pair<double, double>> plug_intervals() const {
    std::vector<std::pair<double, double>> out;
    auto add = [&](double lo, double hi) {
      if (hi < lo) return;
      if (!out.empty() && std::abs(out.back().second - lo) <= 1e-14) out.back().second = hi;
      else out.emplace_back(lo, hi);
    };
    for (int l = 1; l <= 2; ++l) {
      const double a = shear_yield_stress(l == 1 ? prob_.fluid1 : prob_.fluid2);
      const double y0 = l == 1 ? 0.0 : prob_.h1;
      const double y1 = l == 1 ? prob_.h1 : prob_.height();
      if (prob_.f == 0.0) {
        if (std::abs(tau_c_) <= a) add(y0, y1);
        continue;
      }
      // |tau_c - f (y - h1)| <= a  <=>  h1 + (tau_c - a)/f <= y <= h1 + (tau_c + a)/f
      add(std::max(y0, prob_.h1 + (tau_c_ - a) / prob_.f), std::min(y1, prob_.h1 + (tau_c_ + a) / prob_.f));
    }
    return out;
  }

  /// Integral of u over [0, H].
  double flow_rate() const {
    double q = 0.0;
    for (std::size_t k = 0; k + 1 < breaks_.size(); ++k)
      q += adaptive_simpson([&](double y) { return velocity(y); }, breaks_[k], breaks_[k + 1], 1e-13);
    return q;
  }

 private:
  double slope(double y, double tau_c, int lay) const {
    const FluidParams& fp = lay == 1 ? prob_.fluid1 : prob_.fluid2;
    const double tau = tau_c - prob_.f * (y - prob_.h1);
    const double a = shear_yield_stress(fp);
    const double excess = std::abs(tau) - a;
    if (is_rounding_level(excess)) return 0.0;
    const double k = fp.mu * std::pow(2.0, -0.5 * fp.p);
    return std::copysign(std::pow(excess / k, 1.0 / (fp.p - 1.0)), tau);
  }

  // Stress excess at rounding level counts as plug; treating it as flow
  // makes the integrand pure noise.
  bool is_rounding_level(double excess) const {
    const double scale = shear_yield_stress(prob_.fluid1) + shear_yield_stress(prob_.fluid2) + prob_.f * prob_.height();
    return excess <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
  }

  // Kinks of u' for a given tau_c: layer interface, tau = 0, |tau| = yield.
  std::vector<double> breakpoints(double tau_c) const {
    std::vector<double> b{0.0, prob_.h1, prob_.height()};
    if (prob_.f > 0.0) {
      auto in = [&](double y, double lo, double hi) {
        if (y > lo && y < hi) b.push_back(y);
      };
      in(prob_.h1 + tau_c / prob_.f, 0.0, prob_.height());
      const double a1 = shear_yield_stress(prob_.fluid1), a2 = shear_yield_stress(prob_.fluid2);
      for (double s : {-1.0, 1.0}) {
        in(prob_.h1 + (tau_c + s * a1) / prob_.f, 0.0, prob_.h1);
        in(prob_.h1 + (tau_c + s * a2) / prob_.f, prob_.h1, prob_.height());
      }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  // Integral of u' over [a, b], which must not contain a breakpoint inside.
  // The layer is taken from the midpoint so that endpoint samples on the
  // interface use the right material.
  double integrate_slope(double a, double b, double tau_c) const {
    if (b <= a) return 0.0;
    const int lay = layer(0.5 * (a + b));
    auto fn = [&](double y) { return slope(y, tau_c, lay); };
    const double size = std::max({std::abs(fn(a)), std::abs(fn(b)), std::abs(fn(0.5 * (a + b)))});
    if (size == 0.0) return 0.0;
    // u' carries rounding noise of relative size ~eps against its largest
    // value in the layer; the tolerance must stay above that floor.
    const FluidParams& fp = lay == 1 ? prob_.fluid1 : prob_.fluid2;
    const double tmax = std::max(std::abs(tau_c + prob_.f * prob_.h1), std::abs(tau_c - prob_.f * prob_.h2));
    const double smax = std::pow(tmax / (fp.mu * std::pow(2.0, -0.5 * fp.p)), 1.0 / (fp.p - 1.0));
    return adaptive_simpson(fn, a, b, (b - a) * std::max(1e-14 * size, 1e-13 * smax), 40);
  }

  double wall_velocity(double tau_c) const {
    const auto b = breakpoints(tau_c);
    double u = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) u += integrate_slope(b[k], b[k + 1], tau_c);
    return u;
  }

  void find_interface_stress() {
    const double bound =
        prob_.f * prob_.height() + shear_yield_stress(prob_.fluid1) + shear_yield_stress(prob_.fluid2) + 1.0;
    double lo = -bound, hi = bound;
    double ulo = wall_velocity(lo), uhi = wall_velocity(hi);
    if (!(ulo <= 0.0 && uhi >= 0.0)) throw SolverError("channel oracle: bisection bracket for the interface stress failed");
    double mid = 0.0;
    for (int it = 0; it < 400; ++it) {
      mid = 0.5 * (lo + hi);
      const double um = wall_velocity(mid);
      if (um == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * bound) break;
      if (um > 0.0) hi = mid;
      else lo = mid;
    }
    tau_c_ = mid;
    breaks_ = breakpoints(tau_c_);
    cumulative_.assign(breaks_.size(), 0.0);
    for (std::size_t k = 1; k < breaks_.size(); ++k)
      cumulative_[k] = cumulative_[k - 1] + integrate_slope(breaks_[k - 1], breaks_[k], tau_c_);
  }

  ChannelProblem prob_;
  double tau_c_ = 0.0;
  std::vector<double> breaks_;
  std::vector<double> cumulative_;
};

struct ChannelProfile {
  std::vector<double> y, u, tau;
  std::vector<bool> plug;
  double interface_stress = 0.0;
  std::vector<std::pair<double, double>> plug_intervals;
  double wall_residual = 0.0;  // |u(H)|
};

/// Samples the exact profile at `samples` equispaced points of [0, H].
inline ChannelProfile solve_channel(const ChannelProblem& prob, int samples = 201) {
  if (samples < 100) throw InputError("channel oracle: need at least 100 samples");
  const ChannelSolution sol(prob);
  ChannelProfile out;
  out.interface_stress = sol.interface_stress();
  out.plug_intervals = sol.plug_intervals();
  for (int k = 0; k < samples; ++k) {
    const double y = prob.height() * k / (samples - 1.0);
    out.y.push_back(y);
    out.u.push_back(sol.velocity(y));
    out.tau.push_back(sol.shear_stress(y));
    out.plug.push_back(sol.is_plug(y));
  }
  out.wall_residual = std::abs(out.u.back());
  return out;
}

/// Largest f for which the oracle returns the rigid (zero) profile, by
/// bisection on f with the oracle itself as the predicate.
inline double yield_threshold(const ChannelProblem& prob, double rel_tol = 1e-13) {
  prob.validate();
  auto rigid = [&](double f) {
    ChannelProblem q = prob;
    q.f = f;
    return ChannelSolution(q).rigid();
  };
  if (prob.fluid1.g == 0.0 && prob.fluid2.g == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (rigid(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw SolverError("channel oracle: no yield threshold found");
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (rigid(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// Closed form of the same threshold: a rigid profile needs one tau_c with
/// |tau| <= a_i on each layer, i.e. max(-a1, f h2 - a2) <= min(a1 - f h1, a2),
/// which splits into f h1 <= 2 a1, f h2 <= 2 a2 and f (h1 + h2) <= a1 + a2.
inline double yield_threshold_closed_form(const ChannelProblem& prob) {
  const double a1 = shear_yield_stress(prob.fluid1), a2 = shear_yield_stress(prob.fluid2);
  const double c1 = 2.0 * a1 / prob.h1;
  const double c2 = 2.0 * a2 / prob.h2;
  const double c3 = (a1 + a2) / prob.height();
  return std::min({c1, c2, c3});
}

inline void write_profile_csv(std::ostream& os, const ChannelProfile& p) {
  os << "y,u,tau,phase\n";
  char buf[128];
  for (std::size_t k = 0; k < p.y.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s\n", p.y[k], p.u[k], p.tau[k], p.plug[k] ? "plug" : "flow");
    os << buf;
  }
}

}  // namespace hbflow
