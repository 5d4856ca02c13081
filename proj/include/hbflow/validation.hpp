#pragma once

// Comparison of finite element channel solutions with the 1-D oracle.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hbflow/assembly.hpp"
#include "hbflow/channel_oracle.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

struct OracleComparison {
  double error_l2 = 0.0;   // ||u_h - u_exact||_L2
  double exact_l2 = 0.0;   // ||u_exact||_L2
  double relative() const { return exact_l2 > 0.0 ? error_l2 / exact_l2 : error_l2; }
};

/// L2 distance between u_h and (u(y), 0) over the whole mesh, by the space's
/// quadrature. Oracle values are cached per distinct y.
inline OracleComparison compare_with_oracle(const MixedSpace& space, const Eigen::VectorXd& u,
                                            const ChannelSolution& exact) {
  std::vector<std::pair<double, double>> cache;  // sorted (y, u(y))
  {
    std::vector<double> ys;
    for (int e = 0; e < space.num_elements(); ++e)
      for (const auto& q : space.rule().points) ys.push_back(space.physical_point(e, q.bary).y);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    cache.reserve(ys.size());
    for (double y : ys) cache.emplace_back(y, exact.velocity(y));
  }
  auto lookup = [&](double y) {
    auto it = std::lower_bound(cache.begin(), cache.end(), std::make_pair(y, -HUGE_VAL));
    return it->second;
  };
  OracleComparison out;
  double num = 0.0, den = 0.0;
  for (int e = 0; e < space.num_elements(); ++e)
    for_each_quad(space, e, [&](std::size_t, const QuadSample& s) {
      const Point2 v = value_at(u, space, e, s);
      const double ue = lookup(space.physical_point(e, s.bary).y);
      num += s.weight * ((v.x - ue) * (v.x - ue) + v.y * v.y);
      den += s.weight * ue * ue;
    });
  out.error_l2 = std::sqrt(num);
  out.exact_l2 = std::sqrt(den);
  return out;
}

/// Vertical extent of the velocity nodes whose x-velocity lies within
/// band * max(u_x) of the maximum. Empty (lo > hi) for a zero field.
inline std::pair<double, double> plateau_extent(const MixedSpace& space, const Eigen::VectorXd& u, double band) {
  double umax = 0.0;
  for (int n = 0; n < space.num_velocity_nodes(); ++n) umax = std::max(umax, u[2 * n]);
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  if (umax <= 0.0) return {lo, hi};
  for (int n = 0; n < space.num_velocity_nodes(); ++n)
    if (umax - u[2 * n] <= band * umax) {
      const double y = space.velocity_node_position(n).y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  return {lo, hi};
}

}  // namespace hbflow
