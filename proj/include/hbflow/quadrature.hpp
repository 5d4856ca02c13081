#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hbflow {

/// Point of a triangle rule in barycentric coordinates. Weights are fractions
/// of the triangle area (they sum to one).
struct TriangleQuadPoint {
  std::array<double, 3> bary{};
  double weight = 0.0;
};

struct TriangleRule {
  std::vector<TriangleQuadPoint> points;
  int degree = 0;  // polynomial degree integrated exactly
};

/// Gauss point on [0, 1].
struct LineQuadPoint {
  double s = 0.0;
  double weight = 0.0;
};

/// n-point Gauss-Legendre rule mapped to [0, 1]; exact to degree 2n - 1.
inline std::vector<LineQuadPoint> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  std::vector<LineQuadPoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    pts[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return pts;
}

/// Symmetric 6-point rule of degree 4 (Dunavant).
inline TriangleRule dunavant_degree4() {
  constexpr double a = 0.445948490915965;
  constexpr double wa = 0.223381589678011;
  constexpr double b = 0.091576213509771;
  constexpr double wb = 0.109951743655322;
  TriangleRule r;
  r.degree = 4;
  r.points = {
      {{a, a, 1.0 - 2.0 * a}, wa}, {{a, 1.0 - 2.0 * a, a}, wa}, {{1.0 - 2.0 * a, a, a}, wa},
      {{b, b, 1.0 - 2.0 * b}, wb}, {{b, 1.0 - 2.0 * b, b}, wb}, {{1.0 - 2.0 * b, b, b}, wb},
  };
  return r;
}

/// Collapsed (Duffy) tensor Gauss rule with n x n points; exact to degree 2n - 2.
inline TriangleRule collapsed_gauss(int n) {
  const auto g = gauss_legendre(n);
  TriangleRule r;
  r.degree = 2 * n - 2;
  for (const auto& gu : g)
    for (const auto& gv : g) {
      const double x = gu.s;
      const double y = gv.s * (1.0 - gu.s);
      r.points.push_back({{1.0 - x - y, x, y}, 2.0 * gu.weight * gv.weight * (1.0 - gu.s)});
    }
  return r;
}

}  // namespace hbflow
