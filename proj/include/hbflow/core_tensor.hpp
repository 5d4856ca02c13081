#pragma once

// Small symmetric tensors and the pointwise Herschel-Bulkley law.
//
// The multivalued constitutive law
//
//   s = mu |D|^{p-2} D + g D/|D|      if |D| != 0
//   |s| <= g                          if |D| == 0
//
// is evaluated in its square-root regularized form, where |D| is replaced by
// (eps^2 + |D|^2)^{1/2} in both terms. The regularized law is the gradient of
// a convex potential, hence single-valued and monotone.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "hbflow/errors.hpp"

namespace hbflow {

/// Symmetric Dim x Dim tensor storing only the Dim(Dim+1)/2 independent
/// components, row-major upper triangle: for Dim = 2 that is (xx, xy, yy).
template <int Dim>
class SymTensor {
  static_assert(Dim >= 1 && Dim <= 3);

 public:
  static constexpr int dim = Dim;
  static constexpr std::size_t size = Dim * (Dim + 1) / 2;

  constexpr SymTensor() = default;

  static constexpr SymTensor identity() {
    SymTensor t;
    for (int i = 0; i < Dim; ++i) t(i, i) = 1.0;
    return t;
  }

  /// Symmetric part of an arbitrary square matrix given by its entries.
  template <typename Matrix>
  static constexpr SymTensor symmetric_part(const Matrix& m) {
    SymTensor t;
    for (int i = 0; i < Dim; ++i)
      for (int j = i; j < Dim; ++j) t(i, j) = 0.5 * (m[i][j] + m[j][i]);
    return t;
  }

  constexpr double& operator()(int i, int j) { return c_[index(i, j)]; }
  constexpr double operator()(int i, int j) const { return c_[index(i, j)]; }

  constexpr const std::array<double, size>& components() const { return c_; }

  constexpr double trace() const {
    double s = 0.0;
    for (int i = 0; i < Dim; ++i) s += (*this)(i, i);
    return s;
  }

  /// Full contraction sigma_lm tau_lm (off-diagonal entries count twice).
  constexpr double dot(const SymTensor& o) const {
    double s = 0.0;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) s += (*this)(i, j) * o(i, j);
    return s;
  }

  double frobenius_norm() const { return std::sqrt(dot(*this)); }

  constexpr SymTensor& operator+=(const SymTensor& o) {
    for (std::size_t k = 0; k < size; ++k) c_[k] += o.c_[k];
    return *this;
  }
  constexpr SymTensor& operator-=(const SymTensor& o) {
    for (std::size_t k = 0; k < size; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  constexpr SymTensor& operator*=(double a) {
    for (auto& v : c_) v *= a;
    return *this;
  }

  friend constexpr SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend constexpr SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend constexpr SymTensor operator-(SymTensor a) { return a *= -1.0; }
  friend constexpr SymTensor operator*(double s, SymTensor a) { return a *= s; }
  friend constexpr SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend constexpr bool operator==(const SymTensor&, const SymTensor&) = default;

 private:
  static constexpr std::size_t index(int i, int j) {
    if (i > j) {
      const int t = i;
      i = j;
      j = t;
    }
    // offset of row i in the packed upper triangle
    return static_cast<std::size_t>(i * Dim - i * (i - 1) / 2 + (j - i));
  }

  std::array<double, size> c_{};
};

using SymTensor2 = SymTensor<2>;

/// Material record of one subdomain.
struct FluidParams {
  double mu = 1.0;   // consistency
  double g = 0.0;    // yield limit
  double p = 2.0;    // power-law index
  double eps = 1e-4; // regularization length for |D|
};

/// Admissible power-law window 3n/(n+2) <= p <= 2 for space dimension n.
constexpr double min_power_index(int dim) { return 3.0 * dim / (dim + 2.0); }

/// Throws InputError naming the violated condition.
inline void validate(const FluidParams& fp, int dim = 2) {
  std::ostringstream msg;
  if (!(fp.mu > 0.0) || !std::isfinite(fp.mu)) msg << "consistency mu must be positive (got " << fp.mu << ")";
  else if (!(fp.g >= 0.0) || !std::isfinite(fp.g)) msg << "yield limit g must be nonnegative (got " << fp.g << ")";
  else if (!(fp.eps > 0.0) || !std::isfinite(fp.eps)) msg << "regularization eps must be positive (got " << fp.eps << ")";
  else if (!(fp.p >= min_power_index(dim) && fp.p <= 2.0))
    msg << "power-law index p = " << fp.p << " outside the admissible window [" << min_power_index(dim)
        << ", 2] for dimension " << dim;
  else
    return;
  throw InputError(msg.str());
}

template <int Dim>
constexpr SymTensor<Dim> deviator(const SymTensor<Dim>& t) {
  return t - (t.trace() / Dim) * SymTensor<Dim>::identity();
}

/// eta(s) = mu (eps^2 + s^2)^{(p-2)/2} + g (eps^2 + s^2)^{-1/2}
inline double effective_viscosity(double dnorm, const FluidParams& fp) {
  const double r2 = fp.eps * fp.eps + dnorm * dnorm;
  return fp.mu * std::pow(r2, 0.5 * (fp.p - 2.0)) + fp.g / std::sqrt(r2);
}

/// d(eta)/ds divided by s; finite at s = 0. Used by the Newton linearization.
inline double effective_viscosity_slope_over_s(double dnorm, const FluidParams& fp) {
  const double r2 = fp.eps * fp.eps + dnorm * dnorm;
  return fp.mu * (fp.p - 2.0) * std::pow(r2, 0.5 * (fp.p - 4.0)) - fp.g / (r2 * std::sqrt(r2));
}

/// Convex potential whose derivative in s is eta(s) s, shifted to vanish at 0.
inline double viscous_potential(double dnorm, const FluidParams& fp) {
  // Differences written without cancellation: exactly 0 at the origin.
  const double e = fp.eps;
  const double q = dnorm / e;
  const double power = std::pow(e, fp.p) * std::expm1(0.5 * fp.p * std::log1p(q * q));
  const double yield = dnorm * dnorm / (std::sqrt(e * e + dnorm * dnorm) + e);
  return fp.mu / fp.p * power + fp.g * yield;
}

/// Regularized deviatoric stress for a trace-free rate of deformation.
template <int Dim>
SymTensor<Dim> hb_stress(const SymTensor<Dim>& d, const FluidParams& fp) {
  const double n = d.frobenius_norm();
  if (std::abs(d.trace()) > 1e-10 * n) {
    std::ostringstream msg;
    msg << "rate of deformation is not trace-free (trace " << d.trace() << ", norm " << n
        << "): incompressibility violated upstream";
    throw InvariantError(msg.str());
  }
  return effective_viscosity(n, fp) * d;
}

/// Unregularized power-law part mu |x|^{p-2} x, zero at the origin.
template <int Dim>
SymTensor<Dim> power_law_flux(const SymTensor<Dim>& x, double p, double mu = 1.0) {
  const double n = x.frobenius_norm();
  if (n == 0.0) return {};
  return (mu * std::pow(n, p - 2.0)) * x;
}

/// (|x|^{p-2}x - |y|^{p-2}y).(x-y) - c |x-y|^2 / (|x|+|y|)^{2-p}
template <int Dim>
double monotonicity_gap(const SymTensor<Dim>& x, const SymTensor<Dim>& y, double p, double c) {
  const double nx = x.frobenius_norm();
  const double ny = y.frobenius_norm();
  if (nx == 0.0 && ny == 0.0) throw std::invalid_argument("monotonicity_gap: x = y = 0 is degenerate");
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("monotonicity_gap: need 1 < p <= 2");
  if (!(c > 0.0)) throw std::invalid_argument("monotonicity_gap: need c > 0");
  const SymTensor<Dim> diff = x - y;
  const double lhs = (power_law_flux(x, p) - power_law_flux(y, p)).dot(diff);
  const double rhs = diff.dot(diff) / std::pow(nx + ny, 2.0 - p);
  return lhs - c * rhs;
}

}  // namespace hbflow
