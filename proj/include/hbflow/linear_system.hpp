#pragma once

// Saddle-point system for the mixed discretization.
//
// Unknown ordering: [velocity dofs | pressure dofs | gauge multiplier].
//
//   [ K   B^T  0 ] [u]   [F]
//   [ B   0    e ] [p] = [0]
//   [ 0   e^T  0 ] [l]   [0]
//
// The kernel of B^T is the global constants (a jump of the pressure across
// the interface is seen by the interface flux), so the multiplier pins the
// first pressure dof through e = e_0 and split() shifts the result to zero
// mean. A dense mean-value row would do the same job but destroys the fill
// ordering of the direct solver. Dirichlet velocity rows
// and columns are replaced by the identity. The sparsity pattern and an
// element-to-slot table are built once; reassembly only rewrites values, and
// the symbolic factorization is reused across nonlinear iterations.

#include <Eigen/Sparse>
#include <algorithm>
#include <vector>

#ifdef HBFLOW_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/parallel.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

#ifdef HBFLOW_HAVE_UMFPACK
using SparseDirectSolver = Eigen::UmfPackLU<Eigen::SparseMatrix<double>>;
#else
using SparseDirectSolver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
#endif

class SaddlePointSystem {
 public:
  explicit SaddlePointSystem(const MixedSpace& space) : space_(&space) { build(); }

  const MixedSpace& space() const { return *space_; }
  int size() const { return n_; }
  int velocity_size() const { return nu_; }
  int pressure_size() const { return np_; }
  const Eigen::SparseMatrix<double>& matrix() const { return A_; }

  /// Rewrites the velocity block from kernel(e, ElementMatrix&). Pressure
  /// coupling, gauge and Dirichlet identity rows are left untouched.
  template <typename Kernel>
  void assemble(Kernel&& kernel) {
    const int ne = space_->num_elements();
    local_.resize(static_cast<std::size_t>(ne));
    parallel_for(ne, [&](int e) { kernel(e, local_[static_cast<std::size_t>(e)]); });
    double* val = A_.valuePtr();
    std::copy(base_.begin(), base_.end(), val);
    for (int e = 0; e < ne; ++e) {
      const auto& slots = slots_[static_cast<std::size_t>(e)];
      const auto& K = local_[static_cast<std::size_t>(e)];
      for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) {
          const int s = slots[static_cast<std::size_t>(12 * j + i)];
          if (s >= 0) val[s] += K(i, j);
        }
    }
    factorized_ = false;
  }

  void factorize() {
    if (!analyzed_) {
      lu_.analyzePattern(A_);
      analyzed_ = true;
    }
    lu_.factorize(A_);
    if (lu_.info() != Eigen::Success) throw SolverError("saddle-point factorization failed (singular or ill-posed system)");
    factorized_ = true;
  }

  /// Full right-hand side from a velocity load; Dirichlet entries are zeroed.
  Eigen::VectorXd rhs(const Eigen::VectorXd& velocity_load) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_);
    b.head(nu_) = velocity_load;
    for (int i = 0; i < nu_; ++i)
      if (space_->is_dirichlet(i)) b[i] = 0.0;
    return b;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) {
    if (!factorized_) factorize();
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success || !x.allFinite()) throw SolverError("saddle-point solve failed");
    return x;
  }

  /// Euclidean norm of (A x - b) over the free velocity rows.
  double momentum_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
    const Eigen::VectorXd r = A_ * x - b;
    double s = 0.0;
    for (int i = 0; i < nu_; ++i)
      if (!space_->is_dirichlet(i)) s += r[i] * r[i];
    return std::sqrt(s);
  }

  MixedField split(const Eigen::VectorXd& x) const {
    MixedField f;
    f.velocity = x.head(nu_);
    // The divergence rows carry +B, so the multiplier is minus the pressure.
    f.pressure = -x.segment(nu_, np_);
    f.pressure.array() -= mass_.dot(f.pressure) / measure_;
    return f;
  }

  Eigen::VectorXd join(const MixedField& f) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    x.head(nu_) = f.velocity;
    x.segment(nu_, np_) = -f.pressure;
    return x;
  }

 private:
  void build() {
    const MixedSpace& s = *space_;
    nu_ = s.num_velocity_dofs();
    np_ = s.num_pressure_dofs();
    n_ = nu_ + np_ + 1;
    const int ne = s.num_elements();
    const int gauge = nu_ + np_;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(ne) * (144 + 72) + static_cast<std::size_t>(2 * np_ + nu_));
    // Pattern entries carry 0; real values are added in a second pass so
    // that cancellation never drops a slot.
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < 12; ++i) {
        const int r = s.velocity_dof(e, i / 2, i % 2);
        if (s.is_dirichlet(r)) continue;
        for (int j = 0; j < 12; ++j) {
          const int c = s.velocity_dof(e, j / 2, j % 2);
          if (!s.is_dirichlet(c)) trip.emplace_back(r, c, 0.0);
        }
      }
    for (int i = 0; i < nu_; ++i)
      if (s.is_dirichlet(i)) trip.emplace_back(i, i, 0.0);
    ElementDivergence B;
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 12; ++j) {
          const int c = s.velocity_dof(e, j / 2, j % 2);
          if (s.is_dirichlet(c)) continue;
          trip.emplace_back(nu_ + s.pressure_dof(e, i), c, 0.0);
          trip.emplace_back(c, nu_ + s.pressure_dof(e, i), 0.0);
        }
    trip.emplace_back(nu_, gauge, 0.0);
    trip.emplace_back(gauge, nu_, 0.0);
    A_.resize(n_, n_);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();

    base_.assign(static_cast<std::size_t>(A_.nonZeros()), 0.0);
    for (int i = 0; i < nu_; ++i)
      if (s.is_dirichlet(i)) base_[static_cast<std::size_t>(slot(i, i))] = 1.0;
    for (int e = 0; e < ne; ++e) {
      divergence_element(s, e, B);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 12; ++j) {
          const int c = s.velocity_dof(e, j / 2, j % 2);
          if (s.is_dirichlet(c)) continue;
          const int r = nu_ + s.pressure_dof(e, i);
          base_[static_cast<std::size_t>(slot(r, c))] += B(i, j);
          base_[static_cast<std::size_t>(slot(c, r))] += B(i, j);
        }
    }
    base_[static_cast<std::size_t>(slot(nu_, gauge))] = 1.0;
    base_[static_cast<std::size_t>(slot(gauge, nu_))] = 1.0;
    mass_ = pressure_mass(s);
    measure_ = mass_.sum();

    slots_.assign(static_cast<std::size_t>(ne), {});
    for (int e = 0; e < ne; ++e) {
      auto& sl = slots_[static_cast<std::size_t>(e)];
      for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) {
          const int r = s.velocity_dof(e, i / 2, i % 2);
          const int c = s.velocity_dof(e, j / 2, j % 2);
          sl[static_cast<std::size_t>(12 * j + i)] = (s.is_dirichlet(r) || s.is_dirichlet(c)) ? -1 : slot(r, c);
        }
    }
    std::copy(base_.begin(), base_.end(), A_.valuePtr());
  }

  int slot(int r, int c) const {
    const int* outer = A_.outerIndexPtr();
    const int* inner = A_.innerIndexPtr();
    const int* lo = inner + outer[c];
    const int* hi = inner + outer[c + 1];
    const int* it = std::lower_bound(lo, hi, r);
    if (it == hi || *it != r) throw InvariantError("saddle-point pattern is missing an entry");
    return static_cast<int>(it - inner);
  }

  const MixedSpace* space_;
  int nu_ = 0, np_ = 0, n_ = 0;
  Eigen::SparseMatrix<double> A_;
  std::vector<double> base_;
  Eigen::VectorXd mass_;
  double measure_ = 1.0;
  std::vector<std::array<int, 144>> slots_;
  std::vector<ElementMatrix, Eigen::aligned_allocator<ElementMatrix>> local_;
  SparseDirectSolver lu_;
  bool analyzed_ = false;
  bool factorized_ = false;
};

}  // namespace hbflow
