#pragma once

#include <stdexcept>
#include <string>

namespace hbflow {

// Malformed user input: mesh files, config files, CLI arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A data-model invariant does not hold (bad mesh topology, non trace-free
// rate of deformation, Dirichlet entries that are not zero, ...).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: singular saddle-point system, bracket failure, etc.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hbflow
