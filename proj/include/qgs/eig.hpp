#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>

#include "qgs/fem.hpp"

namespace qgs {

struct EigenOptions {
  /// Shift for the factorization of K − σM. Must lie below the spectrum;
  /// defaults to eigen_lower_bound() minus a small margin.
  std::optional<double> shift;
  double tol = 1e-10;
  std::size_t max_iter = 500;
  /// Krylov basis size per restart.
  std::size_t basis = 8;
  /// Raise NumericalError when max_iter is reached without convergence.
  bool require_convergence = true;
  /// When set, receives "iteration,lambda,residual" CSV rows.
  std::ostream* history = nullptr;
};

struct EigenResult {
  double lambda = 0.0;
  Vector vector;          // M-normalized, oriented so that its entries sum to >= 0
  double residual = 0.0;  // ‖Kx − λMx‖ / ‖Mx‖
  std::size_t iterations = 0;
  bool converged = false;
  double shift = 0.0;     // shift actually factorized
};

/// Smallest eigenpair of Kx = λMx for symmetric K and positive definite M.
///
/// Shift-and-invert Krylov iteration: each restart builds an M-orthonormal
/// basis from the current iterate, its residual mapped by (K − σM)⁻¹, and
/// further powers of (K − σM)⁻¹M, takes the smallest Ritz pair, and restarts
/// from it. The start vector is all-ones. If the
/// factorization shows σ is not below the spectrum, σ is lowered up to three
/// times before NumericalError is raised.
EigenResult smallest_eigenpair(const SparseMatrix& K, const SparseMatrix& M, const EigenOptions& options = {});
EigenResult smallest_eigenpair(const AssembledForms& forms, const EigenOptions& options = {});

/// Largest λ (found by bisection) for which K − λM is weakly diagonally
/// dominant with nonnegative diagonal. Such a λ never exceeds the smallest
/// eigenvalue.
double eigen_lower_bound(const SparseMatrix& K, const SparseMatrix& M);
double eigen_lower_bound(const AssembledForms& forms);

/// ‖Kx − λMx‖₂ / ‖Mx‖₂.
double eigen_residual(const SparseMatrix& K, const SparseMatrix& M, const Vector& x, double lambda);

/// Dense reference: all generalized eigenvalues, ascending.
Vector dense_eigenvalues(const SparseMatrix& K, const SparseMatrix& M);

}  // namespace qgs
