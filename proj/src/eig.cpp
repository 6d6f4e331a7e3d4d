#include "qgs/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "qgs/error.hpp"

namespace qgs {
namespace {

using Factorization = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

void check_pencil(const SparseMatrix& K, const SparseMatrix& M) {
  if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows()) {
    throw ValidationError("pencil matrices must be square and of equal size");
  }
  if (K.rows() == 0) throw ValidationError("pencil has no degrees of freedom");
}

// True when K − σM factorized with all pivots positive.
bool factor_definite(Factorization& solver, const SparseMatrix& K, const SparseMatrix& M, double sigma) {
  SparseMatrix shifted = K - sigma * M;
  solver.compute(shifted);
  if (solver.info() != Eigen::Success) return false;
  return solver.vectorD().minCoeff() > 0.0;
}

double m_norm(const SparseMatrix& M, const Vector& x) { return std::sqrt(std::max(0.0, x.dot(M * x))); }

}  // namespace

double eigen_residual(const SparseMatrix& K, const SparseMatrix& M, const Vector& x, double lambda) {
  const Vector mx = M * x;
  return (K * x - lambda * mx).norm() / mx.norm();
}

double eigen_lower_bound(const SparseMatrix& K, const SparseMatrix& M) {
  check_pencil(K, M);
  struct Entry {
    Eigen::Index row;
    double k;
    double m;
  };
  // Column-wise union of the sparsity patterns.
  std::vector<std::vector<Entry>> columns(static_cast<std::size_t>(K.cols()));
  auto upsert = [&](Eigen::Index row, Eigen::Index col, double k, double m) {
    auto& column = columns[static_cast<std::size_t>(col)];
    for (auto& e : column) {
      if (e.row == row) {
        e.k += k;
        e.m += m;
        return;
      }
    }
    column.push_back({row, k, m});
  };
  for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) upsert(it.row(), col, it.value(), 0.0);
  }
  for (Eigen::Index col = 0; col < M.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(M, col); it; ++it) upsert(it.row(), col, 0.0, it.value());
  }

  // Symmetric matrices: column sums are row sums.
  auto dominant = [&](double lambda) {
    for (std::size_t col = 0; col < columns.size(); ++col) {
      double diagonal = 0.0;
      double off = 0.0;
      for (const auto& e : columns[col]) {
        const double value = e.k - lambda * e.m;
        if (static_cast<std::size_t>(e.row) == col) {
          diagonal = value;
        } else {
          off += std::abs(value);
        }
      }
      if (diagonal < off) return false;
    }
    return true;
  };

  // Rayleigh quotients of unit vectors bound λ_min from above.
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    const double m = M.coeff(i, i);
    if (m > 0.0) hi = std::min(hi, K.coeff(i, i) / m);
  }
  if (!std::isfinite(hi)) throw ValidationError("mass matrix has no positive diagonal entry");
  if (dominant(hi)) return hi;

  double lo = std::min(hi, 0.0) - 1.0;
  for (int k = 0; k < 200 && !dominant(lo); ++k) lo = hi - 2.0 * (hi - lo);
  for (int k = 0; k < 100; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (dominant(mid) ? lo : hi) = mid;
  }
  return lo;
}

double eigen_lower_bound(const AssembledForms& forms) { return eigen_lower_bound(forms.stiffness(), forms.M); }

EigenResult smallest_eigenpair(const SparseMatrix& K, const SparseMatrix& M, const EigenOptions& options) {
  check_pencil(K, M);
  if (!(options.tol > 0.0)) throw ValidationError("eigensolver tolerance must be positive");
  const auto n = K.rows();

  double sigma;
  if (options.shift) {
    sigma = *options.shift;
  } else {
    const double bound = eigen_lower_bound(K, M);
    sigma = bound - 1e-3 * std::max(1.0, std::abs(bound));
  }
  Factorization solver;
  int reshifts = 0;
  while (!factor_definite(solver, K, M, sigma)) {
    if (reshifts == 3) {
      std::ostringstream msg;
      msg << "factorization of K - sigma*M is not definite after 3 reshifts (last sigma = " << sigma << ")";
      throw NumericalError(msg.str());
    }
    const double bound = eigen_lower_bound(K, M);
    sigma = std::min(sigma, bound) - std::max(1.0, std::abs(sigma)) * std::pow(2.0, reshifts);
    ++reshifts;
  }

  const auto basis = static_cast<Eigen::Index>(std::clamp<std::size_t>(options.basis, 1, static_cast<std::size_t>(n)));
  Vector x = Vector::Ones(n);
  x /= m_norm(M, x);

  EigenResult result;
  result.shift = sigma;
  Eigen::MatrixXd V(n, basis);
  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    // Basis x, S r, S M v_1, ... with S = (K − σM)⁻¹ and r = Kx − λMx. The
    // residual direction spans the same space as S M x without cancellation.
    V.col(0) = x;
    Eigen::Index size = 1;
    const Vector mx = M * x;
    Vector next = K * x - x.dot(K * x) * mx;
    for (Eigen::Index j = 1; j < basis; ++j) {
      Vector y = solver.solve(next);
      const double before = m_norm(M, y);
      // two passes of M-orthogonal Gram-Schmidt
      for (int pass = 0; pass < 2; ++pass) {
        const Vector my = M * y;
        for (Eigen::Index i = 0; i < size; ++i) y -= V.col(i).dot(my) * V.col(i);
      }
      const double after = m_norm(M, y);
      if (!(after > 1e-10 * before)) break;
      V.col(j) = y / after;
      ++size;
      next = M * V.col(j);
    }
    const auto Q = V.leftCols(size);
    Eigen::MatrixXd H = Q.transpose() * (K * Q);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
    x = Q * ritz.eigenvectors().col(0);
    x /= m_norm(M, x);
    const double lambda = x.dot(K * x);
    const double residual = eigen_residual(K, M, x, lambda);
    if (options.history) *options.history << iter << "," << lambda << "," << residual << "\n";
    result.iterations = iter;
    if (residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  if (x.sum() < 0.0) x = -x;
  result.lambda = x.dot(K * x);
  result.residual = eigen_residual(K, M, x, result.lambda);
  result.vector = std::move(x);
  if (!result.converged && options.require_convergence) {
    std::ostringstream msg;
    msg << "eigensolver did not converge in " << options.max_iter << " iterations (residual " << result.residual
        << ", tol " << options.tol << ")";
    throw NumericalError(msg.str());
  }
  return result;
}

EigenResult smallest_eigenpair(const AssembledForms& forms, const EigenOptions& options) {
  return smallest_eigenpair(forms.stiffness(), forms.M, options);
}

Vector dense_eigenvalues(const SparseMatrix& K, const SparseMatrix& M) {
  check_pencil(K, M);
  const Eigen::MatrixXd k = Eigen::MatrixXd(K);
  const Eigen::MatrixXd m = Eigen::MatrixXd(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("dense generalized eigensolver failed");
  return solver.eigenvalues();
}

}  // namespace qgs
