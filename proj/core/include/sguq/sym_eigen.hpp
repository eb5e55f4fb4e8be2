#pragma once

#include <Eigen/Dense>

namespace sguq {

// Eigenvalues in descending order; vectors.col(i) pairs with values[i].
struct SymEigenResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Dense symmetric eigendecomposition by cyclic Jacobi rotations.
//
// The matrices in this codebase are small (N <= 64), so Jacobi is chosen
// over faster tridiagonal schemes: it is simple enough to audit, accurate
// to machine precision, and bit-deterministic across runs (fixed rotation
// order, no pivot heuristics). The input is symmetrized as (A + A^T)/2;
// callers that must reject asymmetric input do so before calling.
//
// The rotation budget is 100 * n^2; a matrix that has not converged by
// then raises NumericalError.
SymEigenResult sym_eigen(const Eigen::MatrixXd& a, bool with_vectors = true);

// Values-only convenience, same ordering.
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a);

}  // namespace sguq
