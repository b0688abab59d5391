#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <vector>

#include "qbe/report.hpp"
#include "qbe/tolerances.hpp"

namespace qbe {

using cd = std::complex<double>;

// Finite-dimensional complex operator in sparse form. Always square here;
// construction coalesces duplicate (row, col) entries and drops magnitudes
// below the zero tolerance.
using ComplexOperator = Eigen::SparseMatrix<cd>;
using Triplet = Eigen::Triplet<cd>;

ComplexOperator make_operator(Eigen::Index dim, const std::vector<Triplet>& entries,
                              double drop = tolerances().eps_zero);
ComplexOperator identity_op(Eigen::Index dim);
ComplexOperator zero_op(Eigen::Index dim);

// Maximum absolute entry; the residual norm used throughout.
double max_abs(const ComplexOperator& A);
double max_abs(const Eigen::MatrixXcd& A);

Eigen::MatrixXcd to_dense(const ComplexOperator& A);
ComplexOperator from_dense(const Eigen::MatrixXcd& A,
                           double drop = tolerances().eps_zero);

// Basic algebra. All results are pruned at the drop tolerance; dimension
// mismatches throw.
ComplexOperator compose(const ComplexOperator& A, const ComplexOperator& B,
                        double drop = tolerances().eps_zero);
ComplexOperator adjoint(const ComplexOperator& A);
ComplexOperator add(const ComplexOperator& A, const ComplexOperator& B,
                    double drop = tolerances().eps_zero);
ComplexOperator subtract(const ComplexOperator& A, const ComplexOperator& B,
                         double drop = tolerances().eps_zero);
ComplexOperator scale(const ComplexOperator& A, cd factor,
                      double drop = tolerances().eps_zero);

// Hermiticity and idempotence within eps_proj, residuals always reported.
PredicateReport is_projection(const ComplexOperator& P,
                              const ToleranceContext& tol = tolerances());

// Positive-semidefinite square root via eigendecomposition. Eigenvalues in
// [-eps_proj, 0) are clamped to zero; anything lower is rejected.
ComplexOperator hermitian_sqrt(const ComplexOperator& A,
                               const ToleranceContext& tol = tolerances());

}  // namespace qbe
