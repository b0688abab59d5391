#pragma once

#include <map>

#include "qbe/operators.hpp"
#include "qbe/report.hpp"

namespace qbe {

// T is a partial isometry iff T^dag T and T T^dag are both projections.
// On failure the witness names either a pair of basis states with
// non-orthogonal images (a merge) or a state whose image norm is fractional.
PredicateReport is_partial_isometry(const ComplexOperator& T,
                                    const ToleranceContext& tol = tolerances());

// Orthogonality preservation in both directions is equivalent to
// [T^dag T, T T^dag] = 0; the residual is the commutator max-entry norm.
PredicateReport is_orthogonality_preserving(
    const ComplexOperator& T, const ToleranceContext& tol = tolerances());

// Joint eigenbasis of T^dag T and T T^dag: diagonalize the first, group
// eigenvalues within eps_eig, diagonalize the second inside each group.
// Deterministic ordering and phase fixing; the post-check verifies both Gram
// operators are diagonal in the returned basis.
Basis op_basis(const ComplexOperator& T, const ToleranceContext& tol = tolerances());

// The same construction without the orthogonality-preservation precondition,
// returning the post-check residual instead of throwing. Lets the Theorem 1
// equivalence suites confirm that the construction fails exactly when the
// Gram operators do not commute.
std::pair<Basis, double> op_basis_candidate(const ComplexOperator& T,
                                            const ToleranceContext& tol = tolerances());

// Stability of T and T^dag on a basis: every basis vector maps to a scalar
// multiple of a basis vector or to zero. When true, the successor maps give
// the image index and amplitude for each non-annihilated vector.
struct StabilityResult {
  PredicateReport report;
  std::map<Eigen::Index, std::pair<Eigen::Index, cd>> successors;    // T
  std::map<Eigen::Index, std::pair<Eigen::Index, cd>> predecessors;  // Tdag
};
StabilityResult is_stable_on_basis(const ComplexOperator& T, const Basis& B,
                                   const ToleranceContext& tol = tolerances());

// Follows successors into node-disjoint chains and cycles. Preconditions:
// partial isometry and stability on B. Distinctness violations (two states
// sharing an image) and non-unimodular amplitudes are distinct error classes.
struct extraction_error : validation_error {
  enum class Kind { precondition, distinctness, norm, closure };
  Kind kind;
  extraction_error(Kind k, const std::string& msg)
      : validation_error(msg), kind(k) {}
};
PathSet extract_paths(const ComplexOperator& T, const Basis& B,
                      const ToleranceContext& tol = tolerances());

// Partial isometry + orthogonality preserving + stable + extractable.
PredicateReport is_distinct_path_generating(
    const ComplexOperator& T, const Basis& B,
    const ToleranceContext& tol = tolerances());

// All powers up to n_max have projection Gram operators I_n = (Tdag)^n T^n
// and F_n = T^n (Tdag)^n. Stops early once both chains stabilize, which on a
// finite space settles every larger power.
PredicateReport is_power_partial_isometry(const ComplexOperator& T,
                                          Eigen::Index n_max,
                                          const ToleranceContext& tol = tolerances());
inline PredicateReport is_power_partial_isometry(
    const ComplexOperator& T, const ToleranceContext& tol = tolerances()) {
  return is_power_partial_isometry(T, T.rows(), tol);
}

// For partial isometries, complete orthogonality preservation coincides with
// the power-partial-isometry property at n_max = dim. Precondition enforced.
PredicateReport is_completely_orthogonality_preserving(
    const ComplexOperator& T, const ToleranceContext& tol = tolerances());

// Direct check that <T^n b_i | T^n b_j> = 0 for all i != j, n <= n_max.
PredicateReport powers_preserve_orthogonality(
    const ComplexOperator& T, const Basis& B, Eigen::Index n_max,
    const ToleranceContext& tol = tolerances());

}  // namespace qbe
