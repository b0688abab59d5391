#pragma once

#include <optional>
#include <vector>

#include "qbe/isometry.hpp"
#include "qbe/operators.hpp"

namespace qbe {

// Nonincreasing projector chains I_n = (Tdag)^n T^n and F_n = T^n (Tdag)^n,
// computed until both repeat. On a finite space the stabilized members are
// the projectors onto the intersections of the I and F ranges.
struct DefectChain {
  std::vector<ComplexOperator> I, F;  // index n = 0..stop_index
  Eigen::Index stop_index = 0;
  ComplexOperator I_inf, F_inf;
};
DefectChain defect_chain(const ComplexOperator& T,
                         const ToleranceContext& tol = tolerances());

// Classification of a power partial isometry into a unitary part, a pure
// isometry part, a pure coisometry part, and truncated shifts of index n
// acting on the ranges of the P_n, with per-slot projectors
// P_{n,l} = (F_{l-1} - F_l)(I_{n-l} - I_{n-l+1}).
struct TruncatedPart {
  Eigen::Index index = 0;  // shift index n (nilpotency degree)
  ComplexOperator P;       // projector onto the whole component
  std::vector<ComplexOperator> slots;  // P_{n,1} .. P_{n,n}
  Eigen::Index rank = 0;
};
struct Decomposition {
  ComplexOperator unitary_proj, isometry_proj, coisometry_proj;
  std::vector<TruncatedPart> truncated;  // ascending index
  Eigen::Index unitary_rank = 0, isometry_rank = 0, coisometry_rank = 0;
  double completeness_residual = 0;
  // Path structure of the unitary block on the computational basis, when the
  // block is axis-aligned and stable there. Cycles mean the unitary part is
  // compatible with ballistic motion; absence means it could not be
  // certified on the working basis, not that it is incompatible.
  std::optional<PathSet> unitary_paths;
  bool unitary_ballistic_compatible = false;
};
Decomposition decompose(const ComplexOperator& T,
                        const ToleranceContext& tol = tolerances());

// Product criterion: for partial isometries W and V, WV is a partial
// isometry iff [V V^dag, W^dag W] = 0. Both routes are evaluated and must
// agree; the verdict reports the criterion, the residuals both routes.
PredicateReport hw_product_lemma(const ComplexOperator& W, const ComplexOperator& V,
                                 const ToleranceContext& tol = tolerances());

// The 2x2 contraction with single entry 2a at (row 1, col 0). For
// 0 < |a| < 1/2 it is a contraction but not a partial isometry; a = 0
// degenerates to the zero operator, which is one.
ComplexOperator contraction_u1(cd a);

// Tower member of dimension 2^n built by U_n = M(U_{n-1}) with
// M(A) = [[A, (1 - A A^dag)^{1/2}], [0, 0]]. Verified before return:
// U_n^k is a partial isometry for k < n, fails at k = n, and U_n^{n+1} = 0.
ComplexOperator hw_tower(int n, cd a, const ToleranceContext& tol = tolerances());

// Block-diagonal direct sum of hw_tower(n) over the 1 positions of s
// (1-based n, ascending). The power-k partial-isometry pattern of the sum is
// the AND over included blocks.
ComplexOperator hw_direct_sum(const std::vector<int>& s, cd a,
                              const ToleranceContext& tol = tolerances());

}  // namespace qbe
