#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbe/dynamics.hpp"
#include "qbe/lattice.hpp"
#include "qbe/operators.hpp"

namespace qbe {

// One machine instruction: in head state l reading bit s at the current
// site, switch to head state f, transform the departed site's spin by v,
// and move one site right or left.
struct Rule {
  int l = 0;
  int s = 0;
  int f = 0;
  enum class Direction { right, left } d = Direction::right;
  Eigen::Matrix2cd v = Eigen::Matrix2cd::Identity();
};

struct RuleTable {
  int n_head = 1;
  std::vector<Rule> rules;

  void validate(const ToleranceContext& tol = tolerances()) const;
};

// T = sum over rules of |f><l| (x) sum_j v_j P_{s,j} U^{+-1} P_j.
// The head-state factor is the rank-one map |f><l|; the site action applies
// at the departure site, after the bit-s projection there.
ComplexOperator build_step_operator(const RuleTable& rules, const LatticeShape& shape);

// Per-rule terms of the same sum, for the Gram cross-term diagnostics and
// the term-subset experiments.
std::vector<ComplexOperator> build_step_terms(const RuleTable& rules,
                                              const LatticeShape& shape);

// Head-position action of a single-head, identity-site-action machine
// within one frozen spin configuration (an L x L block of the full T).
ComplexOperator spin_sector_step_operator(const RuleTable& rules,
                                          std::uint64_t sigma,
                                          const LatticeShape& shape);

// Structural sufficient condition on the rule table alone: whenever two
// distinct rules share a target head state they must move the same way and
// have cross-orthogonal site actions <s|v_ls^dag v_mt|t> = 0.
struct ConditionXReport {
  bool verdict = true;
  std::vector<std::pair<std::size_t, std::size_t>> violating_pairs;  // rule indices
  std::string detail;
};
ConditionXReport condition_x(const RuleTable& rules);

// I_1/F_1 projection residuals together with the cross-term sums whose
// vanishing makes them projections: sum over pairs of distinct rules of
// T_ls^dag F_(l's')1 T_mt for I_1, and of F_ls F_(l's') for F_1.
struct GramReport {
  PredicateReport I1, F1;
  double I_cross_norm = 0;
  double F_cross_norm = 0;
};
GramReport gram_conditions(const std::vector<ComplexOperator>& terms,
                           const ToleranceContext& tol = tolerances());

// True iff every site action is the identity or the spin flip up to a
// global phase.
bool is_deterministic(const RuleTable& rules,
                      const ToleranceContext& tol = tolerances());

enum class BallisticVerdict { ballistic, partially_ballistic, not_ballistic, undecided };
std::string to_string(BallisticVerdict v);

struct MachineVerdict {
  PredicateReport partial_isometry;
  PredicateReport orthogonality_preserving;
  ConditionXReport condition_x;
  bool deterministic = false;
  std::optional<PredicateReport> stability;
  BallisticVerdict verdict = BallisticVerdict::undecided;
  std::string evidence;
};

// Decision procedure: matrix checks (partial isometry, orthogonality
// preservation) decide negatives outright; deterministic machines are
// stable on the computational basis by rule inspection, so positives are
// definite there. Nondeterministic machines are checked against a supplied
// candidate basis when given; otherwise a bounded norm-profile scan over
// computational starts can produce partially_ballistic evidence but never a
// definite negative.
MachineVerdict decide_ballistic(const RuleTable& rules, const LatticeShape& shape,
                                const ToleranceContext& tol = tolerances(),
                                const Basis* supplied_basis = nullptr);

// ||T^n psi0|| for n = 0..n_steps; nonincreasing for any contraction.
std::vector<double> iterate_norm_profile(const ComplexOperator& T,
                                         const Eigen::VectorXcd& psi0, int n_steps);

// The worked example machines.
enum class ExampleMachine { zero_motion, bit_rotation, reflecting_walk, branching_walk, erasure };
RuleTable zero_motion_machine();
RuleTable bit_rotation_machine(const Eigen::Matrix2cd& v);
RuleTable reflecting_walk_machine(const Eigen::Matrix2cd& v00);
RuleTable branching_walk_machine(const Eigen::Matrix2cd& v);
RuleTable erasure_machine();
RuleTable example_machine(ExampleMachine name,
                          const std::optional<Eigen::Matrix2cd>& v = std::nullopt);
std::optional<ExampleMachine> example_machine_by_name(const std::string& name);
std::vector<std::string> example_machine_names();

// Independent assembly of the branching walk from its five head-raise
// prefixed terms (products of u powers, head projectors, site actions and
// shifts), used to cross-check the rule-table build.
std::vector<ComplexOperator> branching_walk_terms(const Eigen::Matrix2cd& v,
                                                  const LatticeShape& shape);

// Stable family of the bit-rotation machine for one anchor M: the marker
// v|1> sits at site M-1 (no marker for M = 0), rotated zeros fill up to the
// head, and every right terminator position N (or none) is included, with
// computational zero tails. Post-checked stable.
Basis bit_rotation_stable_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                int M, const ToleranceContext& tol = tolerances());

// Complete orthonormal change of basis assembled from all anchors and all
// computational tails; the bit-rotation machine is stable on it.
Basis bit_rotation_complete_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                  const ToleranceContext& tol = tolerances());

// Stable family of the branching walk over the segment [1 at M, zeros,
// 1 at L_end+1]: the main chain of n+4 states (through the entangled split
// state) plus the 3-state sibling chain, n = L_end - M zeros in between.
Basis branching_walk_stable_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                  int M, int L_end,
                                  const ToleranceContext& tol = tolerances());

}  // namespace qbe
