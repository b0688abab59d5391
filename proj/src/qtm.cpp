#include "qbe/qtm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "qbe/errors.hpp"
#include "qbe/isometry.hpp"

namespace qbe {
namespace {

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

Eigen::Matrix2cd fourier_2x2() {
  Eigen::Matrix2cd f;
  const double r = 1.0 / std::sqrt(2.0);
  f << r, r, r, -r;
  return f;
}

void require_spin_lattice(const LatticeShape& shape) {
  shape.validate();
  if (!shape.spins)
    throw validation_error("machine step operators need the spin sector "
                           "(LatticeShape.spins = true)");
}

std::uint64_t with_bit(std::uint64_t sigma, int j, int t) {
  return (sigma & ~(std::uint64_t(1) << j)) | (std::uint64_t(t) << j);
}

// Departure site j and arrival site of a move, or -1 when the open boundary
// swallows the walker.
int arrival_site(int j, Rule::Direction d, const LatticeShape& shape) {
  const int L = shape.length;
  if (d == Rule::Direction::right) {
    if (j + 1 < L) return j + 1;
    return shape.topology == Topology::cyclic ? 0 : -1;
  }
  if (j > 0) return j - 1;
  return shape.topology == Topology::cyclic ? L - 1 : -1;
}

}  // namespace

void RuleTable::validate(const ToleranceContext& tol) const {
  if (n_head < 1)
    throw validation_error("rule table needs at least one head state");
  if (rules.empty()) throw validation_error("rule table has no rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    if (r.l < 0 || r.l >= n_head || r.f < 0 || r.f >= n_head)
      throw validation_error("rule " + std::to_string(i) + " uses head states " +
                             std::to_string(r.l) + " -> " + std::to_string(r.f) +
                             " outside 0.." + std::to_string(n_head - 1));
    if (r.s != 0 && r.s != 1)
      throw validation_error("rule " + std::to_string(i) + " reads symbol " +
                             std::to_string(r.s) + ", only 0 and 1 exist");
    const double unit = (r.v.adjoint() * r.v - Eigen::Matrix2cd::Identity())
                            .cwiseAbs()
                            .maxCoeff();
    if (unit > 100 * tol.eps_zero)
      throw validation_error("rule " + std::to_string(i) +
                             " has a non-unitary site action (residual " +
                             std::to_string(unit) + ")");
    for (std::size_t k = 0; k < i; ++k)
      if (rules[k].l == r.l && rules[k].s == r.s)
        throw validation_error("rules " + std::to_string(k) + " and " +
                               std::to_string(i) + " both fire on head state " +
                               std::to_string(r.l) + " reading " +
                               std::to_string(r.s));
  }
}

std::vector<ComplexOperator> build_step_terms(const RuleTable& rules,
                                              const LatticeShape& shape) {
  require_spin_lattice(shape);
  rules.validate();
  if (rules.n_head > shape.n_head)
    throw validation_error("rule table uses " + std::to_string(rules.n_head) +
                           " head states, the lattice has " +
                           std::to_string(shape.n_head));
  const Eigen::Index dim = shape.dimension();
  const std::uint64_t spin_count = std::uint64_t(1) << shape.length;

  std::vector<ComplexOperator> terms;
  for (const Rule& r : rules.rules) {
    std::vector<Triplet> entries;
    for (int j = 0; j < shape.length; ++j) {
      const int jp = arrival_site(j, r.d, shape);
      if (jp < 0) continue;
      for (std::uint64_t sigma = 0; sigma < spin_count; ++sigma) {
        if (static_cast<int>((sigma >> j) & 1) != r.s) continue;
        const Eigen::Index col = encode(r.l, j, sigma, shape);
        for (int t = 0; t < 2; ++t) {
          const cd amp = r.v(t, r.s);
          if (std::abs(amp) <= tolerances().eps_zero) continue;
          entries.emplace_back(encode(r.f, jp, with_bit(sigma, j, t), shape),
                               col, amp);
        }
      }
    }
    terms.push_back(make_operator(dim, entries, 0.0));
  }
  return terms;
}

ComplexOperator build_step_operator(const RuleTable& rules, const LatticeShape& shape) {
  std::vector<ComplexOperator> terms = build_step_terms(rules, shape);
  ComplexOperator T = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) T = add(T, terms[i]);
  return T;
}

ComplexOperator spin_sector_step_operator(const RuleTable& rules,
                                          std::uint64_t sigma,
                                          const LatticeShape& shape) {
  shape.validate();
  rules.validate();
  if (rules.n_head != 1)
    throw validation_error("a frozen-spin sector needs a single head state, "
                           "the table has " + std::to_string(rules.n_head));
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    const double dev = (rules.rules[i].v - Eigen::Matrix2cd::Identity())
                           .cwiseAbs()
                           .maxCoeff();
    if (dev > 100 * tolerances().eps_zero)
      throw validation_error("rule " + std::to_string(i) + " rewrites the site, "
                             "so spin configurations are not invariant");
  }
  if (shape.length < 64 && sigma >> shape.length)
    throw validation_error("spin configuration has bits beyond the lattice");

  std::vector<Triplet> entries;
  for (const Rule& r : rules.rules)
    for (int j = 0; j < shape.length; ++j) {
      if (static_cast<int>((sigma >> j) & 1) != r.s) continue;
      const int jp = arrival_site(j, r.d, shape);
      if (jp < 0) continue;
      entries.emplace_back(jp, j, cd(1, 0));
    }
  return make_operator(shape.length, entries, 0.0);
}

ConditionXReport condition_x(const RuleTable& rules) {
  rules.validate();
  ConditionXReport rep;
  std::ostringstream detail;
  for (std::size_t i = 0; i < rules.rules.size(); ++i)
    for (std::size_t k = i + 1; k < rules.rules.size(); ++k) {
      const Rule& a = rules.rules[i];
      const Rule& b = rules.rules[k];
      if (a.f != b.f) continue;
      if (a.d != b.d) {
        rep.violating_pairs.emplace_back(i, k);
        detail << "rules " << i << " and " << k << " reach head state " << a.f
               << " moving opposite ways\n";
        continue;
      }
      const cd overlap = (a.v.adjoint() * b.v)(a.s, b.s);
      if (std::abs(overlap) > 100 * tolerances().eps_zero) {
        rep.violating_pairs.emplace_back(i, k);
        detail << "rules " << i << " and " << k << " reach head state " << a.f
               << " with overlapping site actions (|<" << a.s << "|va^dag vb|"
               << b.s << ">| = " << std::abs(overlap) << ")\n";
      }
    }
  rep.verdict = rep.violating_pairs.empty();
  if (rep.verdict) detail << "no colliding rule pairs\n";
  rep.detail = detail.str();
  return rep;
}

GramReport gram_conditions(const std::vector<ComplexOperator>& terms,
                           const ToleranceContext& tol) {
  if (terms.empty()) throw validation_error("no step terms supplied");
  const Eigen::Index dim = terms.front().rows();
  for (const auto& t : terms)
    if (t.rows() != dim || t.cols() != dim)
      throw validation_error("step terms have mismatched dimensions");

  ComplexOperator T = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) T = add(T, terms[i]);
  const ComplexOperator Td = adjoint(T);

  GramReport rep;
  rep.I1 = is_projection(compose(Td, T), tol);
  rep.F1 = is_projection(compose(T, Td), tol);

  std::vector<ComplexOperator> F;
  F.reserve(terms.size());
  ComplexOperator S = zero_op(dim);
  for (const auto& t : terms) {
    F.push_back(compose(t, adjoint(t)));
    S = add(S, F.back());
  }

  // I-side cross sum: over ordered rule pairs (a, b), the middle range
  // projector runs over every rule other than a and b.
  ComplexOperator I_cross = zero_op(dim);
  for (std::size_t a = 0; a < terms.size(); ++a)
    I_cross = add(I_cross, compose(adjoint(terms[a]),
                                   compose(subtract(S, F[a]), T)));
  for (std::size_t b = 0; b < terms.size(); ++b)
    I_cross = subtract(I_cross, compose(subtract(Td, adjoint(terms[b])),
                                        compose(F[b], terms[b])));
  rep.I_cross_norm = max_abs(I_cross);

  // F-side cross sum: sum over distinct pairs of the per-rule range
  // projector products, S^2 - sum of squares.
  ComplexOperator F_cross = compose(S, S);
  for (const auto& f : F) F_cross = subtract(F_cross, compose(f, f));
  rep.F_cross_norm = max_abs(F_cross);
  return rep;
}

bool is_deterministic(const RuleTable& rules, const ToleranceContext& tol) {
  rules.validate();
  for (const Rule& r : rules.rules) {
    const auto& v = r.v;
    const double off = std::max(std::abs(v(0, 1)), std::abs(v(1, 0)));
    const double diag = std::max(std::abs(v(0, 0)), std::abs(v(1, 1)));
    const bool phase_identity =
        off <= 100 * tol.eps_zero && std::abs(v(0, 0) - v(1, 1)) <= 100 * tol.eps_zero;
    const bool phase_flip =
        diag <= 100 * tol.eps_zero && std::abs(v(0, 1) - v(1, 0)) <= 100 * tol.eps_zero;
    if (!phase_identity && !phase_flip) return false;
  }
  return true;
}

std::string to_string(BallisticVerdict v) {
  switch (v) {
    case BallisticVerdict::ballistic: return "ballistic";
    case BallisticVerdict::partially_ballistic: return "partially_ballistic";
    case BallisticVerdict::not_ballistic: return "not_ballistic";
    case BallisticVerdict::undecided: return "undecided";
  }
  return "?";
}

std::vector<double> iterate_norm_profile(const ComplexOperator& T,
                                         const Eigen::VectorXcd& psi0, int n_steps) {
  if (psi0.size() != T.rows())
    throw validation_error("state dimension does not match the operator");
  if (n_steps < 0) throw validation_error("step count must be nonnegative");
  std::vector<double> norms;
  norms.reserve(n_steps + 1);
  Eigen::VectorXcd psi = psi0;
  norms.push_back(psi.norm());
  for (int n = 0; n < n_steps; ++n) {
    psi = T * psi;
    norms.push_back(psi.norm());
  }
  return norms;
}

MachineVerdict decide_ballistic(const RuleTable& rules, const LatticeShape& shape,
                                const ToleranceContext& tol,
                                const Basis* supplied_basis) {
  MachineVerdict mv;
  const ComplexOperator T = build_step_operator(rules, shape);
  const Eigen::Index dim = shape.dimension();

  mv.condition_x = condition_x(rules);
  mv.partial_isometry = is_partial_isometry(T, tol);
  mv.orthogonality_preserving = is_orthogonality_preserving(T, tol);
  mv.deterministic = is_deterministic(rules, tol);

  std::ostringstream ev;
  if (!mv.partial_isometry.verdict) {
    mv.verdict = BallisticVerdict::not_ballistic;
    ev << "the step operator is not a partial isometry";
    if (mv.partial_isometry.witness) ev << ": " << *mv.partial_isometry.witness;
    mv.evidence = ev.str();
    return mv;
  }
  if (!mv.orthogonality_preserving.verdict) {
    mv.verdict = BallisticVerdict::not_ballistic;
    ev << "iteration does not preserve orthogonality";
    if (mv.orthogonality_preserving.witness)
      ev << ": " << *mv.orthogonality_preserving.witness;
    mv.evidence = ev.str();
    return mv;
  }

  // Actual positives need a stable basis. The computational basis is always
  // worth trying; it is what rule inspection certifies for deterministic
  // tables, and it is cheap at any dimension.
  Basis computational;
  computational.dim = dim;
  StabilityResult comp = is_stable_on_basis(T, computational, tol);
  if (comp.report.verdict) {
    mv.stability = comp.report;
    PredicateReport dpg = is_distinct_path_generating(T, computational, tol);
    if (dpg.verdict) {
      mv.verdict = BallisticVerdict::ballistic;
      ev << "stable on the computational basis"
         << (mv.deterministic ? " (deterministic rule table)" : "")
         << "; distinct path generation certified with "
         << dpg.residuals.at("chain_count") << " chains";
      mv.evidence = ev.str();
      return mv;
    }
    mv.verdict = BallisticVerdict::undecided;
    ev << "stable on the computational basis but path extraction failed";
    if (dpg.witness) ev << ": " << *dpg.witness;
    mv.evidence = ev.str();
    return mv;
  }

  if (supplied_basis) {
    StabilityResult sup = is_stable_on_basis(T, *supplied_basis, tol);
    mv.stability = sup.report;
    if (sup.report.verdict) {
      PredicateReport dpg = is_distinct_path_generating(T, *supplied_basis, tol);
      if (dpg.verdict) {
        if (supplied_basis->complete()) {
          mv.verdict = BallisticVerdict::ballistic;
          ev << "stable on the supplied complete basis; distinct path "
             << "generation certified";
        } else {
          mv.verdict = BallisticVerdict::partially_ballistic;
          ev << "stable on the supplied family of "
             << supplied_basis->count() << " states (of " << dim
             << "); motion is ballistic on that subspace";
        }
        mv.evidence = ev.str();
        return mv;
      }
      mv.verdict = BallisticVerdict::undecided;
      ev << "supplied family is stable but path extraction failed";
      if (dpg.witness) ev << ": " << *dpg.witness;
      mv.evidence = ev.str();
      return mv;
    }
    mv.verdict = BallisticVerdict::undecided;
    ev << "supplied family is not stable";
    if (sup.report.witness) ev << ": " << *sup.report.witness;
    mv.evidence = ev.str();
    return mv;
  }
  mv.stability = comp.report;

  // No candidate basis. Scan norm profiles of computational starts: a
  // profile value strictly between 0 and 1 witnesses amplitude that died
  // without coming back, i.e. motion that is ballistic on part of the state
  // only. A scan that stays clean proves nothing either way.
  if (dim > 32768) {
    mv.verdict = BallisticVerdict::undecided;
    ev << "not stable on the computational basis and the state space ("
       << dim << ") is too large for the norm-profile scan";
    mv.evidence = ev.str();
    return mv;
  }
  const int n_steps = 2 * shape.length + 4;
  Eigen::Index witness_state = -1;
  int witness_step = 0;
  double witness_value = 0;
  for (Eigen::Index start = 0; start < dim && witness_state < 0; ++start) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi(start) = 1;
    std::vector<double> profile = iterate_norm_profile(T, psi, n_steps);
    for (int n = 1; n <= n_steps; ++n) {
      if (profile[n] > profile[n - 1] + 1e-9)
        throw internal_error("norm profile increased under a partial isometry");
      if (profile[n] > 1e-6 && profile[n] < 1.0 - 1e-6) {
        witness_state = start;
        witness_step = n;
        witness_value = profile[n];
        break;
      }
    }
  }
  if (witness_state >= 0) {
    mv.verdict = BallisticVerdict::partially_ballistic;
    ev << "norm of the start state " << basis_label(witness_state, shape)
       << " drops to " << witness_value << " after " << witness_step
       << " steps: part of the amplitude propagates, part is reflected or "
       << "absorbed";
  } else {
    mv.verdict = BallisticVerdict::undecided;
    ev << "every computational start keeps norm 0 or 1 over " << n_steps
       << " steps; no stable basis was found and nothing rules one out";
  }
  mv.evidence = ev.str();
  return mv;
}

RuleTable zero_motion_machine() {
  RuleTable t;
  t.n_head = 1;
  t.rules = {{0, 0, 0, Rule::Direction::right, Eigen::Matrix2cd::Identity()}};
  return t;
}

RuleTable bit_rotation_machine(const Eigen::Matrix2cd& v) {
  RuleTable t;
  t.n_head = 1;
  t.rules = {{0, 0, 0, Rule::Direction::right, v}};
  return t;
}

RuleTable reflecting_walk_machine(const Eigen::Matrix2cd& v00) {
  RuleTable t;
  t.n_head = 2;
  t.rules = {{0, 0, 0, Rule::Direction::right, v00},
             {0, 1, 1, Rule::Direction::left, Eigen::Matrix2cd::Identity()},
             {1, 1, 1, Rule::Direction::left, pauli_x()}};
  return t;
}

RuleTable branching_walk_machine(const Eigen::Matrix2cd& v) {
  RuleTable t;
  t.n_head = 5;
  t.rules = {{0, 0, 0, Rule::Direction::right, Eigen::Matrix2cd::Identity()},
             {0, 1, 1, Rule::Direction::left, v},
             {1, 0, 2, Rule::Direction::right, Eigen::Matrix2cd::Identity()},
             {2, 0, 3, Rule::Direction::right, Eigen::Matrix2cd::Identity()},
             {2, 1, 4, Rule::Direction::right, Eigen::Matrix2cd::Identity()}};
  return t;
}

RuleTable erasure_machine() {
  RuleTable t;
  t.n_head = 1;
  t.rules = {{0, 0, 0, Rule::Direction::right, Eigen::Matrix2cd::Identity()},
             {0, 1, 0, Rule::Direction::right, pauli_x()}};
  return t;
}

RuleTable example_machine(ExampleMachine name,
                          const std::optional<Eigen::Matrix2cd>& v) {
  switch (name) {
    case ExampleMachine::zero_motion:
    case ExampleMachine::erasure:
      if (v)
        throw validation_error("this machine takes no site action parameter");
      return name == ExampleMachine::zero_motion ? zero_motion_machine()
                                                 : erasure_machine();
    case ExampleMachine::bit_rotation:
      return bit_rotation_machine(v.value_or(fourier_2x2()));
    case ExampleMachine::reflecting_walk:
      return reflecting_walk_machine(v.value_or(fourier_2x2()));
    case ExampleMachine::branching_walk:
      return branching_walk_machine(v.value_or(fourier_2x2()));
  }
  throw validation_error("unknown machine");
}

std::optional<ExampleMachine> example_machine_by_name(const std::string& name) {
  if (name == "zero_motion") return ExampleMachine::zero_motion;
  if (name == "bit_rotation") return ExampleMachine::bit_rotation;
  if (name == "reflecting_walk") return ExampleMachine::reflecting_walk;
  if (name == "branching_walk") return ExampleMachine::branching_walk;
  if (name == "erasure") return ExampleMachine::erasure;
  return std::nullopt;
}

std::vector<std::string> example_machine_names() {
  return {"zero_motion", "bit_rotation", "reflecting_walk", "branching_walk",
          "erasure"};
}

std::vector<ComplexOperator> branching_walk_terms(const Eigen::Matrix2cd& v,
                                                  const LatticeShape& shape) {
  require_spin_lattice(shape);
  if (shape.n_head < 5)
    throw validation_error("the branching walk needs 5 head states");
  const RuleTable table = branching_walk_machine(v);
  const ComplexOperator u = head_raise(shape);
  const ComplexOperator Q0 = head_state_projector(0, shape);
  const ComplexOperator right = head_shift(shape);
  const ComplexOperator left = adjoint(right);

  std::vector<ComplexOperator> terms;
  for (const Rule& r : table.rules) {
    // Head factor |f><l| as raise^f Q0 lower^l.
    ComplexOperator head = Q0;
    for (int k = 0; k < r.l; ++k) head = compose(head, adjoint(u));
    for (int k = 0; k < r.f; ++k) head = compose(u, head);

    ComplexOperator spatial = zero_op(shape.dimension());
    const ComplexOperator& mover = r.d == Rule::Direction::right ? right : left;
    for (int j = 0; j < shape.length; ++j) {
      ComplexOperator one =
          compose(site_unitary(r.v, j, shape),
                  compose(spin_projector(r.s, j, shape),
                          compose(mover, head_pos_projector(j, shape))));
      spatial = add(spatial, one);
    }
    terms.push_back(compose(head, spatial));
  }
  return terms;
}

namespace {

// Product-state column: computational bits from sigma everywhere except the
// listed superposed sites, which carry explicit 2-vectors.
Eigen::VectorXcd product_column(
    const LatticeShape& shape, int head, int site, std::uint64_t sigma,
    const std::vector<std::pair<int, Eigen::Vector2cd>>& factors) {
  std::vector<std::pair<std::uint64_t, cd>> amps = {{sigma, cd(1, 0)}};
  for (const auto& [j, w] : factors) {
    std::vector<std::pair<std::uint64_t, cd>> next;
    for (const auto& [s, a] : amps)
      for (int t = 0; t < 2; ++t)
        if (std::abs(w(t)) > 0) next.emplace_back(with_bit(s, j, t), a * w(t));
    amps = std::move(next);
  }
  Eigen::VectorXcd col = Eigen::VectorXcd::Zero(shape.dimension());
  for (const auto& [s, a] : amps) col(encode(head, site, s, shape)) += a;
  return col;
}

void post_check_stable(const RuleTable& table, const LatticeShape& shape,
                       const Basis& basis, const ToleranceContext& tol,
                       const char* what) {
  basis.validate(tol);
  const ComplexOperator T = build_step_operator(table, shape);
  StabilityResult st = is_stable_on_basis(T, basis, tol);
  if (!st.report.verdict)
    throw internal_error(std::string(what) + " family failed its stability "
                         "post-check" +
                         (st.report.witness ? ": " + *st.report.witness : ""));
}

}  // namespace

Basis bit_rotation_stable_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                int M, const ToleranceContext& tol) {
  require_spin_lattice(shape);
  if (shape.n_head != 1)
    throw validation_error("the bit rotation machine has one head state");
  if (shape.topology != Topology::open)
    throw validation_error("the rotated-zone tiling needs the open topology");
  const int L = shape.length;
  if (M < 0 || M > L - 1)
    throw validation_error("anchor must lie in 0.." + std::to_string(L - 1));
  if (shape.dimension() > 32768)
    throw validation_error("family construction stores dense columns; "
                           "dimension " + std::to_string(shape.dimension()) +
                           " exceeds 32768");

  const Eigen::Vector2cd v0 = v.col(0), v1 = v.col(1);
  std::vector<Eigen::VectorXcd> cols;
  for (int j = M; j < L; ++j) {
    const std::uint64_t left_count = M >= 1 ? (std::uint64_t(1) << (M - 1)) : 1;
    const std::uint64_t right_count = std::uint64_t(1) << (L - j);
    for (std::uint64_t lp = 0; lp < left_count; ++lp)
      for (std::uint64_t rp = 0; rp < right_count; ++rp) {
        // Sites 0..M-2 carry lp, the marker v|1> sits at M-1, rotated
        // zeros fill [M, j-1], sites j..L-1 carry rp.
        std::uint64_t sigma = lp | (rp << j);
        std::vector<std::pair<int, Eigen::Vector2cd>> factors;
        if (M >= 1) factors.emplace_back(M - 1, v1);
        for (int k = M; k < j; ++k) factors.emplace_back(k, v0);
        cols.push_back(product_column(shape, 0, j, sigma, factors));
      }
  }

  Basis b;
  b.dim = shape.dimension();
  b.vectors.emplace(b.dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) b.vectors->col(c) = cols[c];
  post_check_stable(bit_rotation_machine(v), shape, b, tol, "bit rotation");
  return b;
}

Basis bit_rotation_complete_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                  const ToleranceContext& tol) {
  require_spin_lattice(shape);
  if (shape.n_head != 1)
    throw validation_error("the bit rotation machine has one head state");
  if (shape.topology != Topology::open)
    throw validation_error("the rotated-zone tiling needs the open topology");
  if (shape.length > 8)
    throw validation_error("complete basis construction is dense; length " +
                           std::to_string(shape.length) + " exceeds 8");
  const int L = shape.length;

  const Eigen::Vector2cd v0 = v.col(0), v1 = v.col(1);
  Basis b;
  b.dim = shape.dimension();
  b.vectors.emplace(b.dim, b.dim);
  Eigen::Index c = 0;
  for (int j = 0; j < L; ++j)
    for (int M = 0; M <= j; ++M) {
      const std::uint64_t left_count = M >= 1 ? (std::uint64_t(1) << (M - 1)) : 1;
      const std::uint64_t right_count = std::uint64_t(1) << (L - j);
      for (std::uint64_t lp = 0; lp < left_count; ++lp)
        for (std::uint64_t rp = 0; rp < right_count; ++rp) {
          std::uint64_t sigma = lp | (rp << j);
          std::vector<std::pair<int, Eigen::Vector2cd>> factors;
          if (M >= 1) factors.emplace_back(M - 1, v1);
          for (int k = M; k < j; ++k) factors.emplace_back(k, v0);
          b.vectors->col(c++) = product_column(shape, 0, j, sigma, factors);
        }
    }
  if (c != b.dim)
    throw internal_error("tiling produced " + std::to_string(c) + " columns for "
                         "dimension " + std::to_string(b.dim));
  post_check_stable(bit_rotation_machine(v), shape, b, tol, "bit rotation");
  return b;
}

Basis branching_walk_stable_basis(const Eigen::Matrix2cd& v, const LatticeShape& shape,
                                  int M, int L_end, const ToleranceContext& tol) {
  require_spin_lattice(shape);
  if (shape.n_head < 5)
    throw validation_error("the branching walk needs 5 head states");
  if (M < 0 || L_end < M + 1 || L_end + 2 > shape.length - 1)
    throw validation_error("segment [" + std::to_string(M) + ", " +
                           std::to_string(L_end + 1) + "] needs M >= 0, at "
                           "least one zero between the markers, and two free "
                           "sites to the right");
  const int n = L_end - M;

  // Marked segment: 1 at M, zeros at M+1..L_end, 1 at L_end+1, zeros
  // elsewhere.
  const std::uint64_t sigma =
      (std::uint64_t(1) << M) | (std::uint64_t(1) << (L_end + 1));
  const Eigen::Vector2cd v0 = v.col(0), v1 = v.col(1);

  std::vector<Eigen::VectorXcd> cols;
  // Head-0 sweep across the zeros up to the right marker.
  for (int k = 0; k <= n; ++k)
    cols.push_back(product_column(shape, 0, M + 1 + k, sigma, {}));
  // Bounce off the right marker, rotating it, then step back over it.
  const std::uint64_t cleared = with_bit(sigma, L_end + 1, 0);
  cols.push_back(product_column(shape, 1, L_end, cleared, {{L_end + 1, v1}}));
  cols.push_back(product_column(shape, 2, L_end + 1, cleared, {{L_end + 1, v1}}));
  // The split state: reading the rotated marker branches the head.
  {
    Eigen::VectorXcd split = Eigen::VectorXcd::Zero(shape.dimension());
    split(encode(3, L_end + 2, cleared, shape)) = v1(0);
    split(encode(4, L_end + 2, with_bit(sigma, L_end + 1, 1), shape)) = v1(1);
    cols.push_back(split);
  }
  // Sibling chain: same geometry over the orthogonal marker state v|0>.
  cols.push_back(product_column(shape, 1, L_end, cleared, {{L_end + 1, v0}}));
  cols.push_back(product_column(shape, 2, L_end + 1, cleared, {{L_end + 1, v0}}));
  {
    Eigen::VectorXcd split = Eigen::VectorXcd::Zero(shape.dimension());
    split(encode(3, L_end + 2, cleared, shape)) = v0(0);
    split(encode(4, L_end + 2, with_bit(sigma, L_end + 1, 1), shape)) = v0(1);
    cols.push_back(split);
  }

  Basis b;
  b.dim = shape.dimension();
  b.vectors.emplace(b.dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) b.vectors->col(c) = cols[c];
  post_check_stable(branching_walk_machine(v), shape, b, tol, "branching walk");
  return b;
}

}  // namespace qbe
