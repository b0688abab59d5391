#include "qbe/halmos_wallen.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qbe/errors.hpp"

namespace qbe {
namespace {

Eigen::Index rounded_rank(const ComplexOperator& P) {
  cd tr(0, 0);
  for (int k = 0; k < P.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(P, k); it; ++it)
      if (it.row() == it.col()) tr += it.value();
  return static_cast<Eigen::Index>(std::llround(tr.real()));
}

// Entries of A restricted to the index set sel, as a |sel| x |sel| operator.
// Returns the largest magnitude found leaking out of the set so callers can
// tell whether sel really carries a reducing subspace.
ComplexOperator restrict_to(const ComplexOperator& A,
                            const std::vector<Eigen::Index>& sel,
                            double* leak) {
  std::vector<Eigen::Index> pos(A.rows(), -1);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(sel.size()); ++i)
    pos[sel[i]] = i;
  std::vector<Triplet> entries;
  double worst = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(A, k); it; ++it) {
      const bool row_in = pos[it.row()] >= 0, col_in = pos[it.col()] >= 0;
      if (row_in && col_in)
        entries.emplace_back(pos[it.row()], pos[it.col()], it.value());
      else if (row_in != col_in)
        worst = std::max(worst, std::abs(it.value()));
    }
  if (leak) *leak = worst;
  ComplexOperator out(sel.size(), sel.size());
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

// A projector is axis aligned when it is a 0/1 diagonal matrix up to eps.
// Fills sel with the indices carrying diagonal 1.
bool axis_aligned_indices(const ComplexOperator& P, double eps,
                          std::vector<Eigen::Index>* sel) {
  sel->clear();
  std::vector<double> diag(P.rows(), 0.0);
  for (int k = 0; k < P.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(P, k); it; ++it) {
      if (it.row() != it.col()) {
        if (std::abs(it.value()) > eps) return false;
        continue;
      }
      if (std::abs(it.value().imag()) > eps) return false;
      diag[it.row()] = it.value().real();
    }
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    if (std::abs(diag[i] - 1.0) <= eps)
      sel->push_back(i);
    else if (std::abs(diag[i]) > eps)
      return false;
  }
  return true;
}

}  // namespace

DefectChain defect_chain(const ComplexOperator& T, const ToleranceContext& tol) {
  if (T.rows() != T.cols())
    throw validation_error("defect_chain needs a square operator, got " +
                           std::to_string(T.rows()) + "x" + std::to_string(T.cols()));
  const Eigen::Index dim = T.rows();
  const ComplexOperator Td = adjoint(T);

  DefectChain dc;
  dc.I.push_back(identity_op(dim));
  dc.F.push_back(identity_op(dim));

  ComplexOperator Tn = T;  // T^n for the current n
  for (Eigen::Index n = 1; n <= dim + 1; ++n) {
    ComplexOperator In = compose(adjoint(Tn), Tn);
    ComplexOperator Fn = compose(Tn, adjoint(Tn));
    for (const auto* pr : {&In, &Fn}) {
      PredicateReport proj = is_projection(*pr, tol);
      if (!proj.verdict)
        throw validation_error(
            "not a power partial isometry: " +
            std::string(pr == &In ? "(Tdag)^n T^n" : "T^n (Tdag)^n") +
            " fails to be a projection at n = " + std::to_string(n) +
            " (idempotence residual " +
            std::to_string(proj.residuals.at("idempotence")) + ")");
    }
    const bool repeat = max_abs(subtract(In, dc.I.back())) <= tol.eps_proj &&
                        max_abs(subtract(Fn, dc.F.back())) <= tol.eps_proj;
    dc.I.push_back(std::move(In));
    dc.F.push_back(std::move(Fn));
    if (repeat) {
      // One repeat pins the whole tail: I_{n+1} = Tdag I_n T and
      // F_{n+1} = T F_n Tdag, so equal consecutive members stay equal.
      dc.stop_index = n;
      dc.I_inf = dc.I.back();
      dc.F_inf = dc.F.back();
      // Monotonicity of the chains, checked on the members actually kept.
      for (std::size_t m = 1; m < dc.I.size(); ++m) {
        const double ri = max_abs(subtract(compose(dc.I[m - 1], dc.I[m]), dc.I[m]));
        const double rf = max_abs(subtract(compose(dc.F[m - 1], dc.F[m]), dc.F[m]));
        if (std::max(ri, rf) > 10 * tol.eps_proj)
          throw internal_error("defect chain lost monotonicity at n = " +
                               std::to_string(m) + " (residual " +
                               std::to_string(std::max(ri, rf)) + ")");
      }
      return dc;
    }
    Tn = compose(Tn, T);
  }
  // dim+1 strict decreases of a projector chain on a dim-dimensional space
  // cannot happen; reaching here means the tolerances cannot separate
  // "repeat" from "decrease".
  throw internal_error("defect chains failed to stabilize within dim + 1 = " +
                       std::to_string(dim + 1) + " steps");
}

Decomposition decompose(const ComplexOperator& T, const ToleranceContext& tol) {
  DefectChain dc = defect_chain(T, tol);
  const Eigen::Index dim = T.rows();

  // Chain members beyond the stop index equal the stabilized projector.
  auto I_at = [&](Eigen::Index n) -> const ComplexOperator& {
    return n <= dc.stop_index ? dc.I[n] : dc.I_inf;
  };
  auto F_at = [&](Eigen::Index n) -> const ComplexOperator& {
    return n <= dc.stop_index ? dc.F[n] : dc.F_inf;
  };

  Decomposition d;
  d.unitary_proj = compose(dc.I_inf, dc.F_inf);
  d.isometry_proj = subtract(dc.I_inf, d.unitary_proj);
  d.coisometry_proj = subtract(dc.F_inf, d.unitary_proj);
  d.unitary_rank = rounded_rank(d.unitary_proj);
  d.isometry_rank = rounded_rank(d.isometry_proj);
  d.coisometry_rank = rounded_rank(d.coisometry_proj);

  // P_{n,l} = (F_{l-1} - F_l)(I_{n-l} - I_{n-l+1}) vanishes once either
  // difference passes the stop index, so n ranges over at most 2*stop.
  ComplexOperator covered = add(add(d.unitary_proj, d.isometry_proj), d.coisometry_proj);
  for (Eigen::Index n = 1; n <= 2 * dc.stop_index; ++n) {
    TruncatedPart part;
    part.index = n;
    ComplexOperator Pn = zero_op(dim);
    for (Eigen::Index l = 1; l <= n; ++l) {
      ComplexOperator slot = compose(subtract(F_at(l - 1), F_at(l)),
                                     subtract(I_at(n - l), I_at(n - l + 1)));
      Pn = add(Pn, slot);
      part.slots.push_back(std::move(slot));
    }
    part.P = std::move(Pn);
    part.rank = rounded_rank(part.P);
    if (part.rank == 0) continue;
    covered = add(covered, part.P);
    d.truncated.push_back(std::move(part));
  }

  d.completeness_residual = max_abs(subtract(covered, identity_op(dim)));
  if (d.completeness_residual > 100 * tol.eps_proj)
    throw internal_error(
        "decomposition does not resolve the identity (residual " +
        std::to_string(d.completeness_residual) + "); the defect chains are "
        "too noisy for the requested tolerances");

  // Every component projector must commute with T's Grams; failure would
  // mean the parts are not reducing subspaces and the classification is
  // meaningless.
  {
    const ComplexOperator G = compose(adjoint(T), T), F = compose(T, adjoint(T));
    std::vector<const ComplexOperator*> parts = {&d.unitary_proj, &d.isometry_proj,
                                                 &d.coisometry_proj};
    for (const auto& t : d.truncated) parts.push_back(&t.P);
    for (const ComplexOperator* P : parts) {
      const double r =
          std::max(max_abs(subtract(compose(*P, G), compose(G, *P))),
                   max_abs(subtract(compose(*P, F), compose(F, *P))));
      if (r > 100 * tol.eps_comm)
        throw internal_error("component projector fails to commute with the "
                             "Gram operators (residual " + std::to_string(r) + ")");
    }
  }

  // Try to read off the path structure of the unitary block. This only
  // works when the block is spanned by computational basis states and T is
  // stable there; otherwise leave the paths empty and the compatibility
  // flag false (uncertified, not refuted).
  if (d.unitary_rank == 0) {
    d.unitary_paths = PathSet{};
    d.unitary_ballistic_compatible = true;  // nothing to certify
  } else {
    std::vector<Eigen::Index> sel;
    if (axis_aligned_indices(d.unitary_proj, 100 * tol.eps_zero, &sel) &&
        static_cast<Eigen::Index>(sel.size()) == d.unitary_rank) {
      double leak = 0;
      ComplexOperator Tu = restrict_to(T, sel, &leak);
      if (leak <= 100 * tol.eps_zero) {
        try {
          Basis sub;
          sub.dim = static_cast<Eigen::Index>(sel.size());
          PathSet paths = extract_paths(Tu, sub, tol);
          // Map submatrix indices back to the ambient space.
          for (auto& chain : paths.chains)
            for (auto& idx : chain.indices) idx = sel[idx];
          std::set<Eigen::Index> zl;
          for (Eigen::Index idx : paths.zero_length) zl.insert(sel[idx]);
          paths.zero_length = std::move(zl);
          std::map<Eigen::Index, cd> amps;
          for (const auto& [idx, a] : paths.successor_amplitudes)
            amps.emplace(sel[idx], a);
          paths.successor_amplitudes = std::move(amps);
          const bool cycles_only =
              paths.zero_length.empty() &&
              std::all_of(paths.chains.begin(), paths.chains.end(),
                          [](const PathSet::Chain& c) {
                            return c.kind == PathSet::Kind::cycle;
                          });
          d.unitary_ballistic_compatible = cycles_only;
          d.unitary_paths = std::move(paths);
        } catch (const extraction_error&) {
          // Not stable on the computational basis; leave uncertified.
        }
      }
    }
  }
  return d;
}

PredicateReport hw_product_lemma(const ComplexOperator& W, const ComplexOperator& V,
                                 const ToleranceContext& tol) {
  if (W.cols() != V.rows())
    throw validation_error("product lemma: inner dimensions differ (" +
                           std::to_string(W.cols()) + " vs " +
                           std::to_string(V.rows()) + ")");
  const std::pair<const char*, const ComplexOperator*> inputs[] = {{"W", &W},
                                                                   {"V", &V}};
  for (const auto& [name, op] : inputs) {
    PredicateReport pi = is_partial_isometry(*op, tol);
    if (!pi.verdict)
      throw validation_error(std::string("product lemma requires partial "
                                         "isometries; ") + name + " is not one" +
                             (pi.witness ? " (" + *pi.witness + ")" : ""));
  }

  const ComplexOperator range_V = compose(V, adjoint(V));
  const ComplexOperator support_W = compose(adjoint(W), W);
  const double comm = max_abs(subtract(compose(range_V, support_W),
                                       compose(support_W, range_V)));
  const bool criterion = comm <= tol.eps_comm;

  PredicateReport direct = is_partial_isometry(compose(W, V), tol);
  if (direct.verdict != criterion)
    throw internal_error(
        "product criterion and direct check disagree (commutator " +
        std::to_string(comm) + ", direct verdict " +
        std::string(direct.verdict ? "true" : "false") +
        "); tolerances cannot separate the two routes on this input");

  PredicateReport out;
  out.verdict = criterion;
  out.residuals["range_support_commutator"] = comm;
  for (const auto& [k, v] : direct.residuals) out.residuals["product_" + k] = v;
  if (!criterion)
    out.witness = "[V Vdag, Wdag W] has an entry of magnitude " +
                  std::to_string(comm) +
                  (direct.witness ? "; product check: " + *direct.witness : "");
  out.check_invariant();
  return out;
}

ComplexOperator contraction_u1(cd a) {
  if (std::abs(a) >= 0.5)
    throw validation_error("contraction parameter needs |a| < 1/2, got |a| = " +
                           std::to_string(std::abs(a)));
  return make_operator(2, {Triplet(1, 0, 2.0 * a)}, 0.0);
}

namespace {

// M(A) = [[A, (1 - A Adag)^{1/2}], [0, 0]] on doubled dimension.
ComplexOperator tower_step(const ComplexOperator& A, const ToleranceContext& tol) {
  const Eigen::Index dim = A.rows();
  ComplexOperator defect = subtract(identity_op(dim), compose(A, adjoint(A)));
  ComplexOperator root = hermitian_sqrt(defect, tol);
  std::vector<Triplet> entries;
  for (int k = 0; k < A.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(A, k); it; ++it)
      entries.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < root.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(root, k); it; ++it)
      entries.emplace_back(it.row(), it.col() + dim, it.value());
  ComplexOperator out(2 * dim, 2 * dim);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

}  // namespace

ComplexOperator hw_tower(int n, cd a, const ToleranceContext& tol) {
  if (n < 1) throw validation_error("tower index must be >= 1, got " + std::to_string(n));
  if (a == cd(0, 0))
    throw validation_error("tower construction needs 0 < |a| < 1/2; a = 0 "
                           "degenerates to the zero operator, which is a "
                           "partial isometry at every power");
  ComplexOperator U = contraction_u1(a);
  for (int k = 2; k <= n; ++k) U = tower_step(U, tol);

  // The member is only useful if it shows the promised power pattern:
  // partial isometry through power n-1, failure exactly at n, zero after.
  ComplexOperator Uk = U;
  for (int k = 1; k <= n; ++k) {
    PredicateReport pi = is_partial_isometry(Uk, tol);
    if (k < n && !pi.verdict)
      throw internal_error("tower member " + std::to_string(n) +
                           " lost the partial isometry property already at "
                           "power " + std::to_string(k) +
                           (pi.witness ? " (" + *pi.witness + ")" : ""));
    if (k == n && pi.verdict)
      throw internal_error("tower member " + std::to_string(n) +
                           " unexpectedly stays a partial isometry at power " +
                           std::to_string(n));
    Uk = compose(Uk, U);
  }
  const double tail = max_abs(Uk);  // U^{n+1}
  if (tail > tol.eps_zero * U.rows())
    throw internal_error("tower member " + std::to_string(n) +
                         " fails to vanish at power " + std::to_string(n + 1) +
                         " (norm " + std::to_string(tail) + ")");
  return U;
}

ComplexOperator hw_direct_sum(const std::vector<int>& s, cd a,
                              const ToleranceContext& tol) {
  std::vector<int> picked;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != 0 && s[i] != 1)
      throw validation_error("selection entries must be 0 or 1, got " +
                             std::to_string(s[i]) + " at position " +
                             std::to_string(i));
    if (s[i] == 1) picked.push_back(static_cast<int>(i) + 1);
  }
  if (picked.empty())
    throw validation_error("direct sum needs at least one selected tower index");

  std::vector<ComplexOperator> blocks;
  Eigen::Index dim = 0;
  for (int n : picked) {
    blocks.push_back(hw_tower(n, a, tol));
    dim += blocks.back().rows();
  }
  std::vector<Triplet> entries;
  Eigen::Index offset = 0;
  for (const ComplexOperator& B : blocks) {
    for (int k = 0; k < B.outerSize(); ++k)
      for (ComplexOperator::InnerIterator it(B, k); it; ++it)
        entries.emplace_back(offset + it.row(), offset + it.col(), it.value());
    offset += B.rows();
  }
  ComplexOperator out(dim, dim);
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

}  // namespace qbe
