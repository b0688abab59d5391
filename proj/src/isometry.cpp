#include "qbe/isometry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>

namespace qbe {

namespace {

std::string idx(Eigen::Index i) { return std::to_string(static_cast<long long>(i)); }

// Largest off-diagonal entry of a sparse Hermitian operator, with its
// location. Used for merge witnesses.
struct OffDiag {
  double value = 0;
  Eigen::Index row = -1, col = -1;
};
OffDiag max_offdiag(const ComplexOperator& A) {
  OffDiag m;
  for (int k = 0; k < A.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(A, k); it; ++it)
      if (it.row() != it.col() && std::abs(it.value()) > m.value) {
        m.value = std::abs(it.value());
        m.row = it.row();
        m.col = it.col();
      }
  return m;
}

// Worst fractional diagonal entry (distance from the nearer of 0 and 1).
struct DiagDev {
  double deviation = 0;
  Eigen::Index index = -1;
  double value = 0;
};
DiagDev worst_diag(const ComplexOperator& A) {
  DiagDev w;
  Eigen::VectorXcd d = A.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double v = std::abs(d(i));
    double dev = std::min(v, std::abs(v - 1.0));
    dev = std::max(dev, std::abs(d(i).imag()));
    if (dev > w.deviation) {
      w.deviation = dev;
      w.index = i;
      w.value = v;
    }
  }
  return w;
}

void phase_fix_columns(Eigen::MatrixXcd& V, double significance) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
      cd x = V(r, c);
      if (std::abs(x) > significance) {
        V.col(c) *= std::conj(x) / std::abs(x);
        break;
      }
    }
  }
}

}  // namespace

PredicateReport is_partial_isometry(const ComplexOperator& T, const ToleranceContext& tol) {
  if (T.rows() != T.cols())
    throw validation_error("is_partial_isometry: operator must be square");
  ComplexOperator G = compose(adjoint(T), T, tol.eps_zero);
  ComplexOperator F = compose(T, adjoint(T), tol.eps_zero);
  PredicateReport pg = is_projection(G, tol);
  PredicateReport pf = is_projection(F, tol);
  PredicateReport r;
  r.residuals["I1_idempotence"] = pg.residuals["idempotence"];
  r.residuals["I1_hermiticity"] = pg.residuals["hermiticity"];
  r.residuals["F1_idempotence"] = pf.residuals["idempotence"];
  r.residuals["F1_hermiticity"] = pf.residuals["hermiticity"];
  r.verdict = pg.verdict && pf.verdict;
  if (!r.verdict) {
    // Name a pair of merging states when one exists: a significant
    // off-diagonal Gram entry means two basis states have non-orthogonal
    // images. Otherwise point at the worst fractional image norm.
    OffDiag og = max_offdiag(G);
    OffDiag of = max_offdiag(F);
    std::ostringstream os;
    if (og.value > tol.eps_proj) {
      os << "images of basis states " << idx(og.col) << " and " << idx(og.row)
         << " are not orthogonal, |<T b_" << idx(og.row) << "|T b_" << idx(og.col)
         << ">| = " << og.value;
      r.residuals["merging_overlap"] = og.value;
      r.residuals["merging_a"] = static_cast<double>(og.col);
      r.residuals["merging_b"] = static_cast<double>(og.row);
    } else if (of.value > tol.eps_proj) {
      os << "adjoint images of basis states " << idx(of.col) << " and "
         << idx(of.row) << " are not orthogonal, overlap " << of.value;
      r.residuals["merging_overlap"] = of.value;
    } else {
      DiagDev wg = worst_diag(G);
      DiagDev wf = worst_diag(F);
      DiagDev w = wg.deviation >= wf.deviation ? wg : wf;
      os << "image of basis state " << idx(w.index) << " has squared norm "
         << w.value << ", neither 0 nor 1";
    }
    r.witness = os.str();
  }
  return r;
}

PredicateReport is_orthogonality_preserving(const ComplexOperator& T,
                                            const ToleranceContext& tol) {
  if (T.rows() != T.cols())
    throw validation_error("is_orthogonality_preserving: operator must be square");
  ComplexOperator G = compose(adjoint(T), T, tol.eps_zero);
  ComplexOperator F = compose(T, adjoint(T), tol.eps_zero);
  ComplexOperator C = subtract(compose(G, F, tol.eps_zero),
                               compose(F, G, tol.eps_zero), 0.0);
  double res = max_abs(C);
  PredicateReport r;
  r.residuals["commutator"] = res;
  r.verdict = res <= tol.eps_comm;
  if (!r.verdict) {
    OffDiag m = max_offdiag(C);
    std::ostringstream os;
    os << "[T^dag T, T T^dag] has entry " << res << " at (" << idx(m.row) << ", "
       << idx(m.col) << ")";
    r.witness = os.str();
  }
  return r;
}

std::pair<Basis, double> op_basis_candidate(const ComplexOperator& T,
                                            const ToleranceContext& tol) {
  Eigen::MatrixXcd G = to_dense(compose(adjoint(T), T, tol.eps_zero));
  Eigen::MatrixXcd F = to_dense(compose(T, adjoint(T), tol.eps_zero));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  if (es.info() != Eigen::Success)
    throw internal_error("op_basis: eigensolver failed on T^dag T");
  Eigen::MatrixXcd V = es.eigenvectors();
  Eigen::VectorXd lam = es.eigenvalues();

  const Eigen::Index n = V.cols();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && lam(end) - lam(end - 1) <= tol.eps_eig) ++end;
    if (end - start > 1) {
      Eigen::MatrixXcd W = V.middleCols(start, end - start);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sub(W.adjoint() * F * W);
      if (sub.info() != Eigen::Success)
        throw internal_error("op_basis: eigensolver failed inside a degenerate group");
      V.middleCols(start, end - start) = W * sub.eigenvectors();
    }
    start = end;
  }
  phase_fix_columns(V, 1e-9);

  Eigen::MatrixXcd Gb = V.adjoint() * G * V;
  Eigen::MatrixXcd Fb = V.adjoint() * F * V;
  Gb.diagonal().setZero();
  Fb.diagonal().setZero();
  double post = std::max(max_abs(Gb), max_abs(Fb));

  Basis b;
  b.dim = T.rows();
  b.vectors = std::move(V);
  return {std::move(b), post};
}

Basis op_basis(const ComplexOperator& T, const ToleranceContext& tol) {
  PredicateReport op = is_orthogonality_preserving(T, tol);
  if (!op.verdict)
    throw validation_error(
        "op_basis requires an orthogonality-preserving operator; " +
        op.witness.value_or(""));
  auto [basis, post] = op_basis_candidate(T, tol);
  if (post > tol.eps_proj) {
    std::ostringstream os;
    os << "op_basis post-check failed: joint-diagonalization residual " << post;
    throw internal_error(os.str());
  }
  return basis;
}

namespace {

// Column scan of a basis-coordinate representation: classifies each image as
// annihilated, a clean single-target map, or a violation.
struct ColumnScan {
  bool ok = true;
  std::map<Eigen::Index, std::pair<Eigen::Index, cd>> targets;
  std::string witness;
  double max_offtarget = 0;
  double worst_amp_dev = 0;
};

template <typename ColumnEntries>
void scan_column(Eigen::Index j, const ColumnEntries& entries, double eps_zero,
                 const char* op_name, ColumnScan& out) {
  // entries: vector of (row, value) with |value| > eps_zero
  if (entries.empty()) return;
  if (entries.size() == 1) {
    double a = std::abs(entries[0].second);
    if (a >= 1.0 - eps_zero) {
      out.targets[j] = {entries[0].first, entries[0].second};
      out.worst_amp_dev = std::max(out.worst_amp_dev, std::abs(a - 1.0));
      return;
    }
    if (out.ok) {
      std::ostringstream os;
      os << op_name << "|b_" << j << "> has a single coefficient of magnitude "
         << a << ", in the forbidden zone between 0 and 1";
      out.witness = os.str();
      out.ok = false;
    }
    out.max_offtarget = std::max(out.max_offtarget, std::abs(entries[0].second));
    return;
  }
  // superposition: report the two largest coefficients
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
    return std::abs(x.second) > std::abs(y.second);
  });
  if (out.ok) {
    std::ostringstream os;
    os << op_name << "|b_" << j << "> is a superposition: coefficient "
       << std::abs(sorted[0].second) << " on b_" << sorted[0].first << " and "
       << std::abs(sorted[1].second) << " on b_" << sorted[1].first;
    out.witness = os.str();
    out.ok = false;
  }
  out.max_offtarget = std::max(out.max_offtarget, std::abs(sorted[1].second));
}

ColumnScan scan_sparse(const ComplexOperator& M, double eps_zero, const char* op_name) {
  ColumnScan out;
  std::vector<std::pair<Eigen::Index, cd>> entries;
  for (int c = 0; c < M.outerSize(); ++c) {
    entries.clear();
    for (ComplexOperator::InnerIterator it(M, c); it; ++it)
      if (std::abs(it.value()) > eps_zero) entries.emplace_back(it.row(), it.value());
    scan_column(c, entries, eps_zero, op_name, out);
  }
  return out;
}

ColumnScan scan_dense(const Eigen::MatrixXcd& M, double eps_zero, const char* op_name) {
  ColumnScan out;
  std::vector<std::pair<Eigen::Index, cd>> entries;
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    entries.clear();
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      if (std::abs(M(r, c)) > eps_zero) entries.emplace_back(r, M(r, c));
    scan_column(c, entries, eps_zero, op_name, out);
  }
  return out;
}

}  // namespace

StabilityResult is_stable_on_basis(const ComplexOperator& T, const Basis& B,
                                   const ToleranceContext& tol) {
  B.validate(tol);
  if (T.rows() != B.dim)
    throw validation_error("is_stable_on_basis: basis dimension mismatch");

  ColumnScan fwd, bwd;
  double closure = 0;
  if (B.computational()) {
    fwd = scan_sparse(T, tol.eps_zero, "T");
    bwd = scan_sparse(adjoint(T), tol.eps_zero, "Tdag");
  } else {
    const Eigen::MatrixXcd& V = *B.vectors;
    Eigen::MatrixXcd TV = T * V;
    Eigen::MatrixXcd C = V.adjoint() * TV;
    if (!B.complete()) {
      // The family must be invariant: anything of T b or Tdag b outside the
      // span is a stability violation, not a rounding artifact.
      closure = max_abs(Eigen::MatrixXcd(TV - V * C));
      Eigen::MatrixXcd TdV = T.adjoint() * V;
      closure = std::max(closure,
                         max_abs(Eigen::MatrixXcd(TdV - V * C.adjoint())));
    }
    fwd = scan_dense(C, tol.eps_zero, "T");
    bwd = scan_dense(C.adjoint(), tol.eps_zero, "Tdag");
  }

  StabilityResult res;
  res.report.residuals["max_offtarget_coefficient"] =
      std::max(fwd.max_offtarget, bwd.max_offtarget);
  res.report.residuals["worst_amplitude_deviation"] =
      std::max(fwd.worst_amp_dev, bwd.worst_amp_dev);
  if (!B.complete()) res.report.residuals["span_closure_residual"] = closure;

  bool closed = closure <= 100 * tol.eps_zero;
  res.report.verdict = fwd.ok && bwd.ok && closed;
  if (!res.report.verdict) {
    if (!fwd.ok)
      res.report.witness = fwd.witness;
    else if (!bwd.ok)
      res.report.witness = bwd.witness;
    else
      res.report.witness =
          "image leaves the family span, residual " + std::to_string(closure);
  } else {
    res.successors = std::move(fwd.targets);
    res.predecessors = std::move(bwd.targets);
  }
  return res;
}

PathSet extract_paths(const ComplexOperator& T, const Basis& B,
                      const ToleranceContext& tol) {
  PredicateReport pi = is_partial_isometry(T, tol);
  if (!pi.verdict)
    throw extraction_error(extraction_error::Kind::precondition,
                           "extract_paths requires a partial isometry; " +
                               pi.witness.value_or(""));
  StabilityResult st = is_stable_on_basis(T, B, tol);
  if (!st.report.verdict)
    throw extraction_error(extraction_error::Kind::precondition,
                           "extract_paths requires stability on the basis; " +
                               st.report.witness.value_or(""));

  const Eigen::Index count = B.count();

  // in-degree <= 1: two states sharing an image is a distinctness violation
  std::map<Eigen::Index, Eigen::Index> seen_target;
  for (const auto& [j, t] : st.successors) {
    auto [r, alpha] = t;
    if (std::abs(std::abs(alpha) - 1.0) > tol.eps_zero) {
      std::ostringstream os;
      os << "successor amplitude of b_" << j << " has magnitude "
         << std::abs(alpha) << ", motion is not norm preserving";
      throw extraction_error(extraction_error::Kind::norm, os.str());
    }
    auto [it, fresh] = seen_target.emplace(r, j);
    if (!fresh) {
      std::ostringstream os;
      os << "states b_" << it->second << " and b_" << j
         << " both map onto b_" << r << ", paths merge";
      throw extraction_error(extraction_error::Kind::distinctness, os.str());
    }
  }
  // adjoint consistency: Tdag must walk each edge backwards
  for (const auto& [j, t] : st.successors) {
    auto [r, alpha] = t;
    auto back = st.predecessors.find(r);
    if (back == st.predecessors.end() || back->second.first != j ||
        std::abs(back->second.second - std::conj(alpha)) > 1e-9) {
      std::ostringstream os;
      os << "adjoint inconsistency on edge b_" << j << " -> b_" << r
         << ": Tdag does not invert the step";
      throw internal_error(os.str());
    }
  }

  PathSet out;
  out.successor_amplitudes.clear();
  for (const auto& [j, t] : st.successors) out.successor_amplitudes[j] = t.second;

  std::vector<char> visited(static_cast<std::size_t>(count), 0);
  auto succ_of = [&](Eigen::Index j) -> Eigen::Index {
    auto it = st.successors.find(j);
    return it == st.successors.end() ? -1 : it->second.first;
  };
  auto has_pred = [&](Eigen::Index j) {
    return st.predecessors.count(j) != 0;
  };

  // open chains first, from their starts, in index order
  for (Eigen::Index j = 0; j < count; ++j) {
    if (visited[j]) continue;
    bool starts = succ_of(j) >= 0 && !has_pred(j);
    bool isolated = succ_of(j) < 0 && !has_pred(j);
    if (isolated) {
      visited[j] = 1;
      out.zero_length.insert(j);
      continue;
    }
    if (!starts) continue;
    PathSet::Chain c;
    c.kind = PathSet::Kind::open_chain;
    for (Eigen::Index cur = j; cur >= 0; cur = succ_of(cur)) {
      if (visited[cur])
        throw internal_error("chain walk revisited a state, graph is inconsistent");
      visited[cur] = 1;
      c.indices.push_back(cur);
    }
    out.chains.push_back(std::move(c));
  }
  // whatever is left lies on cycles; start each at its smallest member
  for (Eigen::Index j = 0; j < count; ++j) {
    if (visited[j]) continue;
    PathSet::Chain c;
    c.kind = PathSet::Kind::cycle;
    Eigen::Index cur = j;
    do {
      visited[cur] = 1;
      c.indices.push_back(cur);
      cur = succ_of(cur);
      if (cur < 0) throw internal_error("cycle walk fell off the graph");
    } while (cur != j);
    out.chains.push_back(std::move(c));
  }
  return out;
}

PredicateReport is_distinct_path_generating(const ComplexOperator& T, const Basis& B,
                                            const ToleranceContext& tol) {
  PredicateReport r;
  PredicateReport pi = is_partial_isometry(T, tol);
  r.residuals = pi.residuals;
  if (!pi.verdict) {
    r.verdict = false;
    r.witness = "not a partial isometry: " + pi.witness.value_or("");
    return r;
  }
  PredicateReport op = is_orthogonality_preserving(T, tol);
  r.residuals.insert(op.residuals.begin(), op.residuals.end());
  if (!op.verdict) {
    r.verdict = false;
    r.witness = "not orthogonality preserving: " + op.witness.value_or("");
    return r;
  }
  StabilityResult st = is_stable_on_basis(T, B, tol);
  r.residuals.insert(st.report.residuals.begin(), st.report.residuals.end());
  if (!st.report.verdict) {
    r.verdict = false;
    r.witness = "not stable on the basis: " + st.report.witness.value_or("");
    return r;
  }
  try {
    PathSet p = extract_paths(T, B, tol);
    r.residuals["chain_count"] = static_cast<double>(p.chains.size());
    r.residuals["zero_length_count"] = static_cast<double>(p.zero_length.size());
    r.verdict = true;
  } catch (const extraction_error& e) {
    r.verdict = false;
    r.witness = e.what();
  }
  return r;
}

PredicateReport is_power_partial_isometry(const ComplexOperator& T,
                                          Eigen::Index n_max,
                                          const ToleranceContext& tol) {
  if (n_max < 1)
    throw validation_error("is_power_partial_isometry: n_max must be >= 1");
  PredicateReport r;
  ComplexOperator Tn = T;
  ComplexOperator I_prev, F_prev;
  for (Eigen::Index n = 1; n <= n_max; ++n) {
    ComplexOperator In = compose(adjoint(Tn), Tn, tol.eps_zero);
    ComplexOperator Fn = compose(Tn, adjoint(Tn), tol.eps_zero);
    PredicateReport pi = is_projection(In, tol);
    PredicateReport pf = is_projection(Fn, tol);
    if (!pi.verdict || !pf.verdict) {
      r.verdict = false;
      r.residuals["first_failing_power"] = static_cast<double>(n);
      r.residuals["I_idempotence"] = pi.residuals["idempotence"];
      r.residuals["F_idempotence"] = pf.residuals["idempotence"];
      std::ostringstream os;
      os << "power " << n << " is not a partial isometry: I_" << n
         << " idempotence residual " << pi.residuals["idempotence"] << ", F_" << n
         << " residual " << pf.residuals["idempotence"];
      r.witness = os.str();
      return r;
    }
    if (max_abs(Tn) <= tol.eps_zero) {
      // nilpotent: every higher power is zero, trivially a partial isometry
      r.verdict = true;
      r.residuals["nilpotent_at"] = static_cast<double>(n);
      return r;
    }
    if (n > 1 && max_abs(subtract(In, I_prev, 0.0)) <= tol.eps_proj &&
        max_abs(subtract(Fn, F_prev, 0.0)) <= tol.eps_proj) {
      // I_{n+1} = Tdag I_n T and F_{n+1} = T F_n Tdag, so one repeat locks
      // the whole tail of both chains.
      r.verdict = true;
      r.residuals["stabilized_at"] = static_cast<double>(n);
      return r;
    }
    I_prev = std::move(In);
    F_prev = std::move(Fn);
    if (n < n_max) Tn = compose(Tn, T, tol.eps_zero);
  }
  r.verdict = true;
  r.residuals["checked_powers"] = static_cast<double>(n_max);
  return r;
}

PredicateReport is_completely_orthogonality_preserving(const ComplexOperator& T,
                                                       const ToleranceContext& tol) {
  PredicateReport pi = is_partial_isometry(T, tol);
  if (!pi.verdict)
    throw validation_error(
        "complete orthogonality preservation is defined for partial isometries; " +
        pi.witness.value_or(""));
  return is_power_partial_isometry(T, T.rows(), tol);
}

PredicateReport powers_preserve_orthogonality(const ComplexOperator& T, const Basis& B,
                                              Eigen::Index n_max,
                                              const ToleranceContext& tol) {
  B.validate(tol);
  if (T.rows() != B.dim)
    throw validation_error("powers_preserve_orthogonality: dimension mismatch");
  PredicateReport r;
  const double bound = 100 * tol.eps_zero;

  if (B.computational()) {
    // <T^n e_i | T^n e_j> is the (i, j) entry of I_n; no dense vectors needed
    ComplexOperator Tn = T;
    for (Eigen::Index n = 1; n <= n_max; ++n) {
      ComplexOperator In = compose(adjoint(Tn), Tn, tol.eps_zero);
      OffDiag m = max_offdiag(In);
      if (m.value > bound) {
        r.verdict = false;
        std::ostringstream os;
        os << "power " << n << ": <T^n b_" << m.row << "|T^n b_" << m.col
           << "> = " << m.value;
        r.witness = os.str();
        r.residuals["power"] = static_cast<double>(n);
        r.residuals["overlap"] = m.value;
        return r;
      }
      if (max_abs(Tn) <= tol.eps_zero) break;
      if (n < n_max) Tn = compose(Tn, T, tol.eps_zero);
    }
    r.verdict = true;
    return r;
  }

  Eigen::MatrixXcd X = *B.vectors;
  for (Eigen::Index n = 1; n <= n_max; ++n) {
    X = T * X;
    Eigen::MatrixXcd G = X.adjoint() * X;
    G.diagonal().setZero();
    double m = max_abs(G);
    if (m > bound) {
      r.verdict = false;
      std::ostringstream os;
      os << "power " << n << ": off-diagonal overlap " << m;
      r.witness = os.str();
      r.residuals["power"] = static_cast<double>(n);
      r.residuals["overlap"] = m;
      return r;
    }
    if (max_abs(X) <= tol.eps_zero) break;
  }
  r.verdict = true;
  return r;
}

}  // namespace qbe
