#include "qbe/operators.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

namespace qbe {

namespace {
void require_square(const ComplexOperator& A, const char* what) {
  if (A.rows() != A.cols())
    throw validation_error(std::string(what) + ": operator must be square");
}
void require_same_dim(const ComplexOperator& A, const ComplexOperator& B,
                      const char* what) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    std::ostringstream os;
    os << what << ": dimension mismatch " << A.rows() << "x" << A.cols()
       << " vs " << B.rows() << "x" << B.cols();
    throw validation_error(os.str());
  }
}
ComplexOperator pruned(ComplexOperator A, double drop) {
  A.prune([drop](Eigen::Index, Eigen::Index, const cd& v) {
    return std::abs(v) > drop;
  });
  A.makeCompressed();
  return A;
}
}  // namespace

ComplexOperator make_operator(Eigen::Index dim, const std::vector<Triplet>& entries,
                              double drop) {
  if (dim <= 0) throw validation_error("make_operator: dimension must be positive");
  for (const auto& t : entries)
    if (t.row() < 0 || t.row() >= dim || t.col() < 0 || t.col() >= dim) {
      std::ostringstream os;
      os << "make_operator: entry (" << t.row() << ", " << t.col()
         << ") outside dimension " << dim;
      throw validation_error(os.str());
    }
  ComplexOperator A(dim, dim);
  A.setFromTriplets(entries.begin(), entries.end());  // duplicates coalesce
  return pruned(std::move(A), drop);
}

ComplexOperator identity_op(Eigen::Index dim) {
  ComplexOperator I(dim, dim);
  I.setIdentity();
  return I;
}

ComplexOperator zero_op(Eigen::Index dim) { return ComplexOperator(dim, dim); }

double max_abs(const ComplexOperator& A) {
  double m = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (ComplexOperator::InnerIterator it(A, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

double max_abs(const Eigen::MatrixXcd& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd to_dense(const ComplexOperator& A) {
  return Eigen::MatrixXcd(A);
}

ComplexOperator from_dense(const Eigen::MatrixXcd& A, double drop) {
  std::vector<Triplet> ts;
  for (Eigen::Index c = 0; c < A.cols(); ++c)
    for (Eigen::Index r = 0; r < A.rows(); ++r)
      if (std::abs(A(r, c)) > drop) ts.emplace_back(r, c, A(r, c));
  ComplexOperator S(A.rows(), A.cols());
  S.setFromTriplets(ts.begin(), ts.end());
  S.makeCompressed();
  return S;
}

ComplexOperator compose(const ComplexOperator& A, const ComplexOperator& B,
                        double drop) {
  if (A.cols() != B.rows())
    throw validation_error("compose: inner dimensions differ");
  return pruned(ComplexOperator(A * B), drop);
}

ComplexOperator adjoint(const ComplexOperator& A) {
  ComplexOperator R = A.adjoint();
  R.makeCompressed();
  return R;
}

ComplexOperator add(const ComplexOperator& A, const ComplexOperator& B, double drop) {
  require_same_dim(A, B, "add");
  return pruned(ComplexOperator(A + B), drop);
}

ComplexOperator subtract(const ComplexOperator& A, const ComplexOperator& B,
                         double drop) {
  require_same_dim(A, B, "subtract");
  return pruned(ComplexOperator(A - B), drop);
}

ComplexOperator scale(const ComplexOperator& A, cd factor, double drop) {
  return pruned(ComplexOperator(A * factor), drop);
}

PredicateReport is_projection(const ComplexOperator& P, const ToleranceContext& tol) {
  require_square(P, "is_projection");
  double herm = max_abs(ComplexOperator(P - ComplexOperator(P.adjoint())));
  double idem = max_abs(ComplexOperator(ComplexOperator(P * P) - P));
  PredicateReport r;
  r.residuals["hermiticity"] = herm;
  r.residuals["idempotence"] = idem;
  r.verdict = herm <= tol.eps_proj && idem <= tol.eps_proj;
  if (!r.verdict) {
    std::ostringstream os;
    os << "not a projection: hermiticity residual " << herm
       << ", idempotence residual " << idem;
    r.witness = os.str();
  }
  return r;
}

ComplexOperator hermitian_sqrt(const ComplexOperator& A, const ToleranceContext& tol) {
  require_square(A, "hermitian_sqrt");
  Eigen::MatrixXcd D = to_dense(A);
  double herm = max_abs(Eigen::MatrixXcd(D - D.adjoint()));
  if (herm > tol.eps_proj) {
    std::ostringstream os;
    os << "hermitian_sqrt: operator is not Hermitian, residual " << herm;
    throw validation_error(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
  if (es.info() != Eigen::Success)
    throw internal_error("hermitian_sqrt: eigensolver failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol.eps_proj) {
      std::ostringstream os;
      os << "hermitian_sqrt: not positive semidefinite, eigenvalue " << lam(i);
      throw validation_error(os.str());
    }
    lam(i) = lam(i) < 0 ? 0 : lam(i);
  }
  Eigen::MatrixXcd R = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                       es.eigenvectors().adjoint();
  return from_dense(R, tol.eps_zero);
}

}  // namespace qbe
