#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qbe/errors.hpp"
#include "qbe/tolerances.hpp"

namespace qbe {

// Verdict plus the numbers that justify it. A false verdict always carries a
// witness describing the first counterexample found.
struct PredicateReport {
  bool verdict = false;
  std::map<std::string, double> residuals;
  std::optional<std::string> witness;

  void check_invariant() const {
    if (!verdict && !witness)
      throw internal_error("negative verdict without witness");
  }
};

// An orthonormal family of states. vectors == nullopt means the implicit
// computational basis (complete by definition). An explicit matrix holds the
// states as columns; fewer columns than dim is allowed and marks a partial
// family, e.g. the hand-built stable families of the walk machines.
struct Basis {
  Eigen::Index dim = 0;
  std::optional<Eigen::MatrixXcd> vectors;

  bool computational() const { return !vectors.has_value(); }
  Eigen::Index count() const { return vectors ? vectors->cols() : dim; }
  bool complete() const { return count() == dim; }

  void validate(const ToleranceContext& tol = tolerances()) const {
    if (dim <= 0) throw validation_error("basis dimension must be positive");
    if (!vectors) return;
    if (vectors->rows() != dim)
      throw validation_error("basis vectors have wrong dimension");
    Eigen::MatrixXcd g = vectors->adjoint() * (*vectors);
    g.diagonal().array() -= 1.0;
    double r = g.cwiseAbs().maxCoeff();
    if (r > 100 * tol.eps_zero)
      throw validation_error("basis family is not orthonormal, residual " +
                             std::to_string(r));
  }
};

// Chains of basis indices traced out by repeated application of T. Indices
// refer to columns of the Basis the paths were extracted against (equal to
// space indices for the computational basis).
struct PathSet {
  enum class Kind { open_chain, cycle };
  struct Chain {
    Kind kind = Kind::open_chain;
    std::vector<Eigen::Index> indices;
  };
  std::vector<Chain> chains;
  std::set<Eigen::Index> zero_length;  // T|b> = Tdag|b> = 0
  std::map<Eigen::Index, std::complex<double>> successor_amplitudes;

  Eigen::Index covered_count() const {
    Eigen::Index n = static_cast<Eigen::Index>(zero_length.size());
    for (const auto& c : chains) n += static_cast<Eigen::Index>(c.indices.size());
    return n;
  }
};

}  // namespace qbe
