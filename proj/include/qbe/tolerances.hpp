#pragma once

#include <cstdlib>
#include <string>

#include "qbe/errors.hpp"

namespace qbe {

// Numerical acceptance thresholds used by every predicate. Residual norms are
// always the maximum absolute matrix entry.
struct ToleranceContext {
  double eps_proj = 1e-10;  // projector hermiticity/idempotence bound
  double eps_comm = 1e-10;  // commutator residual bound
  double eps_zero = 1e-12;  // treat-as-zero bound for entries
  double eps_eig = 1e-8;    // eigenvalue degeneracy grouping width

  void validate() const {
    if (eps_proj <= 0 || eps_comm <= 0 || eps_zero <= 0 || eps_eig <= 0)
      throw validation_error("tolerances must be strictly positive");
  }
};

namespace detail {
inline double env_or(const char* name, double fallback) {
  const char* s = std::getenv(name);
  if (!s || !*s) return fallback;
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (!end || *end != '\0' || v <= 0)
    throw input_error(std::string(name) + " must be a positive real, got '" + s + "'");
  return v;
}
}  // namespace detail

// Defaults, with environment overrides QBE_EPS_PROJ, QBE_EPS_COMM,
// QBE_EPS_ZERO, QBE_EPS_EIG (read once per process).
inline const ToleranceContext& tolerances() {
  static const ToleranceContext ctx = [] {
    ToleranceContext t;
    t.eps_proj = detail::env_or("QBE_EPS_PROJ", t.eps_proj);
    t.eps_comm = detail::env_or("QBE_EPS_COMM", t.eps_comm);
    t.eps_zero = detail::env_or("QBE_EPS_ZERO", t.eps_zero);
    t.eps_eig = detail::env_or("QBE_EPS_EIG", t.eps_eig);
    t.validate();
    return t;
  }();
  return ctx;
}

}  // namespace qbe
