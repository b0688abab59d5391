#pragma once

#include <cstdint>
#include <tuple>

#include "qbe/operators.hpp"

namespace qbe {

enum class Topology { cyclic, open };

// Finite truncation of the head-state x head-position x spin-sector space.
// Basis index layout: (h*L + j)*2^L + sigma, site 0 least significant bit.
struct LatticeShape {
  int n_head = 1;
  int length = 1;
  Topology topology = Topology::open;
  bool spins = false;

  Eigen::Index spin_dim() const {
    return spins ? (Eigen::Index(1) << length) : 1;
  }
  Eigen::Index dimension() const {
    return Eigen::Index(n_head) * length * spin_dim();
  }

  void validate() const {
    if (n_head < 1) throw validation_error("n_head must be positive");
    if (length < 1) throw validation_error("lattice length must be positive");
    if (spins && length > 24)
      throw validation_error("spin sector limited to length <= 24");
  }
};

Eigen::Index encode(int h, int j, std::uint64_t sigma, const LatticeShape& shape);
std::tuple<int, int, std::uint64_t> decode(Eigen::Index index,
                                           const LatticeShape& shape);

// Human-readable basis label "|h, j, bits>" for witnesses and reports.
std::string basis_label(Eigen::Index index, const LatticeShape& shape);

// Head shift one site to the right: cyclic topology gives the unitary
// cycle, open topology the truncated shift annihilating at the boundary.
ComplexOperator head_shift(const LatticeShape& shape);

// Cyclic raise on the head-state factor, identity elsewhere. Always unitary.
ComplexOperator head_raise(const LatticeShape& shape);

ComplexOperator head_state_projector(int l, const LatticeShape& shape);
ComplexOperator head_pos_projector(int j, const LatticeShape& shape);
ComplexOperator spin_projector(int i, int j, const LatticeShape& shape);

// v applied on the site-j spin factor, identity elsewhere. Rejects
// non-unitary v with the residual ||v^dag v - 1||.
ComplexOperator site_unitary(const Eigen::Matrix2cd& v, int j,
                             const LatticeShape& shape,
                             const ToleranceContext& tol = tolerances());

}  // namespace qbe
