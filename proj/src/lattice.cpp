#include "qbe/lattice.hpp"

#include <sstream>

namespace qbe {

namespace {
void check_head(int h, const LatticeShape& shape) {
  if (h < 0 || h >= shape.n_head) {
    std::ostringstream os;
    os << "head state " << h << " outside [0, " << shape.n_head << ")";
    throw validation_error(os.str());
  }
}
void check_site(int j, const LatticeShape& shape) {
  if (j < 0 || j >= shape.length) {
    std::ostringstream os;
    os << "site " << j << " outside [0, " << shape.length << ")";
    throw validation_error(os.str());
  }
}
void check_sigma(std::uint64_t sigma, const LatticeShape& shape) {
  if (!shape.spins) {
    if (sigma != 0)
      throw validation_error("spin bits supplied but the shape has no spin sector");
    return;
  }
  if (shape.length < 64 && (sigma >> shape.length) != 0) {
    std::ostringstream os;
    os << "spin configuration " << sigma << " has bits beyond site "
       << shape.length - 1;
    throw validation_error(os.str());
  }
}
}  // namespace

Eigen::Index encode(int h, int j, std::uint64_t sigma, const LatticeShape& shape) {
  shape.validate();
  check_head(h, shape);
  check_site(j, shape);
  check_sigma(sigma, shape);
  return (Eigen::Index(h) * shape.length + j) * shape.spin_dim() +
         static_cast<Eigen::Index>(sigma);
}

std::tuple<int, int, std::uint64_t> decode(Eigen::Index index,
                                           const LatticeShape& shape) {
  shape.validate();
  if (index < 0 || index >= shape.dimension()) {
    std::ostringstream os;
    os << "index " << index << " outside [0, " << shape.dimension() << ")";
    throw validation_error(os.str());
  }
  const Eigen::Index sd = shape.spin_dim();
  auto sigma = static_cast<std::uint64_t>(index % sd);
  Eigen::Index hj = index / sd;
  int j = static_cast<int>(hj % shape.length);
  int h = static_cast<int>(hj / shape.length);
  return {h, j, sigma};
}

std::string basis_label(Eigen::Index index, const LatticeShape& shape) {
  auto [h, j, sigma] = decode(index, shape);
  std::ostringstream os;
  os << "|h=" << h << ", j=" << j;
  if (shape.spins) {
    os << ", s=";
    for (int k = 0; k < shape.length; ++k) os << ((sigma >> k) & 1u);
    os << " (site 0 first)";
  }
  os << ">";
  return os.str();
}

ComplexOperator head_shift(const LatticeShape& shape) {
  shape.validate();
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int h = 0; h < shape.n_head; ++h)
    for (int j = 0; j < shape.length; ++j) {
      int jp = j + 1;
      if (jp == shape.length) {
        if (shape.topology == Topology::open) continue;
        jp = 0;
      }
      for (Eigen::Index s = 0; s < sd; ++s)
        ts.emplace_back(encode(h, jp, s, shape), encode(h, j, s, shape), cd(1, 0));
    }
  return make_operator(shape.dimension(), ts);
}

ComplexOperator head_raise(const LatticeShape& shape) {
  shape.validate();
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int h = 0; h < shape.n_head; ++h) {
    int hp = (h + 1) % shape.n_head;
    for (int j = 0; j < shape.length; ++j)
      for (Eigen::Index s = 0; s < sd; ++s)
        ts.emplace_back(encode(hp, j, s, shape), encode(h, j, s, shape), cd(1, 0));
  }
  return make_operator(shape.dimension(), ts);
}

ComplexOperator head_state_projector(int l, const LatticeShape& shape) {
  shape.validate();
  check_head(l, shape);
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int j = 0; j < shape.length; ++j)
    for (Eigen::Index s = 0; s < sd; ++s) {
      Eigen::Index i = encode(l, j, s, shape);
      ts.emplace_back(i, i, cd(1, 0));
    }
  return make_operator(shape.dimension(), ts);
}

ComplexOperator head_pos_projector(int j, const LatticeShape& shape) {
  shape.validate();
  check_site(j, shape);
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int h = 0; h < shape.n_head; ++h)
    for (Eigen::Index s = 0; s < sd; ++s) {
      Eigen::Index i = encode(h, j, s, shape);
      ts.emplace_back(i, i, cd(1, 0));
    }
  return make_operator(shape.dimension(), ts);
}

ComplexOperator spin_projector(int i, int j, const LatticeShape& shape) {
  shape.validate();
  if (!shape.spins)
    throw validation_error("spin_projector requires a spin sector");
  check_site(j, shape);
  if (i != 0 && i != 1) throw validation_error("spin value must be 0 or 1");
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int h = 0; h < shape.n_head; ++h)
    for (int p = 0; p < shape.length; ++p)
      for (Eigen::Index s = 0; s < sd; ++s)
        if (((s >> j) & 1) == static_cast<Eigen::Index>(i)) {
          Eigen::Index idx = encode(h, p, s, shape);
          ts.emplace_back(idx, idx, cd(1, 0));
        }
  return make_operator(shape.dimension(), ts);
}

ComplexOperator site_unitary(const Eigen::Matrix2cd& v, int j,
                             const LatticeShape& shape, const ToleranceContext& tol) {
  shape.validate();
  if (!shape.spins)
    throw validation_error("site_unitary requires a spin sector");
  check_site(j, shape);
  double res = max_abs(Eigen::MatrixXcd(v.adjoint() * v - Eigen::Matrix2cd::Identity()));
  if (res > tol.eps_zero * 100) {
    std::ostringstream os;
    os << "site action is not unitary, ||v^dag v - 1|| = " << res;
    throw validation_error(os.str());
  }
  std::vector<Triplet> ts;
  const Eigen::Index sd = shape.spin_dim();
  for (int h = 0; h < shape.n_head; ++h)
    for (int p = 0; p < shape.length; ++p)
      for (Eigen::Index s = 0; s < sd; ++s) {
        int bit = static_cast<int>((s >> j) & 1);
        for (int t = 0; t < 2; ++t) {
          cd val = v(t, bit);
          if (std::abs(val) <= tol.eps_zero) continue;
          std::uint64_t sp = (static_cast<std::uint64_t>(s) &
                              ~(std::uint64_t(1) << j)) |
                             (std::uint64_t(t) << j);
          ts.emplace_back(encode(h, p, sp, shape), encode(h, p, s, shape), val);
        }
      }
  return make_operator(shape.dimension(), ts);
}

}  // namespace qbe
