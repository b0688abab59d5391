#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbe/halmos_wallen.hpp"
#include "qbe/operators.hpp"
#include "qbe/report.hpp"

namespace qbe {

// H = K(2 - T - Tdag). Hermitian by construction; for a partial isometry T
// the spectrum lies in [0, 4K].
struct Hamiltonian {
  ComplexOperator matrix;
  double K = 1.0;
  std::optional<ComplexOperator> source;  // the T it was built from
};
Hamiltonian feynman_hamiltonian(const ComplexOperator& T, double K);

struct Spectrum {
  Eigen::VectorXd energies;     // ascending
  Eigen::MatrixXcd vectors;     // orthonormal columns, phase fixed
};
Spectrum spectrum(const Hamiltonian& H, Eigen::Index dense_cap = 4096);

// Closed-form spectra of the canonical components, E_k = 2K(1 - cos k).
//   cycle(M):            k = 2 pi m / (M+1),  m = 1..M+1   (M+1 states)
//   truncated_shift(N):  k = m pi / (N+1),    m = 1..N
//   bound_band(W):       k = m pi / (W+2),    m = 1..W+1
//   isometric_standing_wave: continuum of momenta; empty on any finite
//   truncation (open topology produces truncated shifts instead).
enum class PredictionKind { cycle, truncated_shift, isometric_standing_wave, bound_band };
struct SpectrumPrediction {
  PredictionKind kind;
  int parameter = 0;  // M, N, or W
  std::vector<double> momenta;
  std::vector<double> energies;
  int multiplicity = 1;  // copies per level (spin-sector degeneracy)
};
SpectrumPrediction predicted_spectrum(PredictionKind kind, int parameter, double K,
                                      int multiplicity = 1);

// Component-local eigenvector profile for level m (1-based), normalized,
// first significant component real positive.
Eigen::VectorXcd predicted_eigenvector(PredictionKind kind, int parameter, int m);

// Per-component comparison of the exact spectrum restricted to the
// decomposition's reducing subspaces against the closed-form predictions.
struct SpectrumCheck {
  bool verdict = false;
  double worst_energy_residual = 0;
  double worst_overlap_deficit = 0;
  std::string detail;
};
SpectrumCheck verify_spectrum(const Hamiltonian& H, const Decomposition& D,
                              const std::vector<SpectrumPrediction>& predictions,
                              const ToleranceContext& tol = tolerances());

// psi(t) = exp(-iHt) psi0 via the spectral decomposition, one decomposition
// shared across all times. Norm drift beyond 1e-9 is an internal error.
std::vector<Eigen::VectorXcd> evolve(const Hamiltonian& H,
                                     const Eigen::VectorXcd& psi0,
                                     const std::vector<double>& times,
                                     Eigen::Index dense_cap = 4096);

// Probability per chain. The origin chain is the one carrying the largest
// probability; leakage is everything outside it.
struct SupportProfile {
  std::vector<double> chain_probability;  // aligned with paths.chains
  double zero_length_probability = 0;
  Eigen::Index origin_chain = -1;  // -1 means the zero-length bucket
  double leakage = 0;
};
SupportProfile path_support_profile(const Eigen::VectorXcd& psi, const PathSet& paths,
                                    const Basis& B);

// Gaussian packet centred on a chain, optional momentum k0 along it.
struct WavePacket {
  Eigen::Index origin = 0;  // basis index of the packet centre
  std::vector<cd> coefficients;
  Eigen::VectorXcd vector;
};
WavePacket wave_packet(const PathSet& paths, const Basis& B, Eigen::Index chain,
                       double centre, double width, double k0 = 0.0);

// Theorem-style reconstruction of a step operator from a ballistic
// Hamiltonian: constant diagonal 2K, off-diagonal entries all equal to one
// constant c = -K, at most two neighbours per state. Orientation is fixed
// deterministically (smallest basis index is the adjoint-terminus; cycles
// run from their smallest index toward its smaller-index neighbour); an
// explicit orientation mask flips individual paths.
struct ReconstructionResult {
  ComplexOperator T_prime;
  std::vector<bool> directions;  // per path, true = default orientation
  cd c;
  double K = 0;
  PathSet paths;
};
ReconstructionResult reconstruct_step_operator(
    const Hamiltonian& H, const Basis& B, const ToleranceContext& tol = tolerances(),
    const std::optional<std::vector<bool>>& orientation = std::nullopt);

// Bound-band energies against the continuum dispersion c (m pi / D)^2 at
// fixed physical width D = (W+2) d0: each halving of the lattice spacing d
// doubles the site count of the band, and the relative deviation falls as
// d^2 (the cosine expansion's k^2/12 term).
struct ContinuumRow {
  double d = 0;
  int W_eff = 0;
  int m = 0;
  double exact = 0, continuum = 0, ratio = 0, deviation = 0;
};
std::vector<ContinuumRow> continuum_limit_check(int W, double c,
                                                const std::vector<double>& d_values);

}  // namespace qbe
