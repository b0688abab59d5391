#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qbe/dynamics.hpp"
#include "qbe/lattice.hpp"
#include "qbe/qtm.hpp"

using namespace qbe;

namespace {

ComplexOperator open_shift(int n) {
  LatticeShape s;
  s.length = n;
  s.topology = Topology::open;
  return head_shift(s);
}

ComplexOperator cyclic_shift(int n) {
  LatticeShape s;
  s.length = n;
  s.topology = Topology::cyclic;
  return head_shift(s);
}

}  // namespace

TEST_CASE("the Hamiltonian is hermitian with spectrum in the allowed band") {
  Hamiltonian H = feynman_hamiltonian(open_shift(6), 2.0);
  CHECK(max_abs(subtract(H.matrix, adjoint(H.matrix))) < 1e-14);
  Spectrum s = spectrum(H);
  CHECK(s.energies.minCoeff() > -1e-12);
  CHECK(s.energies.maxCoeff() < 8.0 + 1e-12);
  CHECK_THROWS_AS(feynman_hamiltonian(open_shift(3), 0.0), validation_error);
  CHECK_THROWS_AS(feynman_hamiltonian(open_shift(3), -1.0), validation_error);
}

TEST_CASE("spectrum returns ascending energies and true eigenpairs") {
  Hamiltonian H = feynman_hamiltonian(cyclic_shift(7), 1.0);
  Spectrum s = spectrum(H);
  REQUIRE(s.energies.size() == 7);
  CHECK(std::is_sorted(s.energies.data(), s.energies.data() + 7));
  const Eigen::MatrixXcd Hd = to_dense(H.matrix);
  for (Eigen::Index k = 0; k < 7; ++k)
    CHECK((Hd * s.vectors.col(k) - s.energies(k) * s.vectors.col(k)).norm() <
          1e-10);
  Eigen::MatrixXcd g = s.vectors.adjoint() * s.vectors;
  g.diagonal().array() -= 1.0;
  CHECK(max_abs(g) < 1e-10);
}

TEST_CASE("spectrum refuses dimensions beyond the dense cap") {
  Hamiltonian H = feynman_hamiltonian(open_shift(8), 1.0);
  CHECK_THROWS_AS(spectrum(H, 4), validation_error);
}

TEST_CASE("closed-form levels match direct diagonalization") {
  const double K = 1.5;

  SpectrumPrediction shift = predicted_spectrum(PredictionKind::truncated_shift, 6, K);
  REQUIRE(shift.energies.size() == 6);
  Spectrum s1 = spectrum(feynman_hamiltonian(open_shift(6), K));
  std::vector<double> want1 = shift.energies;
  std::sort(want1.begin(), want1.end());
  for (int i = 0; i < 6; ++i)
    CHECK(s1.energies(i) == doctest::Approx(want1[i]).epsilon(1e-12));

  SpectrumPrediction cyc = predicted_spectrum(PredictionKind::cycle, 4, K);
  REQUIRE(cyc.energies.size() == 5);
  Spectrum s2 = spectrum(feynman_hamiltonian(cyclic_shift(5), K));
  std::vector<double> want2 = cyc.energies;
  std::sort(want2.begin(), want2.end());
  for (int i = 0; i < 5; ++i)
    CHECK(s2.energies(i) == doctest::Approx(want2[i]).epsilon(1e-12));

  // A width-W band between markers is the W+1 site truncated shift.
  SpectrumPrediction band = predicted_spectrum(PredictionKind::bound_band, 4, K);
  SpectrumPrediction shift5 = predicted_spectrum(PredictionKind::truncated_shift, 5, K);
  REQUIRE(band.energies.size() == shift5.energies.size());
  for (std::size_t i = 0; i < band.energies.size(); ++i)
    CHECK(band.energies[i] == doctest::Approx(shift5.energies[i]).epsilon(1e-14));
}

TEST_CASE("predicted eigenvectors are true eigenvectors of the shift Hamiltonian") {
  const int N = 7;
  Hamiltonian H = feynman_hamiltonian(open_shift(N), 1.0);
  const Eigen::MatrixXcd Hd = to_dense(H.matrix);
  SpectrumPrediction p = predicted_spectrum(PredictionKind::truncated_shift, N, 1.0);
  for (int m = 1; m <= N; ++m) {
    Eigen::VectorXcd v = predicted_eigenvector(PredictionKind::truncated_shift, N, m);
    REQUIRE(v.size() == N);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    CHECK((Hd * v - p.energies[m - 1] * v).norm() < 1e-10);
  }
}

TEST_CASE("standing waves carry no finite levels") {
  CHECK(predicted_spectrum(PredictionKind::isometric_standing_wave, 5, 1.0)
            .energies.empty());
  CHECK_THROWS_AS(predicted_eigenvector(PredictionKind::isometric_standing_wave, 5, 1),
                  validation_error);
}

TEST_CASE("spectrum verification certifies matching components") {
  ComplexOperator T = open_shift(8);
  Hamiltonian H = feynman_hamiltonian(T, 1.0);
  Decomposition D = decompose(T);
  SpectrumCheck ok = verify_spectrum(
      H, D, {predicted_spectrum(PredictionKind::truncated_shift, 8, 1.0)});
  CHECK(ok.verdict);
  CHECK(ok.worst_energy_residual < 1e-10);
  CHECK(ok.worst_overlap_deficit < 1e-8);

  SpectrumCheck wrong = verify_spectrum(
      H, D, {predicted_spectrum(PredictionKind::truncated_shift, 7, 1.0)});
  CHECK(!wrong.verdict);
  CHECK(!wrong.detail.empty());
}

TEST_CASE("spectrum verification covers mixed decompositions") {
  ComplexOperator T = make_operator(
      6, {{1, 0, cd(1, 0)}, {0, 1, cd(1, 0)}, {3, 2, cd(1, 0)}, {5, 4, cd(1, 0)}});
  Hamiltonian H = feynman_hamiltonian(T, 1.0);
  Decomposition D = decompose(T);
  SpectrumCheck ok = verify_spectrum(
      H, D,
      {predicted_spectrum(PredictionKind::cycle, 1, 1.0),
       predicted_spectrum(PredictionKind::truncated_shift, 2, 1.0, 2),
       predicted_spectrum(PredictionKind::isometric_standing_wave, 0, 1.0)});
  CHECK(ok.verdict);
}

TEST_CASE("time evolution conserves the norm and solves the equation of motion") {
  Hamiltonian H = feynman_hamiltonian(cyclic_shift(8), 1.0);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(8);
  psi0(0) = cd(1 / std::sqrt(2.0), 0);
  psi0(3) = cd(0, 1 / std::sqrt(2.0));

  std::vector<Eigen::VectorXcd> states = evolve(H, psi0, {0.0, 0.5, 4.0});
  CHECK((states[0] - psi0).norm() < 1e-12);
  for (const auto& psi : states) CHECK(std::abs(psi.norm() - 1.0) < 1e-10);

  const double eps = 1e-4;
  Eigen::VectorXcd stepped = evolve(H, psi0, {eps})[0];
  Eigen::VectorXcd derivative = (stepped - psi0) / eps;
  Eigen::VectorXcd want = cd(0, -1) * (to_dense(H.matrix) * psi0);
  CHECK((derivative - want).norm() < 1e-3);

  CHECK_THROWS_AS(evolve(H, Eigen::VectorXcd::Zero(5), {0.0}), validation_error);
}

TEST_CASE("support profiles locate the packet and measure leakage") {
  PathSet paths;
  paths.chains.push_back({PathSet::Kind::open_chain, {0, 1, 2}});
  paths.chains.push_back({PathSet::Kind::open_chain, {3, 4}});
  paths.zero_length = {5};
  Basis comp;
  comp.dim = 6;

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(6);
  psi(1) = 1;
  SupportProfile sp = path_support_profile(psi, paths, comp);
  CHECK(sp.origin_chain == 0);
  CHECK(sp.chain_probability[0] == doctest::Approx(1.0));
  CHECK(sp.chain_probability[1] == doctest::Approx(0.0));
  CHECK(sp.leakage == doctest::Approx(0.0));

  Eigen::VectorXcd mixed = Eigen::VectorXcd::Zero(6);
  mixed(3) = std::sqrt(0.3);
  mixed(5) = std::sqrt(0.7);
  SupportProfile sp2 = path_support_profile(mixed, paths, comp);
  CHECK(sp2.origin_chain == -1);  // the zero-length bucket dominates
  CHECK(sp2.zero_length_probability == doctest::Approx(0.7));
  CHECK(sp2.leakage == doctest::Approx(0.3));
}

TEST_CASE("wave packets sit on their chain, normalized") {
  PathSet paths;
  paths.chains.push_back({PathSet::Kind::open_chain, {2, 4, 6, 8, 10}});
  Basis comp;
  comp.dim = 12;
  WavePacket w = wave_packet(paths, comp, 0, 2.0, 1.0, 0.7);
  CHECK(w.origin == 6);
  CHECK(std::abs(w.vector.norm() - 1.0) < 1e-12);
  for (Eigen::Index i : {0, 1, 3, 5, 7, 9, 11})
    CHECK(std::abs(w.vector(i)) == 0.0);
  // Momentum shows up as a phase gradient along the chain.
  const cd r = w.vector(8) * std::conj(w.vector(6));
  CHECK(std::arg(r) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("step operators visible in a ballistic Hamiltonian are recovered") {
  std::mt19937 rng(271828);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index dim = 6 + (trial % 4) * 6;
    std::vector<Eigen::Index> idx(dim);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Triplet> entries;
    std::size_t at = 0;
    while (at < idx.size()) {
      const int kind = pick(rng);
      if (kind == 0 && at + 3 <= idx.size()) {  // 3-cycle
        entries.emplace_back(idx[at + 1], idx[at], cd(1, 0));
        entries.emplace_back(idx[at + 2], idx[at + 1], cd(1, 0));
        entries.emplace_back(idx[at], idx[at + 2], cd(1, 0));
        at += 3;
      } else if (kind == 1 && at + 2 <= idx.size()) {  // 2-chain
        entries.emplace_back(idx[at + 1], idx[at], cd(1, 0));
        at += 2;
      } else {
        at += 1;  // isolated state
      }
    }
    ComplexOperator T = make_operator(dim, entries);
    Hamiltonian H = feynman_hamiltonian(T, 1.0);
    Basis comp;
    comp.dim = dim;
    ReconstructionResult rec = reconstruct_step_operator(H, comp);
    CHECK(rec.K == doctest::Approx(1.0));
    CHECK(std::abs(rec.c - cd(-1, 0)) < 1e-10);
    Hamiltonian H2 = feynman_hamiltonian(rec.T_prime, rec.K);
    CHECK(max_abs(subtract(H2.matrix, H.matrix)) < 1e-10);
  }
}

TEST_CASE("orientation masks flip individual paths without changing the Hamiltonian") {
  ComplexOperator T = make_operator(
      7, {{1, 0, cd(1, 0)}, {2, 1, cd(1, 0)}, {4, 3, cd(1, 0)},
          {5, 4, cd(1, 0)}, {6, 5, cd(1, 0)}, {3, 6, cd(1, 0)}});
  Hamiltonian H = feynman_hamiltonian(T, 2.0);
  Basis comp;
  comp.dim = 7;
  ReconstructionResult rec = reconstruct_step_operator(H, comp);
  REQUIRE(rec.directions.size() == rec.paths.chains.size());

  std::vector<bool> flipped = rec.directions;
  flipped[0] = !flipped[0];
  ReconstructionResult rec2 = reconstruct_step_operator(H, comp, tolerances(), flipped);
  CHECK(max_abs(subtract(rec2.T_prime, rec.T_prime)) > 0.5);
  CHECK(max_abs(subtract(feynman_hamiltonian(rec2.T_prime, rec2.K).matrix,
                         H.matrix)) < 1e-10);
}

TEST_CASE("reconstruction rejects Hamiltonians without ballistic structure") {
  // Branch vertex: state 0 couples to three neighbours.
  ComplexOperator bad = make_operator(
      4, {{1, 0, cd(-1, 0)}, {0, 1, cd(-1, 0)}, {2, 0, cd(-1, 0)},
          {0, 2, cd(-1, 0)}, {3, 0, cd(-1, 0)}, {0, 3, cd(-1, 0)}});
  ComplexOperator diag = scale(identity_op(4), cd(2, 0));
  Hamiltonian H;
  H.matrix = add(diag, bad);
  H.K = 1.0;
  Basis comp;
  comp.dim = 4;
  CHECK_THROWS_AS(reconstruct_step_operator(H, comp), validation_error);
}

TEST_CASE("halving the spacing quarters the continuum deviation") {
  const int W = 4;
  std::vector<ContinuumRow> rows = continuum_limit_check(W, 1.0, {1.0, 0.5, 0.25});
  REQUIRE(rows.size() == 3 * (W + 1));
  CHECK(rows[0].W_eff == W);
  CHECK(rows[W + 1].W_eff == 2 * (W + 2) - 2);
  for (int m = 0; m <= W; ++m) {
    const double r1 = rows[m].deviation / rows[m + (W + 1)].deviation;
    const double r2 = rows[m + (W + 1)].deviation / rows[m + 2 * (W + 1)].deviation;
    CHECK(r1 > 3.2);
    CHECK(r1 < 4.8);
    CHECK(r2 > 3.2);
    CHECK(r2 < 4.8);
  }
  CHECK_THROWS_AS(continuum_limit_check(0, 1.0, {1.0}), validation_error);
  CHECK_THROWS_AS(continuum_limit_check(4, 1.0, {1.0, 0.7}), validation_error);
}
