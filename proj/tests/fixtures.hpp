#pragma once
// Frozen outputs of the independent oracle (tests/oracle/fixture_gen.cpp);
// the raw run is kept in tests/oracle/fixtures_expected.txt and re-diffed by
// the oracle_fixtures ctest. Values here are what the acceptance and unit
// suites compare the library against.

#include <cstddef>

namespace fixtures {

// Two-head-state reflecting walk, Fourier v00, open L=8, marker bits at
// sites 2 and 6, start |head 0, site 3>. ||T^n psi|| for n = 0..12.
inline constexpr double kReflectingWalkNorms[13] = {
    1.0,
    1.0,
    1.0,
    1.0,
    1.0,
    0.70710678118654735,
    0.5,
    0.35355339059327368,
    0.35355339059327368,
    0.0,
    0.0,
    0.0,
    0.0,
};
// Strict-decrease window: steps where the site action eats amplitude.
inline constexpr int kReflectingWalkDecreaseFirst = 5;
inline constexpr int kReflectingWalkDecreaseLast = 7;

// No-motion machine, open L=8, marker bits at sites 2 and 6: maximal chains
// of computational basis states (head positions).
inline constexpr int kZeroMotionChainA[3] = {0, 1, 2};
inline constexpr int kZeroMotionChainB[4] = {3, 4, 5, 6};
inline constexpr int kZeroMotionZeroLengthSite = 7;

// Five-head-state branching walk, Fourier site action, open L=12, segment
// marker at M=1 with n zero sites. Family = main chain + sibling chain,
// orthonormal, both seeds annihilated by the adjoint.
inline constexpr int kBranchingN[2] = {2, 3};
inline constexpr int kBranchingMainLen[2] = {6, 7};  // n + 4
inline constexpr int kBranchingSiblingLen = 3;
inline constexpr int kBranchingTotal[2] = {9, 10};  // n + 7

}  // namespace fixtures
