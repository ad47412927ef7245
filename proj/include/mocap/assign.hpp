#pragma once

// Decoding a doubly-stochastic matrix to its nearest permutation.

#include "mocap/core.hpp"

namespace mocap {

struct AssignmentResult {
  /// permutation[j] is the row (label) assigned to column (marker) j.
  Permutation permutation;
  /// Sum over j of cost(permutation[j], j), accumulated in column order.
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching of columns to rows (Kuhn-Munkres, O(N^3)).
/// Among optimal matchings the lexicographically smallest mapping is
/// returned. Throws ErrorKind::dimension for non-square input.
AssignmentResult solve_assignment(const SquareMatrix& cost);

/// Hungarian decoding of a DSM with cost matrix C = 1 - D.
AssignmentResult decode(const SquareMatrix& d);

/// Largest N accepted by brute_force_decode.
inline constexpr Eigen::Index kBruteForceLimit = 8;

/// Exhaustive minimum of sum (1 - D) over all N! permutations, first
/// (lexicographically smallest) minimizer kept. Throws ErrorKind::argument
/// for N > kBruteForceLimit.
AssignmentResult brute_force_decode(const SquareMatrix& d);

/// Cost of a given assignment, accumulated the same way as decode.
double assignment_cost(const SquareMatrix& cost, const Permutation& p);

}  // namespace mocap
