#pragma once

// Sinkhorn normalization: alternating column and row normalization that turns
// a strictly positive square matrix into an (approximately) doubly-stochastic
// one, with exact gradients through the unrolled iterations.

#include <vector>

#include <Eigen/Core>

#include "mocap/core.hpp"

namespace mocap {

struct SinkhornConfig {
  /// Number of (column, row) normalization pairs.
  int iterations = 5;
  /// Lower bound on every normalizing sum.
  double epsilon = 1e-12;

  /// Throws ErrorKind::argument on iterations < 1 or epsilon <= 0.
  void validate() const;
};

/// Activations recorded by sinkhorn_forward for the backward pass.
struct SinkhornTape {
  struct Step {
    SquareMatrix column_input;           // matrix entering T_C
    Eigen::RowVectorXd column_divisors;  // guarded column sums
    SquareMatrix row_input;              // matrix entering T_R
    Eigen::VectorXd row_divisors;        // guarded row sums
  };
  std::vector<Step> steps;
  Eigen::Index size = 0;
};

struct SinkhornResult {
  SquareMatrix dsm;
  SinkhornTape tape;
};

/// Applies cfg.iterations pairs T_R(T_C(.)). The result is row-stochastic up
/// to rounding. Throws ErrorKind::domain on a non-positive or non-finite entry.
SinkhornResult sinkhorn_forward(const SquareMatrix& m, const SinkhornConfig& cfg);

/// Same as sinkhorn_forward without recording a tape.
SquareMatrix sinkhorn(const SquareMatrix& m, const SinkhornConfig& cfg);

/// Gradient of a scalar loss with respect to the forward input, given the
/// gradient with respect to the forward output.
SquareMatrix sinkhorn_backward(const SinkhornTape& tape, const SquareMatrix& grad_out);

/// Sum over rows and columns of (sum - 1)^2.
double dsm_residual(const SquareMatrix& d);

/// dsm_residual after each normalization pair; element k is the residual
/// after k + 1 pairs.
std::vector<double> sinkhorn_residual_trace(const SquareMatrix& m, const SinkhornConfig& cfg);

}  // namespace mocap
