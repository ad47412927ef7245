#include "mocap/sinkhorn.hpp"

#include <cmath>
#include <string>

namespace mocap {

void SinkhornConfig::validate() const {
  if (iterations < 1) fail(ErrorKind::argument, "sinkhorn iterations must be >= 1");
  if (!(epsilon > 0.0)) fail(ErrorKind::argument, "sinkhorn epsilon must be > 0");
}

namespace {

void require_positive(const SquareMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!(v > 0.0) || !std::isfinite(v)) {
        fail(ErrorKind::domain, "sinkhorn input entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") = " + std::to_string(v) +
                                    " is not strictly positive and finite");
      }
    }
  }
}

// The divisor is max(sum, epsilon): exact on already-normalized inputs and
// still guarded against vanishing sums.
Eigen::RowVectorXd column_divisors(const SquareMatrix& m, double epsilon) {
  return m.colwise().sum().cwiseMax(epsilon);
}

Eigen::VectorXd row_divisors(const SquareMatrix& m, double epsilon) {
  return m.rowwise().sum().cwiseMax(epsilon);
}

template <bool kRecord>
SquareMatrix run(const SquareMatrix& m, const SinkhornConfig& cfg, SinkhornTape* tape) {
  cfg.validate();
  require_square(m, "sinkhorn");
  require_positive(m);
  SquareMatrix current = m;
  if constexpr (kRecord) {
    tape->size = m.rows();
    tape->steps.clear();
    tape->steps.reserve(cfg.iterations);
  }
  for (int it = 0; it < cfg.iterations; ++it) {
    const Eigen::RowVectorXd cols = column_divisors(current, cfg.epsilon);
    SquareMatrix after_cols = current.array().rowwise() / cols.array();
    const Eigen::VectorXd rows = row_divisors(after_cols, cfg.epsilon);
    SquareMatrix after_rows = after_cols.array().colwise() / rows.array();
    if constexpr (kRecord) {
      tape->steps.push_back({std::move(current), cols, after_cols, rows});
    }
    current = std::move(after_rows);
  }
  return current;
}

}  // namespace

SinkhornResult sinkhorn_forward(const SquareMatrix& m, const SinkhornConfig& cfg) {
  SinkhornResult result;
  result.dsm = run<true>(m, cfg, &result.tape);
  return result;
}

SquareMatrix sinkhorn(const SquareMatrix& m, const SinkhornConfig& cfg) {
  return run<false>(m, cfg, nullptr);
}

SquareMatrix sinkhorn_backward(const SinkhornTape& tape, const SquareMatrix& grad_out) {
  if (grad_out.rows() != tape.size || grad_out.cols() != tape.size || tape.steps.empty()) {
    fail(ErrorKind::dimension, "sinkhorn_backward: gradient is " +
                                   std::to_string(grad_out.rows()) + "x" +
                                   std::to_string(grad_out.cols()) + ", tape holds " +
                                   std::to_string(tape.size) + "x" + std::to_string(tape.size));
  }
  // For Y = X / s with s the guarded sum: dX = (dY - <dY, Y>) / s, where the
  // inner product runs along the normalized direction. A clamped divisor is
  // constant, so only the first term survives.
  SquareMatrix grad = grad_out;
  for (auto step = tape.steps.rbegin(); step != tape.steps.rend(); ++step) {
    {
      const SquareMatrix& x = step->row_input;
      const Eigen::VectorXd& s = step->row_divisors;
      const Eigen::VectorXd raw = x.rowwise().sum();
      SquareMatrix next(grad.rows(), grad.cols());
      for (Eigen::Index i = 0; i < grad.rows(); ++i) {
        const bool clamped = raw(i) < s(i);
        const double inner = clamped ? 0.0 : grad.row(i).dot(x.row(i)) / s(i);
        next.row(i) = (grad.row(i).array() - inner) / s(i);
      }
      grad = std::move(next);
    }
    {
      const SquareMatrix& x = step->column_input;
      const Eigen::RowVectorXd& s = step->column_divisors;
      const Eigen::RowVectorXd raw = x.colwise().sum();
      SquareMatrix next(grad.rows(), grad.cols());
      for (Eigen::Index j = 0; j < grad.cols(); ++j) {
        const bool clamped = raw(j) < s(j);
        const double inner = clamped ? 0.0 : grad.col(j).dot(x.col(j)) / s(j);
        next.col(j) = (grad.col(j).array() - inner) / s(j);
      }
      grad = std::move(next);
    }
  }
  return grad;
}

double dsm_residual(const SquareMatrix& d) {
  require_square(d, "dsm_residual");
  return (d.rowwise().sum().array() - 1.0).square().sum() +
         (d.colwise().sum().array() - 1.0).square().sum();
}

std::vector<double> sinkhorn_residual_trace(const SquareMatrix& m, const SinkhornConfig& cfg) {
  const SinkhornResult r = sinkhorn_forward(m, cfg);
  std::vector<double> trace;
  trace.reserve(r.tape.steps.size());
  for (std::size_t k = 1; k < r.tape.steps.size(); ++k) {
    trace.push_back(dsm_residual(r.tape.steps[k].column_input));
  }
  trace.push_back(dsm_residual(r.dsm));
  return trace;
}

}  // namespace mocap
