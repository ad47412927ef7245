#pragma once

// Shared domain types and permutation arithmetic.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mocap/errors.hpp"

namespace mocap {

using Vec3 = Eigen::Vector3d;

/// Dense N x N matrix, row-major. Carries unconstrained scores, DSMs and
/// permutation matrices. Entry (i, j) is the belief that observed marker j
/// carries label i.
using SquareMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Position given to occluded markers in normalized space.
inline const Vec3 kOcclusionPlaceholder{0.5, 0.5, 0.5};

/// N markers with per-marker occlusion flags.
struct MarkerFrame {
  std::vector<Vec3> positions;
  std::vector<bool> occluded;
  std::int64_t frame_index = 0;

  MarkerFrame() = default;
  MarkerFrame(std::vector<Vec3> positions, std::vector<bool> occluded,
              std::int64_t frame_index = 0);
  /// All markers visible.
  explicit MarkerFrame(std::vector<Vec3> positions, std::int64_t frame_index = 0);

  std::size_t size() const noexcept { return positions.size(); }
  std::size_t visible_count() const noexcept;

  /// Throws ErrorKind::dimension if positions and flags disagree in length.
  void validate() const;

  friend bool operator==(const MarkerFrame&, const MarkerFrame&) = default;
};

/// A bijection on {0..N-1}. Applied to a frame, output marker k is input
/// marker mapping[k] (row-oriented P acting on stacked marker rows).
class Permutation {
 public:
  Permutation() = default;
  /// Throws ErrorKind::argument unless `mapping` is a bijection.
  explicit Permutation(std::vector<int> mapping);

  static Permutation identity(std::size_t n);

  std::size_t size() const noexcept { return mapping_.size(); }
  int operator[](std::size_t k) const { return mapping_[k]; }
  const std::vector<int>& mapping() const noexcept { return mapping_; }
  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> mapping_;
};

/// Permutes markers and occlusion flags: out[k] = in[p[k]].
MarkerFrame apply_permutation(const MarkerFrame& frame, const Permutation& p);

Permutation invert_permutation(const Permutation& p);

/// Composition matching matrix products: matrix(compose(p, q)) ==
/// matrix(p) * matrix(q), i.e. result[k] = q[p[k]].
Permutation compose(const Permutation& p, const Permutation& q);

/// P with P(k, p[k]) = 1, so that (P * X) stacks rows X[p[k]].
SquareMatrix permutation_to_matrix(const Permutation& p);

/// Throws ErrorKind::dimension if `m` is not square (or empty).
void require_square(const SquareMatrix& m, const char* what);

/// Per-frame output of the labelling pipeline.
struct LabelledFrameResult {
  /// permutation[j] is the label assigned to observed marker j.
  Permutation permutation;
  SquareMatrix dsm;
  /// Normalized confidence of the label assigned to each marker, in [0, 1].
  std::vector<double> confidences;
  std::int64_t frame_index = 0;
};

/// A shuffled frame and the permutation that produced it from the labelled
/// frame, so target[j] is the true label of observed marker j.
struct TrainingExample {
  MarkerFrame frame;
  Permutation target;
};

}  // namespace mocap
