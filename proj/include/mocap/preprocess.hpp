#pragma once

// Per-frame normalization: translation, orientation and size invariance.

#include <span>

#include <Eigen/Core>

#include "mocap/core.hpp"

namespace mocap {

/// Parameters of the transform applied by normalize_frame, kept so the
/// transform can be inverted.
struct NormalizationRecord {
  Vec3 centroid = Vec3::Zero();
  /// Columns are the x, y, z axes of the aligned frame expressed in the
  /// input frame; aligned = rotation^T * (p - centroid).
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 axis_min = Vec3::Zero();
  Vec3 axis_max = Vec3::Ones();
};

struct NormalizedFrame {
  MarkerFrame frame;
  NormalizationRecord record;
};

/// Minimum number of visible markers for a well-defined 3D covariance.
inline constexpr std::size_t kMinVisibleMarkers = 4;

/// Centres the visible markers, rotates the largest principal component onto
/// z and the second onto x, then min-max scales each axis into [0, 1].
/// Occluded markers are excluded from every statistic and come out at the
/// placeholder position.
///
/// Throws ErrorKind::degenerate_frame with fewer than kMinVisibleMarkers
/// visible markers or when any aligned axis has zero extent.
NormalizedFrame normalize_frame(const MarkerFrame& frame);

/// Fixes the sign of PCA axes. `eigenvectors` holds unit principal axes as
/// columns, ordered by decreasing variance. Each of the first two axes is
/// oriented so the third moment of the projections onto it is non-negative;
/// when that moment vanishes the axis is oriented so the projection of
/// largest magnitude (lowest index on ties) is positive. Returns the aligned
/// basis with columns (x, y, z) = (pc2, pc1 x pc2, pc1), det = +1.
Eigen::Matrix3d sign_disambiguate(const Eigen::Matrix3d& eigenvectors,
                                  std::span<const Vec3> centered_points);

/// Inverse of normalize_frame on visible markers; occluded markers keep their
/// flag and position.
MarkerFrame denormalize_frame(const MarkerFrame& frame, const NormalizationRecord& record);

}  // namespace mocap
