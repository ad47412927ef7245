#include "mocap/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace mocap {

namespace {

// Relative size below which a third moment is treated as zero.
constexpr double kMomentTolerance = 1e-12;
// Relative extent below which an aligned axis is treated as flat.
constexpr double kExtentTolerance = 1e-9;

Vec3 orient_axis(const Vec3& axis, std::span<const Vec3> points) {
  double moment = 0.0;
  double magnitude = 0.0;
  for (const Vec3& p : points) {
    const double s = axis.dot(p);
    moment += s * s * s;
    magnitude += std::abs(s * s * s);
  }
  if (std::abs(moment) > kMomentTolerance * magnitude) {
    return moment < 0.0 ? Vec3(-axis) : axis;
  }
  // Fallback: the largest projection points along +axis.
  double best = 0.0;
  double best_abs = -1.0;
  for (const Vec3& p : points) {
    const double s = axis.dot(p);
    if (std::abs(s) > best_abs) {
      best_abs = std::abs(s);
      best = s;
    }
  }
  return best < 0.0 ? Vec3(-axis) : axis;
}

}  // namespace

Eigen::Matrix3d sign_disambiguate(const Eigen::Matrix3d& eigenvectors,
                                  std::span<const Vec3> centered_points) {
  const Vec3 pc1 = orient_axis(eigenvectors.col(0), centered_points);
  const Vec3 pc2 = orient_axis(eigenvectors.col(1), centered_points);
  Eigen::Matrix3d basis;
  basis.col(0) = pc2;
  basis.col(1) = pc1.cross(pc2);
  basis.col(2) = pc1;
  return basis;
}

NormalizedFrame normalize_frame(const MarkerFrame& frame) {
  frame.validate();
  std::vector<Vec3> visible;
  visible.reserve(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) {
    if (!frame.occluded[k]) {
      if (!frame.positions[k].allFinite()) {
        fail(ErrorKind::domain, "visible marker " + std::to_string(k) + " is not finite");
      }
      visible.push_back(frame.positions[k]);
    }
  }
  if (visible.size() < kMinVisibleMarkers) {
    fail(ErrorKind::degenerate_frame,
         "frame " + std::to_string(frame.frame_index) + " has " +
             std::to_string(visible.size()) + " visible markers, need at least " +
             std::to_string(kMinVisibleMarkers));
  }

  NormalizationRecord record;
  record.centroid.setZero();
  for (const Vec3& p : visible) record.centroid += p;
  record.centroid /= static_cast<double>(visible.size());

  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  for (Vec3& p : visible) {
    p -= record.centroid;
    covariance += p * p.transpose();
  }
  covariance /= static_cast<double>(visible.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::degenerate_frame, "eigen decomposition failed");
  }
  // Eigenvalues ascend; reorder columns by decreasing variance.
  Eigen::Matrix3d axes;
  axes.col(0) = solver.eigenvectors().col(2);
  axes.col(1) = solver.eigenvectors().col(1);
  axes.col(2) = solver.eigenvectors().col(0);
  record.rotation = sign_disambiguate(axes, visible);

  std::vector<Vec3> aligned(visible.size());
  record.axis_min.setConstant(std::numeric_limits<double>::infinity());
  record.axis_max.setConstant(-std::numeric_limits<double>::infinity());
  double spread = 0.0;
  for (std::size_t k = 0; k < visible.size(); ++k) {
    aligned[k] = record.rotation.transpose() * visible[k];
    record.axis_min = record.axis_min.cwiseMin(aligned[k]);
    record.axis_max = record.axis_max.cwiseMax(aligned[k]);
    spread = std::max(spread, aligned[k].norm());
  }
  const Vec3 extent = record.axis_max - record.axis_min;
  for (int a = 0; a < 3; ++a) {
    if (!(extent[a] > kExtentTolerance * spread)) {
      fail(ErrorKind::degenerate_frame, "frame " + std::to_string(frame.frame_index) +
                                            " has zero extent along aligned axis " +
                                            std::to_string(a));
    }
  }

  NormalizedFrame out;
  out.record = record;
  out.frame.frame_index = frame.frame_index;
  out.frame.occluded = frame.occluded;
  out.frame.positions.resize(frame.size());
  std::size_t v = 0;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    if (frame.occluded[k]) {
      out.frame.positions[k] = kOcclusionPlaceholder;
      continue;
    }
    Vec3 s = (aligned[v++] - record.axis_min).cwiseQuotient(extent);
    // Rounding guard; extremes already map to exactly 0 and 1.
    for (int a = 0; a < 3; ++a) s[a] = std::clamp(s[a], 0.0, 1.0);
    out.frame.positions[k] = s;
  }
  return out;
}

MarkerFrame denormalize_frame(const MarkerFrame& frame, const NormalizationRecord& record) {
  frame.validate();
  MarkerFrame out = frame;
  const Vec3 extent = record.axis_max - record.axis_min;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    if (frame.occluded[k]) continue;
    const Vec3 aligned = record.axis_min + frame.positions[k].cwiseProduct(extent);
    out.positions[k] = record.rotation * aligned + record.centroid;
  }
  return out;
}

}  // namespace mocap
