#pragma once

// Confidence of per-frame assignments, trajectory segmentation and
// winner-takes-all trajectory relabelling.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mocap/core.hpp"

namespace mocap {

/// Belief in `label` for `marker` minus the strongest competing belief in
/// the same column: D[i, j] - max_{k != i} D[k, j], in [-1, 1] for a DSM.
/// Throws ErrorKind::argument for N < 2 or indices out of range.
double confidence(const SquareMatrix& d, int label, int marker);

/// Maps a confidence in [-1, 1] to (c + 1) / 2 in [0, 1].
/// Throws ErrorKind::argument outside [-1, 1].
double normalize_confidence(double c);

/// Normalized confidence of the label `assignment[j]` for each marker j.
std::vector<double> assignment_confidences(const SquareMatrix& d, const Permutation& assignment);

struct LabelObservation {
  std::int64_t frame_index = 0;
  int label = 0;
  double confidence = 0.0;  // normalized, in [0, 1]
};

/// A maximal gap-free run of one tracked marker.
struct Trajectory {
  int track_id = 0;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  std::vector<Vec3> positions;
  std::vector<LabelObservation> per_frame_labels;

  std::size_t length() const noexcept { return positions.size(); }
};

struct TrackedObservation {
  int track_id = 0;
  Vec3 position = Vec3::Zero();
};

struct TrackedFrame {
  std::int64_t frame_index = 0;
  std::vector<TrackedObservation> observations;
};

/// Splits observations into trajectories. A track's trajectory ends when the
/// track is missing from a frame or frame indices jump. Trajectories are
/// ordered by start frame, then track id. Throws ErrorKind::data for a
/// repeated track id within a frame or non-increasing frame indices.
std::vector<Trajectory> segment_trajectories(std::span<const TrackedFrame> frames);

/// Tracked frames from column-per-track marker frames: track id = column,
/// occluded samples are absent.
std::vector<TrackedFrame> tracked_frames(std::span<const MarkerFrame> frames);

struct ScoringConfig {
  double p = 2.0;
  double q = -0.5;

  void validate() const;
  friend bool operator==(const ScoringConfig&, const ScoringConfig&) = default;
};

/// |T_i|^q * (sum_{t in T_i} c_t^p)^(1/p) over the frames T_i where `label`
/// was assigned; for p = 0 the second factor is |T_i|.
/// Throws ErrorKind::argument when the label never occurs.
double score_label(const Trajectory& trajectory, int label, const ScoringConfig& cfg);

struct RelabelResult {
  int label = 0;
  double score = 0.0;
};

/// Highest-scoring candidate label; ties go to the smaller label.
/// Throws ErrorKind::argument when no frame carries a label.
RelabelResult relabel_trajectory(const Trajectory& trajectory, const ScoringConfig& cfg);

/// Labels with normalized confidence >= threshold; the rest are unset.
struct PartialLabelling {
  std::vector<std::optional<int>> labels;
  std::size_t labelled_count() const noexcept;
};

PartialLabelling threshold_filter(const LabelledFrameResult& result, double threshold);

}  // namespace mocap
