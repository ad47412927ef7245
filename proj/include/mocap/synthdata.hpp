#pragma once

// Synthetic labelled marker sequences from a forward-kinematics body model,
// plus the shuffle / occlusion / gap augmentations used for training and
// evaluation.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mocap/core.hpp"

namespace mocap {

enum class MotionFamily { walk, jog, sit, jump };

std::string_view motion_family_name(MotionFamily family);
/// Throws ErrorKind::argument for an unknown name.
MotionFamily parse_motion_family(std::string_view name);

struct MotionParams {
  MotionFamily family = MotionFamily::walk;
  /// Scales every joint excursion and the global drift; 0 gives a static pose.
  double amplitude = 1.0;
  double frequency_hz = 1.0;
  double speed_mps = 1.2;      // forward speed of the root at amplitude 1
  double yaw_rate = 0.1;       // heading change in rad/s at amplitude 1
  double heading = 0.0;        // initial heading in rad
  double phase = 0.0;          // cycle phase offset in rad
};

struct Segment {
  std::string name;
  int parent = -1;
  Vec3 joint_offset = Vec3::Zero();  // joint position in the parent's frame (m)
  double length = 0.0;               // m
};

struct MarkerAttachment {
  std::string name;
  int segment = 0;
  Vec3 local_offset = Vec3::Zero();  // m, in the segment frame
};

struct BodyModel {
  std::string subject;
  int n_markers = 0;
  std::vector<Segment> skeleton;
  std::vector<MarkerAttachment> markers;
  MotionParams motion;
  std::uint64_t seed = 0;

  /// Anthropometry (segment lengths, widths, marker placement) drawn from
  /// `subject_seed`. Uses the first n_markers entries of a 41-marker layout.
  static BodyModel make(int n_markers, const std::string& subject, std::uint64_t subject_seed);

  /// Throws ErrorKind::argument for a broken skeleton or attachment.
  void validate() const;
};

/// Largest supported marker count.
inline constexpr int kMaxMarkers = 41;

/// Motion parameters for a family with randomized frequency, heading and
/// amplitude around the family's nominal values.
MotionParams random_motion(MotionFamily family, std::mt19937_64& rng);

struct SequenceHeader {
  int n_markers = 0;
  double fps = 120.0;
  std::string subject;
  std::string action;

  friend bool operator==(const SequenceHeader&, const SequenceHeader&) = default;
};

/// A recorded sequence: one column per tracked marker. labels[c] is the
/// ground-truth label of column c (empty when unknown). Occluded samples are
/// flagged and stored at the origin.
struct Sequence {
  SequenceHeader header;
  std::vector<MarkerFrame> frames;
  std::vector<int> labels;

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

/// Marker positions in millimetres over time, C^1 in t, with the root
/// drifting in position and heading. Columns are in label order.
Sequence generate_sequence(const BodyModel& body, int n_frames, double fps = 120.0);

/// Marker positions (m) of the body at time t.
std::vector<Vec3> body_pose(const BodyModel& body, double t);

/// Labelled frames paired with the identity permutation.
std::vector<TrainingExample> labelled_examples(std::span<const MarkerFrame> frames);

/// `count` independent uniform random shuffles of every example. The new
/// target composes with the old one, so applying its inverse to the output
/// frame restores the originally labelled frame.
std::vector<TrainingExample> augment_shuffle(std::span<const TrainingExample> examples, int count,
                                             std::mt19937_64& rng);

/// Occludes k ~ Uniform{0..max_count} markers per example, chosen uniformly
/// without replacement: placeholder position, flag set, target unchanged.
/// Returns the number of occlusions applied to each example.
std::vector<int> augment_occlude(std::span<TrainingExample> examples, int max_count,
                                 std::mt19937_64& rng);

/// Inserts gaps with geometric lengths (mean `mean_gap_frames`) at random
/// columns and start frames until the occluded fraction of marker-frame
/// samples equals round(ratio * samples) / samples. Never leaves a frame
/// with fewer than 4 visible markers. Throws ErrorKind::argument for a ratio
/// outside [0, 0.5].
Sequence introduce_gaps(const Sequence& sequence, double ratio, std::mt19937_64& rng,
                        double mean_gap_frames = 12.0);

/// Fraction of occluded marker-frame samples.
double occluded_fraction(const Sequence& sequence);

struct SubjectSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Disjoint split of distinct subject ids, shuffled by `seed`.
/// Throws ErrorKind::argument when there are too few subjects.
SubjectSplit split_subjects(std::vector<std::string> subjects, std::size_t n_train,
                            std::size_t n_val, std::size_t n_test, std::uint64_t seed);

/// Throws ErrorKind::data naming the first subject present in both lists.
void require_disjoint_subjects(std::span<const std::string> a, std::span<const std::string> b);

struct DatasetSpec {
  int n_markers = 41;
  int n_subjects = 20;
  int sequences_per_action = 1;
  int frames_per_sequence = 240;
  double fps = 120.0;
  std::vector<MotionFamily> actions{MotionFamily::walk, MotionFamily::jog, MotionFamily::sit,
                                    MotionFamily::jump};
  std::uint64_t seed = 1;
};

/// Subjects "s000".. with one body each and independent motion per sequence.
std::vector<Sequence> generate_dataset(const DatasetSpec& spec);

}  // namespace mocap
