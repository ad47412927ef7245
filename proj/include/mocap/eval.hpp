#pragma once

// Inference pipeline and evaluation metrics: per-frame accuracy under
// occlusion, accuracy-precision curves under confidence thresholding,
// trajectory relabelling sweeps, and the JSON report that collects them.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mocap/checkpoint.hpp"
#include "mocap/core.hpp"
#include "mocap/sinkhorn.hpp"
#include "mocap/synthdata.hpp"
#include "mocap/trajlabel.hpp"

namespace mocap {

/// forward -> Sinkhorn -> Hungarian decode -> per-marker confidences.
/// `frame` must already be normalized.
LabelledFrameResult label_frame(const MarkerFrame& frame, const Network& net,
                                const SinkhornConfig& sinkhorn_cfg);
LabelledFrameResult label_frame(const MarkerFrame& frame, const ModelCheckpoint& checkpoint,
                                const SinkhornConfig& sinkhorn_cfg);

/// Anything that labels normalized frames. Evaluation code only talks to
/// this interface, so tests can plug in oracle or random stubs.
class FrameLabeller {
 public:
  virtual ~FrameLabeller() = default;
  virtual int n_markers() const = 0;
  virtual std::vector<LabelledFrameResult> label(std::span<const MarkerFrame> frames) const = 0;
  /// Subjects the model was trained on; evaluation refuses to score them.
  virtual std::vector<std::string> train_subjects() const { return {}; }
};

/// Batched network inference; results match label_frame up to the rounding
/// of batched versus single matrix products.
class NetworkLabeller final : public FrameLabeller {
 public:
  NetworkLabeller(const ModelCheckpoint& checkpoint, SinkhornConfig sinkhorn_cfg,
                  std::size_t chunk = 256);

  int n_markers() const override { return checkpoint_.config().n_markers; }
  std::vector<LabelledFrameResult> label(std::span<const MarkerFrame> frames) const override;
  std::vector<std::string> train_subjects() const override { return checkpoint_.meta.train_subjects; }

 private:
  const ModelCheckpoint& checkpoint_;
  SinkhornConfig sinkhorn_cfg_;
  std::size_t chunk_;
};

/// Labelled frames from held-out subjects.
struct EvalSet {
  std::vector<std::string> subjects;
  std::vector<TrainingExample> examples;  // normalized, shuffled, unoccluded
  std::size_t skipped_degenerate = 0;
};

/// Normalizes every `stride`-th frame of each sequence and shuffles it once
/// with `rng`. Degenerate frames are skipped and counted.
EvalSet make_eval_set(std::span<const Sequence> sequences, std::mt19937_64& rng,
                      std::size_t stride = 1);

/// Throws ErrorKind::data if any evaluated subject was used for training.
void require_held_out(const FrameLabeller& labeller, std::span<const std::string> subjects);

struct ResidualStats {
  std::size_t count = 0;
  double max = 0.0;
  double mean = 0.0;

  void add(double residual);
};

struct FrameEvalRow {
  int occlusions = 0;
  std::size_t frames = 0;
  std::size_t markers = 0;  // occluded markers included
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t visible_markers = 0;
  std::size_t visible_correct = 0;
  double visible_accuracy = 0.0;
};

struct FrameEval {
  std::vector<FrameEvalRow> rows;
  ResidualStats residual;
  std::size_t frames_labelled = 0;
  double seconds = 0.0;  // wall time spent labelling
};

/// For each count k, occludes exactly k markers of every example (chosen
/// uniformly from an rng seeded by `seed` and k) and measures marker
/// accuracy. Throws ErrorKind::argument for a count outside [0, N].
FrameEval eval_frames(const FrameLabeller& labeller, const EvalSet& set,
                      std::span<const int> occlusion_counts, std::uint64_t seed);

struct CurvePoint {
  double threshold = 0.0;
  std::size_t total = 0;
  std::size_t labelled = 0;
  std::size_t correct = 0;  // labelled and correct
  double labelled_fraction = 0.0;
  double precision = 1.0;  // 1 when nothing is labelled
  double accuracy = 0.0;
};

/// Labels every example once, then applies each threshold. Thresholds must
/// be ascending within [0, 1] (ErrorKind::argument otherwise).
std::vector<CurvePoint> curve_from_results(std::span<const LabelledFrameResult> results,
                                           std::span<const TrainingExample> examples,
                                           std::span<const double> thresholds);
std::vector<CurvePoint> accuracy_precision_curve(const FrameLabeller& labeller,
                                                 std::span<const TrainingExample> examples,
                                                 std::span<const double> thresholds);

/// `count` evenly spaced thresholds from 0 to 1.
std::vector<double> uniform_thresholds(int count = 101);

/// Per-frame results and trajectories of one sequence of unlabelled tracks
/// (column = track).
struct SequenceLabelling {
  /// Empty for frames that could not be normalized.
  std::vector<std::optional<LabelledFrameResult>> frames;
  /// Segmented trajectories with per-frame labels attached.
  std::vector<Trajectory> trajectories;
  std::size_t degenerate_frames = 0;
};

/// Normalizes and labels every frame, then segments tracks into
/// trajectories and attaches the per-frame label of each visible sample.
SequenceLabelling label_sequence(const FrameLabeller& labeller, std::span<const MarkerFrame> frames);

/// One winner-takes-all label per trajectory.
std::vector<RelabelResult> relabel_all(std::span<const Trajectory> trajectories,
                                       const ScoringConfig& cfg);

/// Number of (frame, label) pairs claimed by more than one trajectory.
std::size_t count_collisions(std::span<const Trajectory> trajectories,
                             std::span<const RelabelResult> labels);

struct TrajectoryConfigRow {
  ScoringConfig scoring;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t collisions = 0;
};

struct TrajectoryEvalRow {
  double ratio = 0.0;
  double occluded_fraction = 0.0;
  std::size_t sequences = 0;
  std::size_t samples = 0;  // visible marker-frame samples
  std::size_t trajectories = 0;
  std::size_t baseline_correct = 0;
  double baseline_accuracy = 0.0;
  std::vector<TrajectoryConfigRow> configs;
};

/// Shuffles the columns of each labelled sequence (seeded by `seed`), labels
/// it per frame, and scores marker-frame accuracy over visible samples for
/// the per-frame baseline and for relabelling under each scoring config.
/// Sequences without ground-truth labels are rejected (ErrorKind::data).
TrajectoryEvalRow eval_trajectories(const FrameLabeller& labeller,
                                    std::span<const Sequence> sequences,
                                    std::span<const ScoringConfig> configs, std::uint64_t seed);

/// eval_trajectories at each gap ratio, with gaps drawn from `seed`.
std::vector<TrajectoryEvalRow> trajectory_sweep(const FrameLabeller& labeller,
                                                std::span<const Sequence> sequences,
                                                std::span<const double> ratios,
                                                std::span<const ScoringConfig> configs,
                                                std::uint64_t seed);

struct EvalReport {
  /// Free-form reproducibility block: configs, seeds, fingerprints.
  nlohmann::json context = nlohmann::json::object();
  std::vector<FrameEvalRow> frames;
  std::vector<TrajectoryEvalRow> trajectories;
  std::vector<CurvePoint> curve;
  ResidualStats residual;
  std::optional<double> frames_per_second;

  nlohmann::json to_json() const;
  /// Pretty-printed with sorted keys and a trailing newline.
  std::string dump() const;
};

}  // namespace mocap
