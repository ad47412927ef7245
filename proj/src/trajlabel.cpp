#include "mocap/trajlabel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace mocap {

double confidence(const SquareMatrix& d, int label, int marker) {
  require_square(d, "confidence");
  const auto n = static_cast<int>(d.rows());
  if (n < 2) fail(ErrorKind::argument, "confidence needs N >= 2 for a runner-up");
  if (label < 0 || label >= n || marker < 0 || marker >= n) {
    fail(ErrorKind::argument, "confidence index out of range");
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    if (k != label) runner_up = std::max(runner_up, d(k, marker));
  }
  return d(label, marker) - runner_up;
}

double normalize_confidence(double c) {
  constexpr double slack = 1e-9;
  if (!(c >= -1.0 - slack && c <= 1.0 + slack)) {
    fail(ErrorKind::argument, "confidence " + std::to_string(c) + " outside [-1, 1]");
  }
  return std::clamp((c + 1.0) / 2.0, 0.0, 1.0);
}

std::vector<double> assignment_confidences(const SquareMatrix& d, const Permutation& assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != d.rows()) {
    fail(ErrorKind::dimension, "assignment size does not match DSM");
  }
  std::vector<double> out(assignment.size());
  for (std::size_t j = 0; j < assignment.size(); ++j) {
    out[j] = normalize_confidence(confidence(d, assignment[j], static_cast<int>(j)));
  }
  return out;
}

std::vector<Trajectory> segment_trajectories(std::span<const TrackedFrame> frames) {
  std::vector<Trajectory> done;
  std::map<int, Trajectory> open;
  std::int64_t previous_index = std::numeric_limits<std::int64_t>::min();
  for (const TrackedFrame& frame : frames) {
    if (frame.frame_index <= previous_index) {
      fail(ErrorKind::data, "frame indices must increase, got " +
                                std::to_string(frame.frame_index) + " after " +
                                std::to_string(previous_index));
    }
    const bool jumped = previous_index != std::numeric_limits<std::int64_t>::min() &&
                        frame.frame_index != previous_index + 1;
    previous_index = frame.frame_index;

    std::map<int, const TrackedObservation*> present;
    for (const TrackedObservation& obs : frame.observations) {
      if (!present.emplace(obs.track_id, &obs).second) {
        fail(ErrorKind::data, "track " + std::to_string(obs.track_id) +
                                  " appears twice in frame " + std::to_string(frame.frame_index));
      }
    }
    for (auto it = open.begin(); it != open.end();) {
      if (jumped || !present.contains(it->first)) {
        done.push_back(std::move(it->second));
        it = open.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& [track, obs] : present) {
      auto [it, inserted] = open.try_emplace(track);
      Trajectory& t = it->second;
      if (inserted) {
        t.track_id = track;
        t.start_frame = frame.frame_index;
      }
      t.end_frame = frame.frame_index;
      t.positions.push_back(obs->position);
    }
  }
  for (auto& [track, t] : open) done.push_back(std::move(t));
  std::stable_sort(done.begin(), done.end(), [](const Trajectory& a, const Trajectory& b) {
    return a.start_frame != b.start_frame ? a.start_frame < b.start_frame
                                          : a.track_id < b.track_id;
  });
  return done;
}

std::vector<TrackedFrame> tracked_frames(std::span<const MarkerFrame> frames) {
  std::vector<TrackedFrame> out;
  out.reserve(frames.size());
  for (const MarkerFrame& f : frames) {
    f.validate();
    TrackedFrame t;
    t.frame_index = f.frame_index;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!f.occluded[k]) t.observations.push_back({static_cast<int>(k), f.positions[k]});
    }
    out.push_back(std::move(t));
  }
  return out;
}

void ScoringConfig::validate() const {
  if (!std::isfinite(p) || !std::isfinite(q)) fail(ErrorKind::argument, "p and q must be finite");
  if (p < 0.0) fail(ErrorKind::argument, "p must be non-negative");
}

double score_label(const Trajectory& trajectory, int label, const ScoringConfig& cfg) {
  cfg.validate();
  std::size_t count = 0;
  double power_sum = 0.0;
  for (const LabelObservation& obs : trajectory.per_frame_labels) {
    if (obs.label != label) continue;
    ++count;
    if (cfg.p != 0.0) power_sum += std::pow(std::abs(obs.confidence), cfg.p);
  }
  if (count == 0) {
    fail(ErrorKind::argument, "label " + std::to_string(label) + " never assigned in track " +
                                  std::to_string(trajectory.track_id));
  }
  const double n = static_cast<double>(count);
  const double norm = cfg.p == 0.0 ? n : std::pow(power_sum, 1.0 / cfg.p);
  return std::pow(n, cfg.q) * norm;
}

RelabelResult relabel_trajectory(const Trajectory& trajectory, const ScoringConfig& cfg) {
  if (trajectory.per_frame_labels.empty()) {
    fail(ErrorKind::argument, "track " + std::to_string(trajectory.track_id) +
                                  " has no per-frame labels");
  }
  std::vector<int> candidates;
  for (const LabelObservation& obs : trajectory.per_frame_labels) candidates.push_back(obs.label);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  RelabelResult best{candidates.front(), -std::numeric_limits<double>::infinity()};
  for (int label : candidates) {
    const double s = score_label(trajectory, label, cfg);
    if (s > best.score) best = {label, s};
  }
  return best;
}

std::size_t PartialLabelling::labelled_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); }));
}

PartialLabelling threshold_filter(const LabelledFrameResult& result, double threshold) {
  PartialLabelling out;
  out.labels.resize(result.permutation.size());
  for (std::size_t j = 0; j < result.permutation.size(); ++j) {
    if (result.confidences.at(j) >= threshold) out.labels[j] = result.permutation[j];
  }
  return out;
}

}  // namespace mocap
