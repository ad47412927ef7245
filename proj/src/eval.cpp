#include "mocap/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "mocap/assign.hpp"
#include "mocap/preprocess.hpp"

namespace mocap {

namespace {

using nlohmann::json;

LabelledFrameResult assemble(SquareMatrix scores, const SinkhornConfig& cfg, std::int64_t index) {
  LabelledFrameResult r;
  r.dsm = sinkhorn(scores, cfg);
  r.permutation = decode(r.dsm).permutation;
  r.confidences = assignment_confidences(r.dsm, r.permutation);
  r.frame_index = index;
  return r;
}

void require_markers(const MarkerFrame& frame, int n) {
  if (frame.size() != static_cast<std::size_t>(n)) {
    fail(ErrorKind::dimension, "frame " + std::to_string(frame.frame_index) + " has " +
                                   std::to_string(frame.size()) + " markers, model expects " +
                                   std::to_string(n));
  }
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Partial Fisher-Yates: exactly k distinct markers.
void occlude_exactly(MarkerFrame& frame, int k, std::mt19937_64& rng) {
  std::vector<int> idx(frame.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(idx.size()) - 1);
    std::swap(idx[i], idx[pick(rng)]);
    frame.positions[idx[i]] = kOcclusionPlaceholder;
    frame.occluded[idx[i]] = true;
  }
}

Permutation random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> m(n);
  std::iota(m.begin(), m.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(m[i - 1], m[pick(rng)]);
  }
  return Permutation(std::move(m));
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

LabelledFrameResult label_frame(const MarkerFrame& frame, const Network& net,
                                const SinkhornConfig& sinkhorn_cfg) {
  require_markers(frame, net.config().n_markers);
  return assemble(forward(net, flatten_frame(frame)), sinkhorn_cfg, frame.frame_index);
}

LabelledFrameResult label_frame(const MarkerFrame& frame, const ModelCheckpoint& checkpoint,
                                const SinkhornConfig& sinkhorn_cfg) {
  return label_frame(frame, checkpoint.network, sinkhorn_cfg);
}

NetworkLabeller::NetworkLabeller(const ModelCheckpoint& checkpoint, SinkhornConfig sinkhorn_cfg,
                                 std::size_t chunk)
    : checkpoint_(checkpoint), sinkhorn_cfg_(sinkhorn_cfg), chunk_(std::max<std::size_t>(chunk, 1)) {
  sinkhorn_cfg_.validate();
}

std::vector<LabelledFrameResult> NetworkLabeller::label(std::span<const MarkerFrame> frames) const {
  const Network& net = checkpoint_.network;
  const int n = net.config().n_markers;
  std::vector<LabelledFrameResult> out;
  out.reserve(frames.size());
  for (std::size_t start = 0; start < frames.size(); start += chunk_) {
    const std::size_t count = std::min(chunk_, frames.size() - start);
    Eigen::MatrixXd inputs(net.config().input_size(), static_cast<Eigen::Index>(count));
    for (std::size_t b = 0; b < count; ++b) {
      require_markers(frames[start + b], n);
      inputs.col(static_cast<Eigen::Index>(b)) = flatten_frame(frames[start + b]);
    }
    ForwardResult fwd = forward(net, inputs);
    for (std::size_t b = 0; b < count; ++b) {
      out.push_back(assemble(std::move(fwd.scores[b]), sinkhorn_cfg_, frames[start + b].frame_index));
    }
  }
  return out;
}

EvalSet make_eval_set(std::span<const Sequence> sequences, std::mt19937_64& rng,
                      std::size_t stride) {
  if (stride == 0) fail(ErrorKind::argument, "stride must be positive");
  EvalSet set;
  std::vector<MarkerFrame> normalized;
  for (const Sequence& seq : sequences) {
    if (std::find(set.subjects.begin(), set.subjects.end(), seq.header.subject) ==
        set.subjects.end()) {
      set.subjects.push_back(seq.header.subject);
    }
    for (std::size_t t = 0; t < seq.frames.size(); t += stride) {
      try {
        normalized.push_back(normalize_frame(seq.frames[t]).frame);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_frame) throw;
        ++set.skipped_degenerate;
      }
    }
  }
  const std::vector<TrainingExample> ordered = labelled_examples(normalized);
  set.examples = augment_shuffle(ordered, 1, rng);
  return set;
}

void require_held_out(const FrameLabeller& labeller, std::span<const std::string> subjects) {
  const std::vector<std::string> trained = labeller.train_subjects();
  require_disjoint_subjects(subjects, trained);
}

void ResidualStats::add(double residual) {
  ++count;
  max = std::max(max, residual);
  mean += (residual - mean) / static_cast<double>(count);
}

FrameEval eval_frames(const FrameLabeller& labeller, const EvalSet& set,
                      std::span<const int> occlusion_counts, std::uint64_t seed) {
  require_held_out(labeller, set.subjects);
  const int n = labeller.n_markers();
  FrameEval result;
  for (int k : occlusion_counts) {
    if (k < 0 || k > n) {
      fail(ErrorKind::argument, "occlusion count " + std::to_string(k) + " outside [0, " +
                                    std::to_string(n) + "]");
    }
    std::mt19937_64 rng = derived_rng(seed, static_cast<std::uint64_t>(k));
    std::vector<MarkerFrame> frames;
    frames.reserve(set.examples.size());
    for (const TrainingExample& ex : set.examples) {
      require_markers(ex.frame, n);
      frames.push_back(ex.frame);
      occlude_exactly(frames.back(), k, rng);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<LabelledFrameResult> labelled = labeller.label(frames);
    result.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.frames_labelled += labelled.size();

    FrameEvalRow row;
    row.occlusions = k;
    row.frames = labelled.size();
    for (std::size_t i = 0; i < labelled.size(); ++i) {
      const Permutation& target = set.examples[i].target;
      for (std::size_t j = 0; j < target.size(); ++j) {
        const bool hit = labelled[i].permutation[j] == target[j];
        ++row.markers;
        row.correct += hit;
        if (!frames[i].occluded[j]) {
          ++row.visible_markers;
          row.visible_correct += hit;
        }
      }
      result.residual.add(dsm_residual(labelled[i].dsm));
    }
    row.accuracy = ratio(row.correct, row.markers);
    row.visible_accuracy = ratio(row.visible_correct, row.visible_markers);
    result.rows.push_back(row);
  }
  return result;
}

std::vector<CurvePoint> curve_from_results(std::span<const LabelledFrameResult> results,
                                           std::span<const TrainingExample> examples,
                                           std::span<const double> thresholds) {
  if (results.size() != examples.size()) {
    fail(ErrorKind::dimension, "curve: result and example counts differ");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0) ||
        (i > 0 && thresholds[i] < thresholds[i - 1])) {
      fail(ErrorKind::argument, "thresholds must be ascending within [0, 1]");
    }
  }
  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    CurvePoint pt;
    pt.threshold = t;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const LabelledFrameResult& r = results[i];
      const Permutation& target = examples[i].target;
      for (std::size_t j = 0; j < target.size(); ++j) {
        ++pt.total;
        if (r.confidences.at(j) >= t) {
          ++pt.labelled;
          if (r.permutation[j] == target[j]) ++pt.correct;
        }
      }
    }
    pt.labelled_fraction = ratio(pt.labelled, pt.total);
    pt.precision = pt.labelled == 0 ? 1.0 : ratio(pt.correct, pt.labelled);
    pt.accuracy = ratio(pt.correct, pt.total);
    curve.push_back(pt);
  }
  return curve;
}

std::vector<CurvePoint> accuracy_precision_curve(const FrameLabeller& labeller,
                                                 std::span<const TrainingExample> examples,
                                                 std::span<const double> thresholds) {
  std::vector<MarkerFrame> frames;
  frames.reserve(examples.size());
  for (const TrainingExample& ex : examples) frames.push_back(ex.frame);
  const std::vector<LabelledFrameResult> results = labeller.label(frames);
  return curve_from_results(results, examples, thresholds);
}

std::vector<double> uniform_thresholds(int count) {
  if (count < 2) fail(ErrorKind::argument, "need at least two thresholds");
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[i] = static_cast<double>(i) / (count - 1);
  return t;
}

SequenceLabelling label_sequence(const FrameLabeller& labeller,
                                 std::span<const MarkerFrame> frames) {
  const int n = labeller.n_markers();
  SequenceLabelling out;
  out.frames.resize(frames.size());
  std::vector<MarkerFrame> normalized;
  std::vector<std::size_t> slot;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require_markers(frames[t], n);
    try {
      normalized.push_back(normalize_frame(frames[t]).frame);
      slot.push_back(t);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_frame) throw;
      ++out.degenerate_frames;
    }
  }
  std::vector<LabelledFrameResult> results = labeller.label(normalized);
  for (std::size_t i = 0; i < results.size(); ++i) out.frames[slot[i]] = std::move(results[i]);

  std::unordered_map<std::int64_t, std::size_t> position;
  for (std::size_t t = 0; t < frames.size(); ++t) position.emplace(frames[t].frame_index, t);

  out.trajectories = segment_trajectories(tracked_frames(frames));
  for (Trajectory& traj : out.trajectories) {
    for (std::int64_t f = traj.start_frame; f <= traj.end_frame; ++f) {
      const auto& r = out.frames[position.at(f)];
      if (!r) continue;
      const auto c = static_cast<std::size_t>(traj.track_id);
      traj.per_frame_labels.push_back({f, r->permutation[c], r->confidences[c]});
    }
  }
  return out;
}

std::vector<RelabelResult> relabel_all(std::span<const Trajectory> trajectories,
                                       const ScoringConfig& cfg) {
  cfg.validate();
  std::vector<RelabelResult> out;
  out.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) {
    if (t.per_frame_labels.empty()) {
      // Every frame of the trajectory was degenerate.
      out.push_back({-1, -std::numeric_limits<double>::infinity()});
    } else {
      out.push_back(relabel_trajectory(t, cfg));
    }
  }
  return out;
}

std::size_t count_collisions(std::span<const Trajectory> trajectories,
                             std::span<const RelabelResult> labels) {
  if (trajectories.size() != labels.size()) {
    fail(ErrorKind::dimension, "one label per trajectory required");
  }
  std::vector<std::pair<std::int64_t, int>> claims;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (labels[i].label < 0) continue;
    for (std::int64_t f = trajectories[i].start_frame; f <= trajectories[i].end_frame; ++f) {
      claims.emplace_back(f, labels[i].label);
    }
  }
  std::sort(claims.begin(), claims.end());
  std::size_t collisions = 0;
  for (std::size_t i = 1; i < claims.size(); ++i) {
    if (claims[i] == claims[i - 1] && (i < 2 || claims[i - 1] != claims[i - 2])) ++collisions;
  }
  return collisions;
}

TrajectoryEvalRow eval_trajectories(const FrameLabeller& labeller,
                                    std::span<const Sequence> sequences,
                                    std::span<const ScoringConfig> configs, std::uint64_t seed) {
  std::vector<std::string> subjects;
  for (const Sequence& s : sequences) subjects.push_back(s.header.subject);
  require_held_out(labeller, subjects);

  const int n = labeller.n_markers();
  TrajectoryEvalRow row;
  row.configs.resize(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) row.configs[c].scoring = configs[c];

  std::mt19937_64 rng(seed);
  std::size_t occluded = 0;
  std::size_t total = 0;
  for (const Sequence& seq : sequences) {
    if (seq.header.n_markers != n || seq.labels.size() != static_cast<std::size_t>(n)) {
      fail(ErrorKind::data, "sequence " + seq.header.subject + "/" + seq.header.action +
                                " lacks ground-truth labels for " + std::to_string(n) +
                                " markers");
    }
    const Permutation shuffle = random_permutation(static_cast<std::size_t>(n), rng);
    std::vector<MarkerFrame> frames;
    frames.reserve(seq.frames.size());
    for (const MarkerFrame& f : seq.frames) {
      frames.push_back(apply_permutation(f, shuffle));
      total += f.size();
      occluded += f.size() - f.visible_count();
    }
    std::vector<int> truth(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) truth[k] = seq.labels[shuffle[k]];

    const SequenceLabelling labelled = label_sequence(labeller, frames);
    ++row.sequences;
    row.trajectories += labelled.trajectories.size();
    for (const Trajectory& t : labelled.trajectories) {
      row.samples += t.length();
      for (const LabelObservation& obs : t.per_frame_labels) {
        if (obs.label == truth[t.track_id]) ++row.baseline_correct;
      }
    }
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const std::vector<RelabelResult> labels = relabel_all(labelled.trajectories, configs[c]);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const Trajectory& t = labelled.trajectories[i];
        if (labels[i].label == truth[t.track_id]) row.configs[c].correct += t.length();
      }
      row.configs[c].collisions += count_collisions(labelled.trajectories, labels);
    }
  }
  row.occluded_fraction = ratio(occluded, total);
  row.baseline_accuracy = ratio(row.baseline_correct, row.samples);
  for (TrajectoryConfigRow& c : row.configs) c.accuracy = ratio(c.correct, row.samples);
  return row;
}

std::vector<TrajectoryEvalRow> trajectory_sweep(const FrameLabeller& labeller,
                                                std::span<const Sequence> sequences,
                                                std::span<const double> ratios,
                                                std::span<const ScoringConfig> configs,
                                                std::uint64_t seed) {
  std::vector<TrajectoryEvalRow> rows;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    std::mt19937_64 rng = derived_rng(seed, r);
    std::vector<Sequence> gapped;
    gapped.reserve(sequences.size());
    for (const Sequence& s : sequences) gapped.push_back(introduce_gaps(s, ratios[r], rng));
    TrajectoryEvalRow row = eval_trajectories(labeller, gapped, configs, seed);
    row.ratio = ratios[r];
    rows.push_back(std::move(row));
  }
  return rows;
}

json EvalReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["definitions"] = {
      {"frame_accuracy", "correct markers / all markers, occluded markers included"},
      {"frame_visible_accuracy", "correct visible markers / visible markers"},
      {"trajectory_accuracy", "correct visible marker-frame samples / visible samples"},
      {"precision", "correct labelled markers / labelled markers (1 when none labelled)"},
      {"label_collisions", "(frame, label) pairs claimed by more than one trajectory"}};
  j["context"] = context;

  json frame_rows = json::array();
  for (const FrameEvalRow& r : frames) {
    frame_rows.push_back({{"occlusions", r.occlusions},
                          {"frames", r.frames},
                          {"markers", r.markers},
                          {"correct", r.correct},
                          {"accuracy", r.accuracy},
                          {"visible_markers", r.visible_markers},
                          {"visible_correct", r.visible_correct},
                          {"visible_accuracy", r.visible_accuracy}});
  }
  j["frames"] = frame_rows;

  json traj_rows = json::array();
  std::size_t collisions = 0;
  for (const TrajectoryEvalRow& r : trajectories) {
    json configs_json = json::array();
    for (const TrajectoryConfigRow& c : r.configs) {
      configs_json.push_back({{"p", c.scoring.p},
                              {"q", c.scoring.q},
                              {"correct", c.correct},
                              {"accuracy", c.accuracy},
                              {"label_collisions", c.collisions}});
      collisions += c.collisions;
    }
    traj_rows.push_back({{"ratio", r.ratio},
                         {"occluded_fraction", r.occluded_fraction},
                         {"sequences", r.sequences},
                         {"samples", r.samples},
                         {"trajectories", r.trajectories},
                         {"baseline_correct", r.baseline_correct},
                         {"baseline_accuracy", r.baseline_accuracy},
                         {"scoring", configs_json}});
  }
  j["trajectories"] = traj_rows;
  j["label_collisions"] = collisions;

  json curve_rows = json::array();
  for (const CurvePoint& p : curve) {
    curve_rows.push_back({{"threshold", p.threshold},
                          {"total", p.total},
                          {"labelled", p.labelled},
                          {"correct", p.correct},
                          {"labelled_fraction", p.labelled_fraction},
                          {"precision", p.precision},
                          {"accuracy", p.accuracy}});
  }
  j["curve"] = curve_rows;

  j["dsm_residual"] = {{"count", residual.count}, {"max", residual.max}, {"mean", residual.mean}};
  if (frames_per_second) {
    j["runtime"] = {{"frames_per_second", *frames_per_second},
                    {"ms_per_frame", 1000.0 / *frames_per_second}};
  } else {
    j["runtime"] = nullptr;
  }
  // Published results on recorded data, for context only.
  j["reference"] = {{"frame_accuracy_0_occlusions", 0.9711},
                    {"frame_accuracy_5_occlusions", 0.949},
                    {"trajectory_accuracy_p2_q-0.5_ratio_0", 0.9985},
                    {"trajectory_accuracy_p2_q-0.5_ratio_0.10", 0.9876},
                    {"baseline_accuracy_ratio_0.10", 0.9482}};
  return j;
}

std::string EvalReport::dump() const { return to_json().dump(2) + "\n"; }

}  // namespace mocap
