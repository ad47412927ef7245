// mocap-label: synthesize data, train, label and evaluate.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mocap/checkpoint.hpp"
#include "mocap/config_file.hpp"
#include "mocap/eval.hpp"
#include "mocap/io_util.hpp"
#include "mocap/preprocess.hpp"
#include "mocap/sequence_io.hpp"
#include "mocap/synthdata.hpp"

namespace fs = std::filesystem;
using namespace mocap;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  other failure (domain, degenerate frame)\n"
    "  2  usage: unknown flag, bad flag value, invalid argument\n"
    "  3  io: missing or unreadable file\n"
    "  4  format: malformed file header, row or config text\n"
    "  5  version: checkpoint version or shape mismatch, marker count mismatch\n"
    "  6  data: inconsistent dataset, e.g. evaluation subjects seen in training\n"
    "  7  numeric: non-finite value during training or inference\n"
    "On failure a single line 'error: <category>: <message>' goes to stderr.";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::format: return 4;
    case ErrorKind::version:
    case ErrorKind::dimension: return 5;
    case ErrorKind::data: return 6;
    case ErrorKind::numeric: return 7;
    case ErrorKind::domain:
    case ErrorKind::degenerate_frame: return 1;
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Sequence files named directly or found (sorted) in directories.
std::vector<fs::path> sequence_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      fail(ErrorKind::io, "no such file or directory: " + in);
    }
  }
  if (files.empty()) fail(ErrorKind::io, "no sequence files found");
  return files;
}

struct LoadedSequences {
  std::vector<Sequence> sequences;
  std::string fingerprint;
};

LoadedSequences load_sequences(const std::vector<std::string>& inputs,
                               const std::vector<std::string>& subjects) {
  LoadedSequences out;
  std::string digest;
  for (const fs::path& f : sequence_files(inputs)) {
    Sequence s = read_sequence(f);
    if (!subjects.empty() &&
        std::find(subjects.begin(), subjects.end(), s.header.subject) == subjects.end()) {
      continue;
    }
    digest += fingerprint(serialize_sequence(s));
    out.sequences.push_back(std::move(s));
  }
  if (out.sequences.empty()) fail(ErrorKind::data, "no sequences match the subject filter");
  out.fingerprint = fingerprint(digest);
  return out;
}

RunConfig run_config(const std::string& config_path) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  return cfg;
}

void require_marker_count(int have, int model, const std::string& what) {
  if (have != model) {
    fail(ErrorKind::version, what + " has " + std::to_string(have) +
                                 " markers but the checkpoint expects " + std::to_string(model));
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

// --- synth ---------------------------------------------------------------

struct SynthOptions {
  std::string out;
  DatasetSpec spec;
  std::string actions = "walk,jog,sit,jump";
  double gap_ratio = 0.0;
  std::vector<int> split;  // train,val,test subject counts
};

void run_synth(const SynthOptions& o) {
  DatasetSpec spec = o.spec;
  spec.actions.clear();
  for (const std::string& a : split_list(o.actions)) spec.actions.push_back(parse_motion_family(a));
  std::vector<Sequence> data = generate_dataset(spec);
  fs::create_directories(o.out);
  std::mt19937_64 gap_rng(spec.seed ^ 0x67617073ULL);
  std::map<std::string, int> counter;
  for (Sequence& s : data) {
    if (o.gap_ratio > 0.0) s = introduce_gaps(s, o.gap_ratio, gap_rng);
    const std::string stem = s.header.subject + "_" + s.header.action;
    const int k = counter[stem]++;
    char name[256];
    std::snprintf(name, sizeof name, "%s_%02d.csv", stem.c_str(), k);
    write_sequence(fs::path(o.out) / name, s);
  }
  if (!o.split.empty()) {
    if (o.split.size() != 3) fail(ErrorKind::argument, "--split needs train,val,test counts");
    std::vector<std::string> subjects;
    for (const Sequence& s : data) {
      if (std::find(subjects.begin(), subjects.end(), s.header.subject) == subjects.end()) {
        subjects.push_back(s.header.subject);
      }
    }
    const SubjectSplit split = split_subjects(subjects, o.split[0], o.split[1], o.split[2], spec.seed);
    const nlohmann::json j = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
    write_file(fs::path(o.out) / "split.json", j.dump(2) + "\n");
  }
  std::cerr << "wrote " << data.size() << " sequences to " << o.out << "\n";
}

// --- augment -------------------------------------------------------------

struct AugmentOptions {
  std::vector<std::string> inputs;
  std::string subjects;
  std::string out;
  int shuffles = 16;
  int max_occlusions = 5;
  std::size_t stride = 1;
  std::uint64_t seed = 1;
};

void run_augment(const AugmentOptions& o) {
  const LoadedSequences data = load_sequences(o.inputs, split_list(o.subjects));
  std::vector<MarkerFrame> normalized;
  std::vector<std::string> subjects;
  std::size_t skipped = 0;
  for (const Sequence& s : data.sequences) {
    if (std::find(subjects.begin(), subjects.end(), s.header.subject) == subjects.end()) {
      subjects.push_back(s.header.subject);
    }
    for (std::size_t t = 0; t < s.frames.size(); t += std::max<std::size_t>(o.stride, 1)) {
      try {
        normalized.push_back(normalize_frame(s.frames[t]).frame);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_frame) throw;
        ++skipped;
      }
    }
  }
  std::mt19937_64 rng(o.seed);
  ExampleSet set;
  set.n_markers = data.sequences.front().header.n_markers;
  set.subjects = subjects;
  set.source_fingerprint = data.fingerprint;
  set.examples = augment_shuffle(labelled_examples(normalized), o.shuffles, rng);
  augment_occlude(set.examples, o.max_occlusions, rng);
  write_examples(o.out, set);
  std::cerr << "wrote " << set.examples.size() << " examples (" << skipped
            << " degenerate frames skipped) to " << o.out << "\n";
}

// --- train ---------------------------------------------------------------

struct TrainOptions {
  std::string train_path;
  std::string val_path;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
};

void run_train(const TrainOptions& o) {
  RunConfig cfg = run_config(o.config);
  if (o.seed) cfg.network.seed = cfg.train.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  const std::string train_bytes = read_file(o.train_path);
  const ExampleSet train_set = parse_examples(train_bytes);
  const ExampleSet val_set = read_examples(o.val_path);
  require_disjoint_subjects(train_set.subjects, val_set.subjects);
  cfg.network.n_markers = train_set.n_markers;
  if (val_set.n_markers != train_set.n_markers) {
    fail(ErrorKind::data, "train and validation sets have different marker counts");
  }
  TrainResult result = train(train_set.examples, val_set.examples, cfg.network, cfg.train,
                             cfg.sinkhorn, [](const EpochLog& e) {
                               std::fprintf(stderr, "epoch %3d  train %.6f  val %.6f  lr %.3g\n",
                                            e.epoch, e.train_loss, e.val_loss, e.learning_rate);
                             });
  ModelCheckpoint ckpt;
  ckpt.network = std::move(result.best);
  ckpt.sinkhorn = cfg.sinkhorn;
  ckpt.meta = std::move(result.meta);
  ckpt.meta.dataset_fingerprint = fingerprint(train_bytes);
  ckpt.meta.train_subjects = train_set.subjects;
  save_checkpoint(o.out, ckpt);
  std::cerr << "best epoch " << ckpt.meta.best_epoch << ", validation loss "
            << ckpt.meta.best_val_loss << "\n";
}

// --- label ---------------------------------------------------------------

struct LabelOptions {
  std::string model;
  std::string in;
  std::string out;
  std::string config;
  bool trajectories = false;
  double threshold = 0.0;
};

void run_label(const LabelOptions& o) {
  const ModelCheckpoint ckpt = load_checkpoint(o.model);
  RunConfig cfg = run_config(o.config);
  const Sequence seq = parse_sequence(read_file(o.in));
  require_marker_count(seq.header.n_markers, ckpt.config().n_markers, o.in);
  const NetworkLabeller labeller(ckpt, ckpt.sinkhorn);
  const SequenceLabelling labelled = label_sequence(labeller, seq.frames);

  std::string text;
  if (!o.trajectories) {
    text = "frame_index,column,label,confidence\n";
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      const auto& r = labelled.frames[t];
      for (std::size_t c = 0; c < seq.frames[t].size(); ++c) {
        if (seq.frames[t].occluded[c]) continue;
        text += std::to_string(seq.frames[t].frame_index) + "," + std::to_string(c) + ",";
        if (r && r->confidences[c] >= o.threshold) {
          text += std::to_string(r->permutation[c]) + "," + format_double(r->confidences[c]);
        } else {
          text += ",";
        }
        text += "\n";
      }
    }
  } else {
    const std::vector<RelabelResult> labels = relabel_all(labelled.trajectories, cfg.scoring);
    text = "column,start_frame,end_frame,label,score\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const Trajectory& t = labelled.trajectories[i];
      text += std::to_string(t.track_id) + "," + std::to_string(t.start_frame) + "," +
              std::to_string(t.end_frame) + ",";
      if (labels[i].label >= 0) {
        text += std::to_string(labels[i].label) + "," + format_double(labels[i].score);
      } else {
        text += ",";
      }
      text += "\n";
    }
    std::cerr << labelled.trajectories.size() << " trajectories, "
              << count_collisions(labelled.trajectories, labels) << " label collisions\n";
  }
  if (labelled.degenerate_frames > 0) {
    std::cerr << labelled.degenerate_frames << " degenerate frames left unlabelled\n";
  }
  write_output(o.out, text);
}

// --- eval / curve --------------------------------------------------------

struct EvalOptions {
  std::string model;
  std::vector<std::string> inputs;
  std::string subjects;
  std::string out;
  std::string config;
  std::uint64_t seed = 1;
  std::size_t stride = 1;
  std::vector<int> occlusions{0, 1, 2, 3, 4, 5};
  std::vector<double> ratios{0.0, 0.02, 0.04, 0.06, 0.08, 0.10};
  int curve_occlusions = 0;
  int thresholds = 101;
  std::size_t timing_frames = 1000;
  bool omit_timing = false;
};

std::vector<ScoringConfig> sweep_configs(const ScoringConfig& extra) {
  std::vector<ScoringConfig> configs{{0.0, 0.0}, {1.0, 0.0}, {1.0, -1.0}, {2.0, -0.5}};
  if (std::find(configs.begin(), configs.end(), extra) == configs.end()) configs.push_back(extra);
  return configs;
}

// Occludes exactly `k` markers per example for the curve.
std::vector<TrainingExample> occluded_examples(const EvalSet& set, int k, std::uint64_t seed) {
  std::vector<TrainingExample> out = set.examples;
  std::mt19937_64 rng(seed);
  for (TrainingExample& ex : out) {
    std::vector<int> idx(ex.frame.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(idx.size()) - 1);
      std::swap(idx[i], idx[pick(rng)]);
      ex.frame.positions[idx[i]] = kOcclusionPlaceholder;
      ex.frame.occluded[idx[i]] = true;
    }
  }
  return out;
}

EvalReport run_eval_core(const EvalOptions& o, bool full) {
  const std::string model_bytes = read_file(o.model);
  const ModelCheckpoint ckpt = deserialize_checkpoint(model_bytes);
  const RunConfig cfg = run_config(o.config);
  const LoadedSequences data = load_sequences(o.inputs, split_list(o.subjects));
  for (const Sequence& s : data.sequences) {
    require_marker_count(s.header.n_markers, ckpt.config().n_markers,
                         s.header.subject + "/" + s.header.action);
  }
  const NetworkLabeller labeller(ckpt, ckpt.sinkhorn);
  std::mt19937_64 rng(o.seed);
  const EvalSet set = make_eval_set(data.sequences, rng, o.stride);
  require_held_out(labeller, set.subjects);

  EvalReport report;
  report.context = {
      {"model",
       {{"fingerprint", fingerprint(model_bytes)},
        {"config", to_json(ckpt.config())},
        {"sinkhorn", to_json(ckpt.sinkhorn)},
        {"train_subjects", ckpt.meta.train_subjects},
        {"dataset_fingerprint", ckpt.meta.dataset_fingerprint},
        {"best_epoch", ckpt.meta.best_epoch}}},
      {"data",
       {{"fingerprint", data.fingerprint},
        {"subjects", set.subjects},
        {"sequences", data.sequences.size()},
        {"frames", set.examples.size()},
        {"skipped_degenerate", set.skipped_degenerate},
        {"stride", o.stride}}},
      {"seed", o.seed},
      {"scoring", to_json(cfg.scoring)},
      {"curve_occlusions", o.curve_occlusions}};

  if (full) {
    const FrameEval fe = eval_frames(labeller, set, o.occlusions, o.seed);
    report.frames = fe.rows;
    report.residual = fe.residual;
    const std::vector<ScoringConfig> configs = sweep_configs(cfg.scoring);
    report.trajectories = trajectory_sweep(labeller, data.sequences, o.ratios, configs, o.seed);
  }
  const std::vector<TrainingExample> curve_set =
      occluded_examples(set, o.curve_occlusions, o.seed ^ 0x6375727665ULL);
  report.curve = accuracy_precision_curve(labeller, curve_set, uniform_thresholds(o.thresholds));

  if (!o.omit_timing && !set.examples.empty()) {
    const std::size_t n = std::min(o.timing_frames, set.examples.size());
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) (void)label_frame(set.examples[i].frame, ckpt, ckpt.sinkhorn);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.frames_per_second = static_cast<double>(n) / dt;
  }
  return report;
}

void run_eval(const EvalOptions& o) { write_output(o.out, run_eval_core(o, true).dump()); }

void run_curve(const EvalOptions& o) {
  const EvalReport report = run_eval_core(o, false);
  std::string text = "threshold,labelled_fraction,precision,accuracy\n";
  for (const CurvePoint& p : report.curve) {
    text += format_double(p.threshold) + "," + format_double(p.labelled_fraction) + "," +
            format_double(p.precision) + "," + format_double(p.accuracy) + "\n";
  }
  write_output(o.out, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic labelling of optical motion capture markers"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.spec.seed, "Dataset seed");
  synth_cmd->add_option("--markers", synth.spec.n_markers, "Markers per body (1..41)");
  synth_cmd->add_option("--subjects", synth.spec.n_subjects, "Number of subjects");
  synth_cmd->add_option("--frames", synth.spec.frames_per_sequence, "Frames per sequence");
  synth_cmd->add_option("--sequences-per-action", synth.spec.sequences_per_action);
  synth_cmd->add_option("--fps", synth.spec.fps, "Frame rate");
  synth_cmd->add_option("--actions", synth.actions, "Comma-separated: walk,jog,sit,jump");
  synth_cmd->add_option("--gap-ratio", synth.gap_ratio, "Fraction of samples to occlude as gaps");
  synth_cmd->add_option("--split", synth.split, "Write split.json with train,val,test counts")
      ->delimiter(',');

  AugmentOptions augment;
  auto* augment_cmd = app.add_subcommand("augment", "Normalize, shuffle and occlude frames");
  augment_cmd->add_option("--in", augment.inputs, "Sequence files or directories")->required();
  augment_cmd->add_option("--subjects", augment.subjects, "Comma-separated subject filter");
  augment_cmd->add_option("--out", augment.out, "Example-set file")->required();
  augment_cmd->add_option("--shuffles", augment.shuffles, "Random permutations per frame");
  augment_cmd->add_option("--max-occlusions", augment.max_occlusions, "Up to this many per frame");
  augment_cmd->add_option("--stride", augment.stride, "Use every k-th frame");
  augment_cmd->add_option("--seed", augment.seed, "Augmentation seed");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a labelling network");
  train_cmd->add_option("--train", train_opts.train_path, "Training example set")->required();
  train_cmd->add_option("--val", train_opts.val_path, "Validation example set")->required();
  train_cmd->add_option("--out", train_opts.out, "Checkpoint path")->required();
  train_cmd->add_option("--config", train_opts.config, "Key-value config overrides");
  train_cmd->add_option("--seed", train_opts.seed, "Seed for initialization and batching");
  train_cmd->add_option("--epochs", train_opts.epochs, "Override train.epochs");

  LabelOptions label;
  auto* label_cmd = app.add_subcommand("label", "Label the tracks of a sequence file");
  label_cmd->add_option("--model", label.model, "Checkpoint")->required();
  label_cmd->add_option("--in", label.in, "Sequence file")->required();
  label_cmd->add_option("--out", label.out, "Output CSV (default stdout)");
  label_cmd->add_option("--config", label.config, "Key-value config overrides (scoring.*)");
  label_cmd->add_flag("--trajectories", label.trajectories, "One label per trajectory");
  label_cmd->add_option("--threshold", label.threshold, "Leave lower-confidence markers unlabelled");

  EvalOptions eval;
  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("--model", eval.model, "Checkpoint")->required();
    cmd->add_option("--data", eval.inputs, "Held-out sequence files or directories")->required();
    cmd->add_option("--subjects", eval.subjects, "Comma-separated subject filter");
    cmd->add_option("--out", eval.out, "Output path (default stdout)");
    cmd->add_option("--config", eval.config, "Key-value config overrides (scoring.*)");
    cmd->add_option("--seed", eval.seed, "Evaluation seed");
    cmd->add_option("--stride", eval.stride, "Use every k-th frame for frame metrics");
    cmd->add_option("--curve-occlusions", eval.curve_occlusions, "Occlusions per curve frame");
    cmd->add_option("--thresholds", eval.thresholds, "Number of curve thresholds");
  };
  auto* eval_cmd = app.add_subcommand("eval", "Write a JSON evaluation report");
  add_eval_options(eval_cmd);
  eval_cmd->add_option("--occlusions", eval.occlusions, "Occlusion counts")->delimiter(',');
  eval_cmd->add_option("--ratios", eval.ratios, "Gap ratios for trajectories")->delimiter(',');
  eval_cmd->add_option("--timing-frames", eval.timing_frames, "Frames timed with label_frame");
  eval_cmd->add_flag("--omit-timing", eval.omit_timing, "Leave runtime out of the report");
  auto* curve_cmd = app.add_subcommand("curve", "Write accuracy-precision curve samples as CSV");
  add_eval_options(curve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*augment_cmd) run_augment(augment);
    if (*train_cmd) run_train(train_opts);
    if (*label_cmd) run_label(label);
    if (*eval_cmd) run_eval(eval);
    if (*curve_cmd) {
      eval.omit_timing = true;
      run_curve(eval);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
