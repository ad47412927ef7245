#include "mocap/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Geometry>

#include "mocap/preprocess.hpp"

namespace mocap {

namespace {

enum SegmentId : int {
  kPelvis,
  kTorso,
  kHead,
  kRUpperArm,
  kRForearm,
  kLUpperArm,
  kLForearm,
  kRThigh,
  kRShank,
  kRFoot,
  kLThigh,
  kLShank,
  kLFoot,
  kSegmentCount
};

struct SegmentSpec {
  const char* name;
  int parent;
  std::array<double, 3> joint;
  double length;
};

// Reference body of roughly 1.75 m; x forward, y left, z up.
constexpr std::array<SegmentSpec, kSegmentCount> kSkeleton{{
    {"pelvis", -1, {0.0, 0.0, 0.0}, 0.20},
    {"torso", kPelvis, {0.0, 0.0, 0.08}, 0.50},
    {"head", kTorso, {0.0, 0.0, 0.52}, 0.24},
    {"r_upper_arm", kTorso, {0.0, -0.19, 0.46}, 0.30},
    {"r_forearm", kRUpperArm, {0.0, 0.0, -0.30}, 0.27},
    {"l_upper_arm", kTorso, {0.0, 0.19, 0.46}, 0.30},
    {"l_forearm", kLUpperArm, {0.0, 0.0, -0.30}, 0.27},
    {"r_thigh", kPelvis, {0.0, -0.09, -0.05}, 0.44},
    {"r_shank", kRThigh, {0.0, 0.0, -0.44}, 0.42},
    {"r_foot", kRShank, {0.0, 0.0, -0.42}, 0.20},
    {"l_thigh", kPelvis, {0.0, 0.09, -0.05}, 0.44},
    {"l_shank", kLThigh, {0.0, 0.0, -0.44}, 0.42},
    {"l_foot", kLShank, {0.0, 0.0, -0.42}, 0.20},
}};

constexpr double kAnkleHeight = 0.08;
// Arm abduction (rad) shared by every motion family.
constexpr double kArmRoll = 0.30;

struct MarkerSpec {
  const char* name;
  int segment;
  std::array<double, 3> offset;
};

// The first 20 entries form the reduced layout; a few markers are placed
// asymmetrically so left and right stay distinguishable.
constexpr std::array<MarkerSpec, kMaxMarkers> kMarkerLayout{{
    {"head_top", kHead, {0.0, 0.0, 0.22}},
    {"forehead", kHead, {0.10, 0.0, 0.12}},
    {"c7", kTorso, {-0.08, 0.0, 0.50}},
    {"sternum", kTorso, {0.10, 0.0, 0.30}},
    {"r_shoulder", kTorso, {0.0, -0.20, 0.50}},
    {"l_shoulder", kTorso, {0.0, 0.20, 0.50}},
    {"r_elbow", kRUpperArm, {0.0, -0.04, -0.30}},
    {"l_elbow", kLUpperArm, {0.0, 0.04, -0.30}},
    {"r_wrist", kRForearm, {0.0, -0.03, -0.27}},
    {"l_wrist", kLForearm, {0.0, 0.03, -0.27}},
    {"r_asis", kPelvis, {0.09, -0.11, 0.02}},
    {"l_asis", kPelvis, {0.09, 0.11, 0.02}},
    {"sacrum", kPelvis, {-0.10, 0.0, 0.04}},
    {"r_knee", kRThigh, {0.0, -0.06, -0.44}},
    {"l_knee", kLThigh, {0.0, 0.06, -0.44}},
    {"r_ankle", kRShank, {0.0, -0.05, -0.42}},
    {"l_ankle", kLShank, {0.0, 0.05, -0.42}},
    {"r_toe", kRFoot, {0.16, 0.0, -0.05}},
    {"l_toe", kLFoot, {0.16, 0.0, -0.05}},
    {"r_back_wand", kTorso, {-0.10, -0.14, 0.33}},
    {"r_heel", kRFoot, {-0.05, 0.0, -0.06}},
    {"l_heel", kLFoot, {-0.05, 0.0, -0.06}},
    {"r_thigh", kRThigh, {0.0, -0.08, -0.22}},
    {"l_thigh", kLThigh, {0.03, 0.08, -0.26}},
    {"r_shin", kRShank, {0.0, -0.06, -0.20}},
    {"l_shin", kLShank, {0.02, 0.06, -0.26}},
    {"r_upper_arm", kRUpperArm, {0.0, -0.05, -0.14}},
    {"l_upper_arm", kLUpperArm, {0.02, 0.05, -0.18}},
    {"r_forearm", kRForearm, {0.0, -0.04, -0.13}},
    {"l_forearm", kLForearm, {0.02, 0.04, -0.16}},
    {"r_head", kHead, {0.0, -0.09, 0.10}},
    {"l_head", kHead, {0.0, 0.09, 0.10}},
    {"back_head", kHead, {-0.10, 0.0, 0.10}},
    {"t10", kTorso, {-0.10, 0.0, 0.18}},
    {"clavicle", kTorso, {0.07, 0.0, 0.44}},
    {"r_psis", kPelvis, {-0.09, -0.05, 0.05}},
    {"l_psis", kPelvis, {-0.09, 0.05, 0.05}},
    {"r_hand", kRForearm, {0.02, -0.02, -0.34}},
    {"l_hand", kLForearm, {0.02, 0.02, -0.34}},
    {"r_mtp5", kRFoot, {0.10, -0.04, -0.05}},
    {"l_mtp5", kLFoot, {0.10, 0.04, -0.05}},
}};

Eigen::Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

// Sagittal flexion (about y), then ab/adduction (about x), then twist (z).
Eigen::Matrix3d joint(double pitch, double roll = 0.0, double yaw = 0.0) {
  return rot_z(yaw) * rot_x(roll) * rot_y(pitch);
}

struct PoseState {
  std::array<Eigen::Matrix3d, kSegmentCount> local;
  Vec3 root = Vec3::Zero();
  double heading = 0.0;
};

double smoothstep_cycle(double phase) { return 0.5 * (1.0 - std::cos(phase)); }

PoseState pose_state(const BodyModel& body, double t) {
  const MotionParams& m = body.motion;
  const double a = m.amplitude;
  const double w = 2.0 * std::numbers::pi * m.frequency_hz;
  const double ph = w * t + m.phase;
  const double thigh = body.skeleton[kRThigh].length;
  const double shank = body.skeleton[kRShank].length;
  const double hip_drop = -body.skeleton[kRThigh].joint_offset.z();
  const double ankle = kAnkleHeight * (thigh / kSkeleton[kRThigh].length);

  PoseState s;
  s.local.fill(Eigen::Matrix3d::Identity());
  // Arms hang slightly away from the torso in every family.
  s.local[kRUpperArm] = joint(0.0, -kArmRoll);
  s.local[kLUpperArm] = joint(0.0, kArmRoll);
  double root_x = 0.0;
  double root_z = ankle + shank + thigh + hip_drop;
  double speed = 0.0;

  switch (m.family) {
    case MotionFamily::walk:
    case MotionFamily::jog: {
      const bool jog = m.family == MotionFamily::jog;
      const double hip_amp = a * (jog ? 0.5 : 0.4);
      const double knee_amp = a * (jog ? 1.1 : 0.7);
      const double bob = a * (jog ? 0.05 : 0.02);
      for (int side = 0; side < 2; ++side) {
        const double p = ph + side * std::numbers::pi;
        const int th = side == 0 ? kRThigh : kLThigh;
        s.local[th] = joint(-hip_amp * std::sin(p));
        s.local[th + 1] = joint(knee_amp * smoothstep_cycle(p + 0.8));
        s.local[th + 2] = joint(-0.25 * a * std::sin(p + 1.2));
        const int ua = side == 0 ? kRUpperArm : kLUpperArm;
        const double roll = side == 0 ? -kArmRoll : kArmRoll;
        s.local[ua] = joint(0.35 * a * std::sin(p), roll);
        s.local[ua + 1] =
            joint(-a * ((jog ? 0.7 : 0.3) + 0.15 * std::sin(p)));
      }
      s.local[kTorso] = joint(a * (jog ? 0.15 : 0.03), a * 0.04 * std::sin(ph),
                              a * 0.08 * std::sin(ph));
      s.local[kHead] = joint(a * 0.05 * std::sin(2.0 * ph));
      root_z -= bob * smoothstep_cycle(2.0 * ph);
      speed = a * m.speed_mps;
      break;
    }
    case MotionFamily::sit: {
      const double depth = a * smoothstep_cycle(ph);
      const double hip = -1.4 * depth;
      for (int th : {kRThigh, kLThigh}) {
        s.local[th] = joint(hip);
        s.local[th + 1] = joint(-hip);
      }
      s.local[kTorso] = joint(0.45 * depth);
      s.local[kHead] = joint(-0.2 * depth);
      s.local[kRUpperArm] = joint(-0.5 * depth, -kArmRoll);
      s.local[kLUpperArm] = joint(-0.5 * depth, kArmRoll);
      s.local[kRForearm] = joint(-0.8 * depth);
      s.local[kLForearm] = joint(-0.8 * depth);
      // Feet stay planted: the pelvis moves back and down with the thighs.
      root_x = -thigh * std::sin(-hip);
      root_z = ankle + shank + thigh * std::cos(hip) + hip_drop;
      break;
    }
    case MotionFamily::jump: {
      const double crouch = 0.6 * a * std::pow(0.5 * (1.0 + std::cos(ph)), 2);
      const double lift = 0.3 * a * std::pow(smoothstep_cycle(ph), 2);
      for (int th : {kRThigh, kLThigh}) {
        s.local[th] = joint(-crouch);
        s.local[th + 1] = joint(2.0 * crouch);
        s.local[th + 2] = joint(-crouch);
      }
      s.local[kTorso] = joint(0.6 * crouch);
      const double raise = lift / 0.3;  // 0..a
      // Arms swing up sideways.
      s.local[kRUpperArm] = joint(0.4 * crouch, -kArmRoll - 1.2 * raise);
      s.local[kLUpperArm] = joint(0.4 * crouch, kArmRoll + 1.2 * raise);
      s.local[kRForearm] = joint(-0.3 * a);
      s.local[kLForearm] = joint(-0.3 * a);
      root_x = (shank - thigh) * std::sin(crouch);
      root_z = ankle + (shank + thigh) * std::cos(crouch) + hip_drop + lift;
      break;
    }
  }

  s.heading = m.heading + a * m.yaw_rate * t;
  const double yaw_rate = a * m.yaw_rate;
  Vec3 travel = Vec3::Zero();
  if (std::abs(yaw_rate) < 1e-9) {
    travel << speed * t * std::cos(m.heading), speed * t * std::sin(m.heading), 0.0;
  } else {
    travel << speed / yaw_rate * (std::sin(s.heading) - std::sin(m.heading)),
        speed / yaw_rate * (std::cos(m.heading) - std::cos(s.heading)), 0.0;
  }
  // Slow sway of the root on top of the travel.
  travel.x() += a * 0.03 * std::sin(0.7 * t + m.phase);
  travel.y() += a * 0.03 * std::sin(0.5 * t + 2.0 * m.phase);
  s.root = travel + rot_z(s.heading) * Vec3(root_x, 0.0, 0.0);
  s.root.z() = root_z;
  return s;
}

}  // namespace

std::string_view motion_family_name(MotionFamily family) {
  switch (family) {
    case MotionFamily::walk: return "walk";
    case MotionFamily::jog: return "jog";
    case MotionFamily::sit: return "sit";
    case MotionFamily::jump: return "jump";
  }
  return "walk";
}

MotionFamily parse_motion_family(std::string_view name) {
  for (MotionFamily f : {MotionFamily::walk, MotionFamily::jog, MotionFamily::sit,
                         MotionFamily::jump}) {
    if (motion_family_name(f) == name) return f;
  }
  fail(ErrorKind::argument, "unknown motion family '" + std::string(name) + "'");
}

BodyModel BodyModel::make(int n_markers, const std::string& subject,
                          std::uint64_t subject_seed) {
  if (n_markers < 4 || n_markers > kMaxMarkers) {
    fail(ErrorKind::argument, "n_markers must lie in [4, " + std::to_string(kMaxMarkers) + "]");
  }
  std::mt19937_64 rng(subject_seed);
  std::uniform_real_distribution<double> height_dist(0.85, 1.15);
  std::uniform_real_distribution<double> segment_dist(0.94, 1.06);
  std::uniform_real_distribution<double> width_dist(0.9, 1.1);
  std::normal_distribution<double> jitter(0.0, 0.008);

  BodyModel body;
  body.subject = subject;
  body.n_markers = n_markers;
  body.seed = subject_seed;
  const double height = height_dist(rng);
  const double width = width_dist(rng);
  std::array<double, kSegmentCount> factor{};
  for (int s = 0; s < kSegmentCount; ++s) factor[s] = height * segment_dist(rng);
  // Left and right limbs share lengths.
  factor[kLUpperArm] = factor[kRUpperArm];
  factor[kLForearm] = factor[kRForearm];
  factor[kLThigh] = factor[kRThigh];
  factor[kLShank] = factor[kRShank];
  factor[kLFoot] = factor[kRFoot];

  for (int s = 0; s < kSegmentCount; ++s) {
    const SegmentSpec& spec = kSkeleton[s];
    Segment seg;
    seg.name = spec.name;
    seg.parent = spec.parent;
    seg.length = spec.length * factor[s];
    if (spec.parent >= 0) {
      const double pf = factor[spec.parent];
      seg.joint_offset = Vec3(spec.joint[0] * height, spec.joint[1] * height * width,
                              spec.joint[2] * pf);
    }
    body.skeleton.push_back(seg);
  }
  for (int k = 0; k < n_markers; ++k) {
    const MarkerSpec& spec = kMarkerLayout[k];
    const double f = factor[spec.segment];
    MarkerAttachment att;
    att.name = spec.name;
    att.segment = spec.segment;
    att.local_offset = Vec3(spec.offset[0] * height + jitter(rng),
                            spec.offset[1] * height * width + jitter(rng),
                            spec.offset[2] * f + jitter(rng));
    body.markers.push_back(att);
  }
  body.validate();
  return body;
}

void BodyModel::validate() const {
  if (static_cast<int>(markers.size()) != n_markers) {
    fail(ErrorKind::argument, "body has " + std::to_string(markers.size()) + " markers, expected " +
                                  std::to_string(n_markers));
  }
  if (skeleton.size() != kSegmentCount) {
    fail(ErrorKind::argument, "body skeleton must have " + std::to_string(kSegmentCount) +
                                  " segments");
  }
  for (std::size_t s = 0; s < skeleton.size(); ++s) {
    if (!(skeleton[s].length > 0.0)) {
      fail(ErrorKind::argument, "segment " + skeleton[s].name + " has non-positive length");
    }
    if (skeleton[s].parent >= static_cast<int>(s)) {
      fail(ErrorKind::argument, "segment " + skeleton[s].name + " must follow its parent");
    }
  }
  for (const MarkerAttachment& m : markers) {
    if (m.segment < 0 || m.segment >= static_cast<int>(skeleton.size())) {
      fail(ErrorKind::argument, "marker " + m.name + " attaches to no segment");
    }
  }
}

MotionParams random_motion(MotionFamily family, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  MotionParams m;
  m.family = family;
  m.amplitude = between(0.8, 1.2);
  m.heading = between(0.0, 2.0 * std::numbers::pi);
  m.phase = between(0.0, 2.0 * std::numbers::pi);
  m.yaw_rate = between(-0.3, 0.3);
  switch (family) {
    case MotionFamily::walk:
      m.frequency_hz = between(0.9, 1.1);
      m.speed_mps = between(1.0, 1.4);
      break;
    case MotionFamily::jog:
      m.frequency_hz = between(1.3, 1.6);
      m.speed_mps = between(2.4, 3.2);
      break;
    case MotionFamily::sit:
      m.frequency_hz = between(0.15, 0.3);
      m.speed_mps = 0.0;
      break;
    case MotionFamily::jump:
      m.frequency_hz = between(0.5, 0.8);
      m.speed_mps = 0.0;
      break;
  }
  return m;
}

std::vector<Vec3> body_pose(const BodyModel& body, double t) {
  const PoseState s = pose_state(body, t);
  std::array<Eigen::Matrix3d, kSegmentCount> world_rot;
  std::array<Vec3, kSegmentCount> world_joint;
  for (int seg = 0; seg < kSegmentCount; ++seg) {
    const Segment& segment = body.skeleton[seg];
    if (segment.parent < 0) {
      world_rot[seg] = rot_z(s.heading) * s.local[seg];
      world_joint[seg] = s.root;
    } else {
      world_rot[seg] = world_rot[segment.parent] * s.local[seg];
      world_joint[seg] =
          world_joint[segment.parent] + world_rot[segment.parent] * segment.joint_offset;
    }
  }
  std::vector<Vec3> out;
  out.reserve(body.markers.size());
  for (const MarkerAttachment& m : body.markers) {
    out.push_back(world_joint[m.segment] + world_rot[m.segment] * m.local_offset);
  }
  return out;
}

Sequence generate_sequence(const BodyModel& body, int n_frames, double fps) {
  body.validate();
  if (n_frames < 0 || !(fps > 0.0)) fail(ErrorKind::argument, "invalid frame count or fps");
  Sequence seq;
  seq.header = {body.n_markers, fps, body.subject,
                std::string(motion_family_name(body.motion.family))};
  seq.labels.resize(static_cast<std::size_t>(body.n_markers));
  std::iota(seq.labels.begin(), seq.labels.end(), 0);
  seq.frames.reserve(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    std::vector<Vec3> pose = body_pose(body, f / fps);
    for (Vec3& p : pose) p *= 1000.0;
    seq.frames.emplace_back(std::move(pose), f);
  }
  return seq;
}

std::vector<TrainingExample> labelled_examples(std::span<const MarkerFrame> frames) {
  std::vector<TrainingExample> out;
  out.reserve(frames.size());
  for (const MarkerFrame& f : frames) out.push_back({f, Permutation::identity(f.size())});
  return out;
}

std::vector<TrainingExample> augment_shuffle(std::span<const TrainingExample> examples, int count,
                                             std::mt19937_64& rng) {
  if (count < 0) fail(ErrorKind::argument, "shuffle count must be non-negative");
  std::vector<TrainingExample> out;
  out.reserve(examples.size() * static_cast<std::size_t>(count));
  for (const TrainingExample& ex : examples) {
    std::vector<int> mapping(ex.frame.size());
    for (int c = 0; c < count; ++c) {
      std::iota(mapping.begin(), mapping.end(), 0);
      std::shuffle(mapping.begin(), mapping.end(), rng);
      const Permutation q(mapping);
      out.push_back({apply_permutation(ex.frame, q), compose(q, ex.target)});
    }
  }
  return out;
}

std::vector<int> augment_occlude(std::span<TrainingExample> examples, int max_count,
                                 std::mt19937_64& rng) {
  if (max_count < 0) fail(ErrorKind::argument, "max occlusion count must be non-negative");
  std::vector<int> counts;
  counts.reserve(examples.size());
  if (max_count == 0) {
    counts.assign(examples.size(), 0);
    return counts;
  }
  std::uniform_int_distribution<int> how_many(0, max_count);
  std::vector<int> indices;
  for (TrainingExample& ex : examples) {
    const int n = static_cast<int>(ex.frame.size());
    if (max_count > n) fail(ErrorKind::argument, "cannot occlude more markers than the frame has");
    const int k = how_many(rng);
    indices.resize(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(indices[i], indices[pick(rng)]);
      ex.frame.positions[indices[i]] = kOcclusionPlaceholder;
      ex.frame.occluded[indices[i]] = true;
    }
    counts.push_back(k);
  }
  return counts;
}

double occluded_fraction(const Sequence& sequence) {
  std::size_t total = 0;
  std::size_t occluded = 0;
  for (const MarkerFrame& f : sequence.frames) {
    total += f.size();
    occluded += f.size() - f.visible_count();
  }
  return total == 0 ? 0.0 : static_cast<double>(occluded) / static_cast<double>(total);
}

Sequence introduce_gaps(const Sequence& sequence, double ratio, std::mt19937_64& rng,
                        double mean_gap_frames) {
  if (!(ratio >= 0.0 && ratio <= 0.5)) {
    fail(ErrorKind::argument, "occlusion ratio must lie in [0, 0.5]");
  }
  if (!(mean_gap_frames >= 1.0)) fail(ErrorKind::argument, "mean gap length must be >= 1");
  Sequence out = sequence;
  if (out.frames.empty() || ratio == 0.0) return out;

  const auto n_frames = out.frames.size();
  const auto n_markers = out.frames.front().size();
  const auto total = n_frames * n_markers;
  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
  std::size_t occluded = 0;
  std::vector<std::size_t> visible(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    visible[f] = out.frames[f].visible_count();
    occluded += n_markers - visible[f];
  }

  std::uniform_int_distribution<std::size_t> pick_marker(0, n_markers - 1);
  std::uniform_int_distribution<std::size_t> pick_start(0, n_frames - 1);
  // Lengths are 1 + Geometric(p), mean 1 / p.
  std::geometric_distribution<int> extra(1.0 / mean_gap_frames);
  std::size_t attempts = 0;
  while (occluded < target) {
    if (++attempts > 100 * total) {
      fail(ErrorKind::argument, "cannot reach the requested occlusion ratio");
    }
    const std::size_t marker = pick_marker(rng);
    const std::size_t start = pick_start(rng);
    const std::size_t length = 1 + static_cast<std::size_t>(extra(rng));
    for (std::size_t f = start; f < std::min(n_frames, start + length) && occluded < target; ++f) {
      MarkerFrame& frame = out.frames[f];
      if (frame.occluded[marker] || visible[f] <= kMinVisibleMarkers) continue;
      frame.occluded[marker] = true;
      frame.positions[marker] = Vec3::Zero();
      --visible[f];
      ++occluded;
    }
  }
  return out;
}

SubjectSplit split_subjects(std::vector<std::string> subjects, std::size_t n_train,
                            std::size_t n_val, std::size_t n_test, std::uint64_t seed) {
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  if (subjects.size() < n_train + n_val + n_test) {
    fail(ErrorKind::argument, "split needs " + std::to_string(n_train + n_val + n_test) +
                                  " subjects, have " + std::to_string(subjects.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  SubjectSplit split;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::string> part(subjects.begin() + static_cast<std::ptrdiff_t>(from),
                                  subjects.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(part.begin(), part.end());
    return part;
  };
  split.train = take(0, n_train);
  split.val = take(n_train, n_val);
  split.test = take(n_train + n_val, n_test);
  return split;
}

void require_disjoint_subjects(std::span<const std::string> a, std::span<const std::string> b) {
  const std::set<std::string> left(a.begin(), a.end());
  for (const std::string& s : b) {
    if (left.contains(s)) fail(ErrorKind::data, "subject '" + s + "' appears in both sets");
  }
}

std::vector<Sequence> generate_dataset(const DatasetSpec& spec) {
  if (spec.n_subjects < 0 || spec.sequences_per_action < 0 || spec.frames_per_sequence < 0) {
    fail(ErrorKind::argument, "dataset counts must be non-negative");
  }
  std::vector<Sequence> out;
  std::mt19937_64 root(spec.seed);
  for (int s = 0; s < spec.n_subjects; ++s) {
    char name[16];
    std::snprintf(name, sizeof name, "s%03d", s);
    // Every subject and sequence draws from its own stream.
    const std::uint64_t subject_seed = root();
    BodyModel body = BodyModel::make(spec.n_markers, name, subject_seed);
    std::mt19937_64 motion_rng(subject_seed ^ 0x9e3779b97f4a7c15ULL);
    for (MotionFamily action : spec.actions) {
      for (int k = 0; k < spec.sequences_per_action; ++k) {
        body.motion = random_motion(action, motion_rng);
        out.push_back(generate_sequence(body, spec.frames_per_sequence, spec.fps));
      }
    }
  }
  return out;
}

}  // namespace mocap
