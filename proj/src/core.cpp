#include "mocap/core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mocap {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_frame: return "degenerate_frame";
    case ErrorKind::argument: return "argument";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::data: return "data";
    case ErrorKind::format: return "format";
    case ErrorKind::version: return "version";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

MarkerFrame::MarkerFrame(std::vector<Vec3> positions_, std::vector<bool> occluded_,
                         std::int64_t frame_index_)
    : positions(std::move(positions_)),
      occluded(std::move(occluded_)),
      frame_index(frame_index_) {
  validate();
}

MarkerFrame::MarkerFrame(std::vector<Vec3> positions_, std::int64_t frame_index_)
    : positions(std::move(positions_)),
      occluded(positions.size(), false),
      frame_index(frame_index_) {}

std::size_t MarkerFrame::visible_count() const noexcept {
  return static_cast<std::size_t>(std::count(occluded.begin(), occluded.end(), false));
}

void MarkerFrame::validate() const {
  if (positions.size() != occluded.size()) {
    fail(ErrorKind::dimension, "marker frame has " + std::to_string(positions.size()) +
                                   " positions but " + std::to_string(occluded.size()) +
                                   " occlusion flags");
  }
}

Permutation::Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (int v : mapping_) {
    if (v < 0 || static_cast<std::size_t>(v) >= mapping_.size() || seen[v]) {
      fail(ErrorKind::argument, "mapping is not a bijection on 0.." +
                                    std::to_string(mapping_.size()));
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> m(n);
  std::iota(m.begin(), m.end(), 0);
  return Permutation(std::move(m));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t k = 0; k < mapping_.size(); ++k) {
    if (mapping_[k] != static_cast<int>(k)) return false;
  }
  return true;
}

MarkerFrame apply_permutation(const MarkerFrame& frame, const Permutation& p) {
  frame.validate();
  if (frame.size() != p.size()) {
    fail(ErrorKind::dimension, "permutation of size " + std::to_string(p.size()) +
                                   " applied to frame of " + std::to_string(frame.size()) +
                                   " markers");
  }
  MarkerFrame out;
  out.frame_index = frame.frame_index;
  out.positions.resize(frame.size());
  out.occluded.resize(frame.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.positions[k] = frame.positions[p[k]];
    out.occluded[k] = frame.occluded[p[k]];
  }
  return out;
}

Permutation invert_permutation(const Permutation& p) {
  std::vector<int> inv(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) inv[p[k]] = static_cast<int>(k);
  return Permutation(std::move(inv));
}

Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size()) {
    fail(ErrorKind::dimension, "cannot compose permutations of different sizes");
  }
  std::vector<int> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = q[p[k]];
  return Permutation(std::move(out));
}

SquareMatrix permutation_to_matrix(const Permutation& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  SquareMatrix m = SquareMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m(k, p[k]) = 1.0;
  return m;
}

void require_square(const SquareMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    fail(ErrorKind::dimension, std::string(what) + ": expected a non-empty square matrix, got " +
                                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace mocap
