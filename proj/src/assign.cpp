#include "mocap/assign.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace mocap {

namespace {

struct DualSolution {
  std::vector<int> label_of;   // per column (marker)
  std::vector<int> marker_of;  // per row (label)
  std::vector<double> u;       // marker potentials
  std::vector<double> v;       // label potentials
};

// Shortest augmenting path Hungarian method. Markers (columns of `cost`) are
// inserted one at a time; potentials keep reduced costs non-negative.
DualSolution hungarian(const SquareMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> owner(n + 1, 0), way(n + 1, 0);  // 1-based, 0 = free
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);

  for (int marker = 1; marker <= n; ++marker) {
    owner[0] = marker;
    int label0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[label0] = 1;
      const int m0 = owner[label0];
      double delta = inf;
      int label1 = 0;
      for (int label = 1; label <= n; ++label) {
        if (used[label]) continue;
        const double reduced = cost(label - 1, m0 - 1) - u[m0] - v[label];
        if (reduced < min_slack[label]) {
          min_slack[label] = reduced;
          way[label] = label0;
        }
        if (min_slack[label] < delta) {
          delta = min_slack[label];
          label1 = label;
        }
      }
      for (int label = 0; label <= n; ++label) {
        if (used[label]) {
          u[owner[label]] += delta;
          v[label] -= delta;
        } else {
          min_slack[label] -= delta;
        }
      }
      label0 = label1;
    } while (owner[label0] != 0);
    do {
      const int label1 = way[label0];
      owner[label0] = owner[label1];
      label0 = label1;
    } while (label0 != 0);
  }

  DualSolution s;
  s.label_of.assign(n, -1);
  s.marker_of.assign(n, -1);
  for (int label = 1; label <= n; ++label) {
    s.label_of[owner[label] - 1] = label - 1;
    s.marker_of[label - 1] = owner[label] - 1;
  }
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  return s;
}

// Rewrites an optimal matching into the lexicographically smallest matching
// that uses only tight edges (zero reduced cost). By complementary slackness
// every perfect matching on tight edges is optimal.
void lexicographic_minimum(const SquareMatrix& cost, DualSolution& s) {
  const int n = static_cast<int>(cost.rows());
  const double tolerance = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  auto tight = [&](int marker, int label) {
    return cost(label, marker) - s.u[marker] - s.v[label] <= tolerance;
  };

  std::vector<char> label_fixed(n, 0);
  std::vector<int> parent_marker(n);
  std::vector<char> seen_marker(n);
  for (int marker = 0; marker < n; ++marker) {
    const int current = s.label_of[marker];
    for (int label = 0; label < current; ++label) {
      if (label_fixed[label] || !tight(marker, label)) continue;
      // Search an alternating path from the label's owner to `current`
      // through unfixed tight edges, avoiding `label` itself.
      const int start = s.marker_of[label];
      std::fill(seen_marker.begin(), seen_marker.end(), 0);
      std::fill(parent_marker.begin(), parent_marker.end(), -1);
      std::deque<int> queue{start};
      seen_marker[start] = 1;
      seen_marker[marker] = 1;
      int end_marker = -1;
      while (!queue.empty() && end_marker < 0) {
        const int m = queue.front();
        queue.pop_front();
        for (int l = 0; l < n; ++l) {
          if (l == label || label_fixed[l] || !tight(m, l)) continue;
          if (l == current) {
            end_marker = m;
            break;
          }
          const int next = s.marker_of[l];
          if (seen_marker[next]) continue;
          seen_marker[next] = 1;
          parent_marker[next] = m;
          queue.push_back(next);
        }
      }
      if (end_marker < 0) continue;
      // Shift labels back along the path: each marker on it takes the label
      // of its successor, the last one takes `current`, and `marker` takes
      // `label` from `start`.
      int m = end_marker;
      int take = current;
      while (true) {
        const int previous = s.label_of[m];
        s.label_of[m] = take;
        s.marker_of[take] = m;
        if (m == start) break;
        take = previous;
        m = parent_marker[m];
      }
      s.label_of[marker] = label;
      s.marker_of[label] = marker;
      break;
    }
    label_fixed[s.label_of[marker]] = 1;
  }
}

}  // namespace

double assignment_cost(const SquareMatrix& cost, const Permutation& p) {
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) total += cost(p[j], static_cast<Eigen::Index>(j));
  return total;
}

AssignmentResult solve_assignment(const SquareMatrix& cost) {
  require_square(cost, "assignment");
  if (!cost.allFinite()) fail(ErrorKind::domain, "assignment cost matrix is not finite");
  DualSolution s = hungarian(cost);
  lexicographic_minimum(cost, s);
  AssignmentResult r{Permutation(std::move(s.label_of)), 0.0};
  r.total_cost = assignment_cost(cost, r.permutation);
  return r;
}

AssignmentResult decode(const SquareMatrix& d) {
  require_square(d, "decode");
  const SquareMatrix cost = (1.0 - d.array()).matrix();
  return solve_assignment(cost);
}

AssignmentResult brute_force_decode(const SquareMatrix& d) {
  require_square(d, "brute_force_decode");
  if (d.rows() > kBruteForceLimit) {
    fail(ErrorKind::argument, "brute_force_decode refuses N = " + std::to_string(d.rows()) +
                                  " > " + std::to_string(kBruteForceLimit));
  }
  const SquareMatrix cost = (1.0 - d.array()).matrix();
  std::vector<int> mapping(static_cast<std::size_t>(d.rows()));
  std::iota(mapping.begin(), mapping.end(), 0);
  std::vector<int> best = mapping;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < mapping.size(); ++j) {
      total += cost(mapping[j], static_cast<Eigen::Index>(j));
    }
    if (total < best_cost) {
      best_cost = total;
      best = mapping;
    }
  } while (std::next_permutation(mapping.begin(), mapping.end()));
  return {Permutation(std::move(best)), best_cost};
}

}  // namespace mocap
