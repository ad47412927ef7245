#include <doctest.h>

#include "mocap/core.hpp"
#include "test_util.hpp"

using namespace mocap;
using mocap::testing::random_permutation;

namespace {

MarkerFrame abc() {
  return MarkerFrame({Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 3)}, {false, true, false}, 4);
}

}  // namespace

TEST_CASE("apply_permutation with identity is a no-op") {
  const MarkerFrame x = abc();
  CHECK(apply_permutation(x, Permutation::identity(3)) == x);
}

TEST_CASE("apply_permutation: (a,b,c) under (2,0,1) gives (c,a,b)") {
  const MarkerFrame x = abc();
  const MarkerFrame y = apply_permutation(x, Permutation({2, 0, 1}));
  CHECK(y.positions[0] == x.positions[2]);
  CHECK(y.positions[1] == x.positions[0]);
  CHECK(y.positions[2] == x.positions[1]);
  CHECK(y.occluded == std::vector<bool>{false, false, true});
  CHECK(y.frame_index == 4);
}

TEST_CASE("every permutation of three markers is a bijection on the frame") {
  std::vector<int> m{0, 1, 2};
  int count = 0;
  do {
    const MarkerFrame y = apply_permutation(abc(), Permutation(m));
    for (int k = 0; k < 3; ++k) CHECK(y.positions[k] == abc().positions[m[k]]);
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) CHECK(y.positions[a] != y.positions[b]);
    }
    ++count;
  } while (std::next_permutation(m.begin(), m.end()));
  CHECK(count == 6);
}

TEST_CASE("apply_permutation rejects a size mismatch") {
  try {
    apply_permutation(abc(), Permutation::identity(4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension);
  }
}

TEST_CASE("Permutation rejects non-bijections") {
  CHECK_THROWS_AS(Permutation({0, 0, 1}), Error);
  CHECK_THROWS_AS(Permutation({0, 3, 1}), Error);
  CHECK_THROWS_AS(Permutation({-1, 0}), Error);
}

TEST_CASE("invert_permutation") {
  CHECK(invert_permutation(Permutation::identity(5)).is_identity());
  CHECK(invert_permutation(Permutation({1, 2, 0})) == Permutation({2, 0, 1}));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Permutation p = random_permutation(41, rng);
    REQUIRE(compose(p, invert_permutation(p)).is_identity());
    REQUIRE(compose(invert_permutation(p), p).is_identity());
  }
}

TEST_CASE("round trip through the inverse restores the frame bitwise") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> pts(12);
    std::vector<bool> occ(12);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      pts[k] = Vec3(g(rng), g(rng), g(rng));
      occ[k] = g(rng) > 1.0;
    }
    const MarkerFrame x(pts, occ, t);
    const Permutation p = random_permutation(12, rng);
    REQUIRE(apply_permutation(apply_permutation(x, p), invert_permutation(p)) == x);
  }
}

TEST_CASE("permutation_to_matrix") {
  CHECK(permutation_to_matrix(Permutation::identity(4)) == SquareMatrix::Identity(4, 4));

  SquareMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(permutation_to_matrix(Permutation({1, 0})) == swap);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const SquareMatrix m = permutation_to_matrix(random_permutation(9, rng));
    CHECK((m.rowwise().sum().array() == 1.0).all());
    CHECK((m.colwise().sum().array() == 1.0).all());
    CHECK(m * m.transpose() == SquareMatrix::Identity(9, 9));
  }
}

TEST_CASE("matrix action agrees with apply_permutation") {
  std::mt19937_64 rng(4);
  const MarkerFrame x = mocap::testing::random_cloud(7, rng);
  const Permutation p = random_permutation(7, rng);
  Eigen::Matrix<double, Eigen::Dynamic, 3> stacked(7, 3);
  for (int k = 0; k < 7; ++k) stacked.row(k) = x.positions[k].transpose();
  const Eigen::Matrix<double, Eigen::Dynamic, 3> moved = permutation_to_matrix(p) * stacked;
  const MarkerFrame y = apply_permutation(x, p);
  for (int k = 0; k < 7; ++k) CHECK(moved.row(k).transpose() == y.positions[k]);
}

TEST_CASE("permutation_to_matrix is a homomorphism") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Permutation p = random_permutation(8, rng);
    const Permutation q = random_permutation(8, rng);
    REQUIRE(permutation_to_matrix(compose(p, q)) ==
            permutation_to_matrix(p) * permutation_to_matrix(q));
  }
}

TEST_CASE("MarkerFrame validation and counts") {
  const MarkerFrame x = abc();
  CHECK(x.visible_count() == 2);
  MarkerFrame bad = x;
  bad.occluded.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("error kinds have stable names") {
  CHECK(error_kind_name(ErrorKind::degenerate_frame) == "degenerate_frame");
  CHECK(error_kind_name(ErrorKind::version) == "version");
}
