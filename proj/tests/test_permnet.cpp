#include <doctest.h>

#include <cstring>
#include <json.hpp>

#include "mocap/checkpoint.hpp"
#include "mocap/permnet.hpp"
#include "test_util.hpp"

using namespace mocap;
using mocap::testing::thrown_kind;
using mocap::testing::random_permutation;
using mocap::testing::relative_error;

namespace {

NetworkConfig small_config(int n, int hidden, std::uint64_t seed) {
  NetworkConfig c;
  c.n_markers = n;
  c.hidden_width = hidden;
  c.seed = seed;
  return c;
}

Eigen::VectorXd random_input(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x(3 * n);
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = u(rng);
  return x;
}

std::vector<TrainingExample> random_batch(int n, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrainingExample> batch;
  for (int b = 0; b < size; ++b) {
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    batch.push_back({MarkerFrame(pts), random_permutation(n, rng)});
  }
  return batch;
}

// Rebuilds a checkpoint byte string around an edited JSON header.
std::string with_header(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 4);
  nlohmann::json header = nlohmann::json::parse(bytes.substr(12, len));
  edit(header);
  const std::string text = header.dump();
  const std::uint32_t new_len = static_cast<std::uint32_t>(text.size());
  std::string out = bytes.substr(0, 8);
  out.append(reinterpret_cast<const char*>(&new_len), 4);
  out += text;
  out += bytes.substr(12 + len);
  return out;
}

}  // namespace

TEST_CASE("all-zero weights give 0.5 everywhere") {
  const Network net = Network::zeros(small_config(5, 16, 0));
  std::mt19937_64 rng(40);
  const SquareMatrix s = forward(net, random_input(5, rng));
  CHECK(s.rows() == 5);
  CHECK(s.cols() == 5);
  CHECK((s.array() == 0.5).all());
}

TEST_CASE("outputs are N x N in (0, 1) and pure") {
  std::mt19937_64 rng(41);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network net = Network::initialize(small_config(7, 32, seed));
    const Eigen::VectorXd x = random_input(7, rng);
    const SquareMatrix a = forward(net, x);
    CHECK(a.minCoeff() > 0.0);
    CHECK(a.maxCoeff() < 1.0);
    CHECK(forward(net, x) == a);
  }
}

TEST_CASE("batched and single-frame forward agree") {
  std::mt19937_64 rng(42);
  const Network net = Network::initialize(small_config(6, 24, 3));
  Eigen::MatrixXd inputs(18, 4);
  for (int b = 0; b < 4; ++b) inputs.col(b) = random_input(6, rng);
  const ForwardResult r = forward(net, inputs);
  REQUIRE(r.scores.size() == 4);
  for (int b = 0; b < 4; ++b) {
    CHECK((r.scores[b] - forward(net, Eigen::VectorXd(inputs.col(b)))).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("a zeroed residual block is the identity") {
  NetworkConfig cfg = small_config(4, 12, 7);
  const Network full = Network::initialize(cfg);
  Network zeroed = full;
  const int per = cfg.layers_per_block;
  for (int k = 0; k < per; ++k) {
    zeroed.layers()[1 + per + k].weight.setZero();
    zeroed.layers()[1 + per + k].bias.setZero();
  }
  // Same net without the middle block at all.
  NetworkConfig shorter = cfg;
  shorter.n_residual_blocks = cfg.n_residual_blocks - 1;
  Network dropped = Network::zeros(shorter);
  std::size_t dst = 0;
  for (std::size_t src = 0; src < full.layers().size(); ++src) {
    const bool in_middle = src >= static_cast<std::size_t>(1 + per) && src < static_cast<std::size_t>(1 + 2 * per);
    if (!in_middle) dropped.layers()[dst++] = full.layers()[src];
  }
  std::mt19937_64 rng(43);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = random_input(4, rng);
    REQUIRE(forward(zeroed, x) == forward(dropped, x));
  }
}

TEST_CASE("forward validation") {
  const Network net = Network::initialize(small_config(4, 8, 1));
  CHECK(thrown_kind([&] { forward(net, Eigen::VectorXd(Eigen::VectorXd::Zero(11))); }) == ErrorKind::dimension);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  x(3) = std::numeric_limits<double>::infinity();
  CHECK(thrown_kind([&] { forward(net, x); }) == ErrorKind::numeric);
  Network broken = net;
  broken.layers()[2].weight.resize(3, 3);
  CHECK(thrown_kind([&] { broken.validate_shapes(); }) == ErrorKind::dimension);
}

TEST_CASE("flatten_frame is marker-major with the placeholder for occlusions") {
  MarkerFrame f({Vec3(0.1, 0.2, 0.3), Vec3(0.9, 0.8, 0.7)}, {false, true});
  const Eigen::VectorXd x = flatten_frame(f);
  CHECK(x.size() == 6);
  CHECK(x(0) == 0.1);
  CHECK(x(2) == 0.3);
  CHECK(x.segment<3>(3) == kOcclusionPlaceholder);
}

TEST_CASE("cross-entropy known values") {
  std::mt19937_64 rng(44);
  for (int n : {2, 5, 41}) {
    const Permutation p = random_permutation(n, rng);
    CHECK(column_cross_entropy(SquareMatrix::Constant(n, n, 1.0 / n), p) ==
          doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-14));
    // D equal to the target matrix: entry (target[j], j) is 1.
    SquareMatrix d = SquareMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j) d(p[j], j) = 1.0;
    CHECK(column_cross_entropy(d, p) == 0.0);
  }
  // A zero at the target is clamped, not infinite.
  SquareMatrix z = SquareMatrix::Zero(2, 2);
  CHECK(column_cross_entropy(z, Permutation::identity(2)) == doctest::Approx(-std::log(kLogFloor)));
}

TEST_CASE("zero network loss is ln N") {
  std::mt19937_64 rng(45);
  const Network net = Network::zeros(small_config(6, 8, 0));
  const auto batch = random_batch(6, 5, rng);
  const LossResult r = loss_and_gradients(net, batch, SinkhornConfig{});
  CHECK(r.loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(r.clamped == 0);
}

TEST_CASE("loss is within [0, ln N + slack] near uniform outputs") {
  std::mt19937_64 rng(46);
  Network net = Network::initialize(small_config(5, 8, 2));
  for (auto& layer : net.layers()) layer.weight *= 0.05;
  const auto batch = random_batch(5, 8, rng);
  const double loss = loss_and_gradients(net, batch, SinkhornConfig{}).loss;
  CHECK(loss >= 0.0);
  CHECK(loss <= std::log(5.0) + 0.05);
  CHECK(evaluate_loss(net, batch, SinkhornConfig{}, 3) == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("every weight gradient matches central differences") {
  std::mt19937_64 rng(47);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network net = Network::initialize(small_config(4, 8, seed));
    const auto batch = random_batch(4, 3, rng);
    const SinkhornConfig sk{};
    const LossResult analytic = loss_and_gradients(net, batch, sk);
    Network probe = net;
    // Components below 1e-5 are judged on absolute error, where the
    // difference quotient itself is only good to ~1e-9.
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
      auto check_entry = [&](double& w, double g) {
        const double saved = w;
        w = saved + h;
        const double up = evaluate_loss(probe, batch, sk);
        w = saved - h;
        const double down = evaluate_loss(probe, batch, sk);
        w = saved;
        worst = std::max(worst, relative_error(g, (up - down) / (2 * h), 1e-5));
      };
      DenseLayer& layer = probe.layers()[l];
      const DenseLayer& grad = analytic.grads[l];
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) check_entry(layer.weight(i, j), grad.weight(i, j));
        check_entry(layer.bias(i), grad.bias(i));
      }
    }
    CAPTURE(seed);
    REQUIRE(worst < 1e-4);
  }
}

TEST_CASE("loss_and_gradients rejects an empty batch") {
  const Network net = Network::zeros(small_config(3, 4, 0));
  CHECK(thrown_kind([&] { loss_and_gradients(net, {}, SinkhornConfig{}); }) == ErrorKind::argument);
}

TEST_CASE("checkpoint round trip is exact") {
  ModelCheckpoint ckpt;
  ckpt.network = Network::initialize(small_config(5, 16, 9));
  ckpt.sinkhorn.iterations = 7;
  ckpt.meta.epochs_run = 3;
  ckpt.meta.best_epoch = 1;
  ckpt.meta.best_val_loss = 0.123456789012345;
  ckpt.meta.dataset_fingerprint = "abc";
  ckpt.meta.train_subjects = {"s01", "s02"};
  ckpt.meta.log.push_back({0, 1.5, 1.4, 5e-5, 2});
  const std::string bytes = serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 8) == "MOCAPNET");
  const ModelCheckpoint back = deserialize_checkpoint(bytes);
  CHECK(back.network == ckpt.network);
  CHECK(back.config() == ckpt.config());
  CHECK(back.sinkhorn.iterations == 7);
  CHECK(back.meta.best_val_loss == ckpt.meta.best_val_loss);
  CHECK(back.meta.train_subjects == ckpt.meta.train_subjects);
  CHECK(back.meta.log.size() == 1);
  CHECK(serialize_checkpoint(back) == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "mocap_test_permnet";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "m.ckpt", ckpt);
  CHECK(load_checkpoint(dir / "m.ckpt").network == ckpt.network);
  CHECK(thrown_kind([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorKind::io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loading refuses bad magic, version and shapes") {
  ModelCheckpoint ckpt;
  ckpt.network = Network::initialize(small_config(3, 4, 1));
  const std::string bytes = serialize_checkpoint(ckpt);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(thrown_kind([&] { deserialize_checkpoint(bad_magic); }) == ErrorKind::format);
  CHECK(thrown_kind([&] { deserialize_checkpoint(bytes.substr(0, 10)); }) == ErrorKind::format);
  CHECK(thrown_kind([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)); }) == ErrorKind::format);

  const std::string newer = with_header(bytes, [](nlohmann::json& h) { h["version"] = kCheckpointVersion + 1; });
  CHECK(thrown_kind([&] { deserialize_checkpoint(newer); }) == ErrorKind::version);

  const std::string reshaped = with_header(bytes, [](nlohmann::json& h) {
    h["tensors"][0]["shape"] = {9, 4};
  });
  CHECK(thrown_kind([&] { deserialize_checkpoint(reshaped); }) == ErrorKind::version);

  const std::string wider = with_header(bytes, [](nlohmann::json& h) { h["config"]["hidden_width"] = 5; });
  CHECK(thrown_kind([&] { deserialize_checkpoint(wider); }) == ErrorKind::version);
}
