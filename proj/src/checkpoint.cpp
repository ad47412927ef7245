#include "mocap/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "mocap/io_util.hpp"

namespace mocap {

namespace {

constexpr std::string_view kMagic = "MOCAPNET";

using nlohmann::json;

void append_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t read_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

json config_to_json(const NetworkConfig& c) {
  return {{"n_markers", c.n_markers},
          {"hidden_width", c.hidden_width},
          {"n_residual_blocks", c.n_residual_blocks},
          {"layers_per_block", c.layers_per_block},
          {"leaky_slope", c.leaky_slope},
          {"seed", c.seed}};
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig c;
  c.n_markers = j.at("n_markers").get<int>();
  c.hidden_width = j.at("hidden_width").get<int>();
  c.n_residual_blocks = j.at("n_residual_blocks").get<int>();
  c.layers_per_block = j.at("layers_per_block").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json meta_to_json(const TrainingMeta& m) {
  json log = json::array();
  for (const EpochLog& e : m.log) {
    log.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_loss", e.val_loss},
                   {"learning_rate", e.learning_rate},
                   {"clamped", e.clamped}});
  }
  return {{"epochs_run", m.epochs_run},
          {"best_epoch", m.best_epoch},
          {"best_val_loss", m.best_val_loss},
          {"dataset_fingerprint", m.dataset_fingerprint},
          {"train_subjects", m.train_subjects},
          {"log", std::move(log)}};
}

TrainingMeta meta_from_json(const json& j) {
  TrainingMeta m;
  m.epochs_run = j.at("epochs_run").get<int>();
  m.best_epoch = j.at("best_epoch").get<int>();
  m.best_val_loss = j.at("best_val_loss").is_null() ? 0.0 : j.at("best_val_loss").get<double>();
  m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  m.train_subjects = j.at("train_subjects").get<std::vector<std::string>>();
  for (const json& e : j.at("log")) {
    m.log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                     e.at("val_loss").get<double>(), e.at("learning_rate").get<double>(),
                     e.at("clamped").get<std::size_t>()});
  }
  return m;
}

}  // namespace

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint) {
  const Network& net = checkpoint.network;
  net.validate_shapes();
  json tensors = json::array();
  std::string payload;
  std::uint64_t offset = 0;
  auto add = [&](const std::string& name, const auto& tensor, Eigen::Index rows,
                 Eigen::Index cols) {
    tensors.push_back({{"name", name}, {"shape", {rows, cols}}, {"offset", offset}});
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        append_u64(payload, std::bit_cast<std::uint64_t>(static_cast<double>(tensor(r, c))));
      }
    }
    offset += static_cast<std::uint64_t>(rows * cols);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const DenseLayer& layer = net.layers()[l];
    add(net.layer_name(l) + ".weight", layer.weight, layer.weight.rows(), layer.weight.cols());
    add(net.layer_name(l) + ".bias", layer.bias, layer.bias.size(), 1);
  }
  const json header = {
      {"format", "mocap-permnet"},
      {"version", checkpoint.version},
      {"config", config_to_json(net.config())},
      {"sinkhorn",
       {{"iterations", checkpoint.sinkhorn.iterations},
        {"epsilon", checkpoint.sinkhorn.epsilon}}},
      {"training", meta_to_json(checkpoint.meta)},
      {"tensors", std::move(tensors)},
  };
  const std::string text = header.dump();
  std::string out(kMagic);
  const auto length = static_cast<std::uint32_t>(text.size());
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((length >> (8 * b)) & 0xff));
  out += text;
  out += payload;
  return out;
}

ModelCheckpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    fail(ErrorKind::format, "not a checkpoint file (bad magic)");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint32_t length = 0;
  for (int b = 0; b < 4; ++b) length |= static_cast<std::uint32_t>(raw[8 + b]) << (8 * b);
  const std::size_t header_start = kMagic.size() + 4;
  if (bytes.size() < header_start + length) fail(ErrorKind::format, "truncated checkpoint header");

  json header;
  try {
    header = json::parse(bytes.substr(header_start, length));
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("checkpoint header: ") + e.what());
  }

  ModelCheckpoint ckpt;
  try {
    ckpt.version = header.at("version").get<int>();
    if (ckpt.version != kCheckpointVersion) {
      fail(ErrorKind::version, "checkpoint version " + std::to_string(ckpt.version) +
                                   ", expected " + std::to_string(kCheckpointVersion));
    }
    const NetworkConfig cfg = config_from_json(header.at("config"));
    ckpt.sinkhorn.iterations = header.at("sinkhorn").at("iterations").get<int>();
    ckpt.sinkhorn.epsilon = header.at("sinkhorn").at("epsilon").get<double>();
    ckpt.meta = meta_from_json(header.at("training"));
    ckpt.network = Network::zeros(cfg);

    const std::size_t data_start = header_start + length;
    const std::size_t available = (bytes.size() - data_start) / 8;
    const json& tensors = header.at("tensors");
    auto& layers = ckpt.network.layers();
    if (tensors.size() != 2 * layers.size()) {
      fail(ErrorKind::version, "checkpoint holds " + std::to_string(tensors.size()) +
                                   " tensors, config needs " + std::to_string(2 * layers.size()));
    }
    auto load = [&](const json& t, const std::string& name, auto& tensor, Eigen::Index rows,
                    Eigen::Index cols) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      if (t.at("name").get<std::string>() != name || shape.size() != 2 || shape[0] != rows ||
          shape[1] != cols) {
        fail(ErrorKind::version, "tensor " + name + " does not match the network config");
      }
      const auto off = t.at("offset").get<std::uint64_t>();
      if (off + static_cast<std::uint64_t>(rows * cols) > available) {
        fail(ErrorKind::format, "tensor " + name + " runs past the end of the file");
      }
      const unsigned char* p = raw + data_start + 8 * off;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c, p += 8) {
          tensor(r, c) = std::bit_cast<double>(read_u64(p));
        }
      }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayer& layer = layers[l];
      const std::string name = ckpt.network.layer_name(l);
      load(tensors[2 * l], name + ".weight", layer.weight, layer.weight.rows(),
           layer.weight.cols());
      load(tensors[2 * l + 1], name + ".bias", layer.bias, layer.bias.size(), 1);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("checkpoint header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  write_file(path, serialize_checkpoint(checkpoint));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace mocap
