#include "mocap/config_file.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>
#include <type_traits>

#include "mocap/io_util.hpp"

namespace mocap {

namespace {

using nlohmann::json;
using Setter = std::function<void(RunConfig&, const std::string&)>;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_value(const std::string& text, T& out) {
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return !text.empty() && end == text.c_str() + text.size();
  } else {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
  }
}

template <auto Section, auto Member>
Setter bind() {
  return [](RunConfig& cfg, const std::string& text) {
    auto& target = (cfg.*Section).*Member;
    if (!parse_value(text, target)) throw std::invalid_argument(text);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"network.n_markers", bind<&RunConfig::network, &NetworkConfig::n_markers>()},
      {"network.hidden_width", bind<&RunConfig::network, &NetworkConfig::hidden_width>()},
      {"network.n_residual_blocks", bind<&RunConfig::network, &NetworkConfig::n_residual_blocks>()},
      {"network.layers_per_block", bind<&RunConfig::network, &NetworkConfig::layers_per_block>()},
      {"network.leaky_slope", bind<&RunConfig::network, &NetworkConfig::leaky_slope>()},
      {"network.seed", bind<&RunConfig::network, &NetworkConfig::seed>()},
      {"train.batch_size", bind<&RunConfig::train, &TrainConfig::batch_size>()},
      {"train.lr_initial", bind<&RunConfig::train, &TrainConfig::lr_initial>()},
      {"train.lr_decay_factor", bind<&RunConfig::train, &TrainConfig::lr_decay_factor>()},
      {"train.epochs", bind<&RunConfig::train, &TrainConfig::epochs>()},
      {"train.adam_beta1", bind<&RunConfig::train, &TrainConfig::adam_beta1>()},
      {"train.adam_beta2", bind<&RunConfig::train, &TrainConfig::adam_beta2>()},
      {"train.adam_eps", bind<&RunConfig::train, &TrainConfig::adam_eps>()},
      {"train.seed", bind<&RunConfig::train, &TrainConfig::seed>()},
      {"scoring.p", bind<&RunConfig::scoring, &ScoringConfig::p>()},
      {"scoring.q", bind<&RunConfig::scoring, &ScoringConfig::q>()},
      {"sinkhorn.iterations", bind<&RunConfig::sinkhorn, &SinkhornConfig::iterations>()},
      {"sinkhorn.epsilon", bind<&RunConfig::sinkhorn, &SinkhornConfig::epsilon>()},
  };
  return table;
}

}  // namespace

void apply_config_text(std::string_view text, RunConfig& cfg) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::format, where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(ErrorKind::format, where + "unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument&) {
      fail(ErrorKind::format, where + "bad value '" + value + "' for " + key);
    }
  }
  cfg.network.validate();
  cfg.train.validate();
  cfg.scoring.validate();
  cfg.sinkhorn.validate();
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  apply_config_text(read_file(path), base);
  return base;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : setters()) keys.push_back(k);
  return keys;
}

json to_json(const NetworkConfig& c) {
  return {{"n_markers", c.n_markers},
          {"hidden_width", c.hidden_width},
          {"n_residual_blocks", c.n_residual_blocks},
          {"layers_per_block", c.layers_per_block},
          {"leaky_slope", c.leaky_slope},
          {"seed", c.seed}};
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},     {"lr_initial", c.lr_initial},
          {"lr_decay_factor", c.lr_decay_factor}, {"epochs", c.epochs},
          {"adam_beta1", c.adam_beta1},     {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},         {"seed", c.seed}};
}

json to_json(const ScoringConfig& c) { return {{"p", c.p}, {"q", c.q}}; }

json to_json(const SinkhornConfig& c) {
  return {{"iterations", c.iterations}, {"epsilon", c.epsilon}};
}

json to_json(const RunConfig& c) {
  return {{"network", to_json(c.network)},
          {"train", to_json(c.train)},
          {"scoring", to_json(c.scoring)},
          {"sinkhorn", to_json(c.sinkhorn)}};
}

}  // namespace mocap
