#include "mocap/sequence_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "mocap/io_util.hpp"

namespace mocap {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
  fail(ErrorKind::format, "line " + std::to_string(line + 1) + ": " + what);
}

long long parse_int(std::string_view token, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    bad_row(line, "expected an integer, got '" + std::string(token) + "'");
  }
  return v;
}

double parse_double(std::string_view token, std::size_t line) {
  const std::string s(token);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    bad_row(line, "expected a number, got '" + s + "'");
  }
  return v;
}

json parse_header(std::string_view line) {
  try {
    json header = json::parse(line);
    if (!header.is_object()) fail(ErrorKind::format, "header is not a JSON object");
    return header;
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("malformed header: ") + e.what());
  }
}

void append_triple(std::string& out, const Vec3& p, bool occluded) {
  if (occluded) {
    out += ",NaN,NaN,NaN";
    return;
  }
  for (int a = 0; a < 3; ++a) {
    out += ',';
    out += format_double(p[a]);
  }
}

// Reads x,y,z triples starting at `first`; a NaN triple marks occlusion.
void read_triples(const std::vector<std::string_view>& cells, std::size_t first, int n,
                  std::size_t line, const Vec3& occluded_position, MarkerFrame& frame) {
  frame.positions.resize(static_cast<std::size_t>(n));
  frame.occluded.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vec3 p;
    int nan_count = 0;
    for (int a = 0; a < 3; ++a) {
      p[a] = parse_double(cells[first + 3 * k + a], line);
      if (std::isnan(p[a])) ++nan_count;
    }
    if (nan_count != 0 && nan_count != 3) bad_row(line, "partially missing marker " + std::to_string(k));
    if (nan_count == 3) {
      frame.positions[k] = occluded_position;
      frame.occluded[k] = true;
    } else {
      if (!p.allFinite()) bad_row(line, "non-finite coordinate for marker " + std::to_string(k));
      frame.positions[k] = p;
      frame.occluded[k] = false;
    }
  }
}

}  // namespace

std::string serialize_sequence(const Sequence& sequence) {
  const SequenceHeader& h = sequence.header;
  const json header = {{"n_markers", h.n_markers},
                       {"fps", h.fps},
                       {"subject", h.subject},
                       {"action", h.action}};
  std::string out = header.dump();
  out += '\n';
  for (const MarkerFrame& f : sequence.frames) {
    f.validate();
    if (f.size() != static_cast<std::size_t>(h.n_markers)) {
      fail(ErrorKind::dimension, "frame " + std::to_string(f.frame_index) + " has " +
                                     std::to_string(f.size()) + " markers, header says " +
                                     std::to_string(h.n_markers));
    }
    out += std::to_string(f.frame_index);
    for (std::size_t k = 0; k < f.size(); ++k) append_triple(out, f.positions[k], f.occluded[k]);
    out += '\n';
  }
  return out;
}

std::string serialize_labels(std::span<const int> labels) {
  std::string out = "column,label\n";
  for (std::size_t c = 0; c < labels.size(); ++c) {
    out += std::to_string(c) + ',' + std::to_string(labels[c]) + '\n';
  }
  return out;
}

Sequence parse_sequence(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorKind::format, "empty sequence file");
  const json header = parse_header(lines[0]);
  Sequence seq;
  try {
    seq.header.n_markers = header.at("n_markers").get<int>();
    seq.header.fps = header.at("fps").get<double>();
    seq.header.subject = header.at("subject").get<std::string>();
    seq.header.action = header.at("action").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("sequence header: ") + e.what());
  }
  const int n = seq.header.n_markers;
  if (n < 1) fail(ErrorKind::format, "sequence header: n_markers must be positive");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != 1 + 3 * static_cast<std::size_t>(n)) {
      bad_row(i, "expected " + std::to_string(1 + 3 * n) + " fields, got " +
                     std::to_string(cells.size()));
    }
    MarkerFrame frame;
    frame.frame_index = parse_int(cells[0], i);
    read_triples(cells, 1, n, i, Vec3::Zero(), frame);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<int> parse_labels(std::string_view text, int n_markers) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "column,label") {
    fail(ErrorKind::format, "labels file must start with 'column,label'");
  }
  std::vector<int> labels(static_cast<std::size_t>(n_markers), -1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != 2) bad_row(i, "expected column,label");
    const long long c = parse_int(cells[0], i);
    const long long l = parse_int(cells[1], i);
    if (c < 0 || c >= n_markers || l < 0 || l >= n_markers || labels[c] >= 0) {
      bad_row(i, "label row out of range or repeated");
    }
    labels[c] = static_cast<int>(l);
  }
  for (int l : labels) {
    if (l < 0) fail(ErrorKind::format, "labels file does not cover every column");
  }
  std::vector<bool> seen(labels.size(), false);
  for (int l : labels) {
    if (seen[l]) fail(ErrorKind::format, "label " + std::to_string(l) + " assigned twice");
    seen[l] = true;
  }
  return labels;
}

std::filesystem::path labels_path(const std::filesystem::path& sequence_path) {
  std::filesystem::path p = sequence_path;
  p.replace_extension(".labels");
  return p;
}

void write_sequence(const std::filesystem::path& path, const Sequence& sequence) {
  write_file(path, serialize_sequence(sequence));
  if (!sequence.labels.empty()) write_file(labels_path(path), serialize_labels(sequence.labels));
}

Sequence read_sequence(const std::filesystem::path& path) {
  Sequence seq = parse_sequence(read_file(path));
  const auto lp = labels_path(path);
  if (std::filesystem::exists(lp)) seq.labels = parse_labels(read_file(lp), seq.header.n_markers);
  return seq;
}

std::string serialize_examples(const ExampleSet& set) {
  const json header = {{"kind", "examples"},
                       {"n_markers", set.n_markers},
                       {"subjects", set.subjects},
                       {"source_fingerprint", set.source_fingerprint}};
  std::string out = header.dump();
  out += '\n';
  for (const TrainingExample& ex : set.examples) {
    if (ex.frame.size() != static_cast<std::size_t>(set.n_markers) ||
        ex.target.size() != static_cast<std::size_t>(set.n_markers)) {
      fail(ErrorKind::dimension, "example does not match n_markers");
    }
    out += std::to_string(ex.frame.frame_index);
    for (int v : ex.target.mapping()) {
      out += ',';
      out += std::to_string(v);
    }
    for (std::size_t k = 0; k < ex.frame.size(); ++k) {
      append_triple(out, ex.frame.positions[k], ex.frame.occluded[k]);
    }
    out += '\n';
  }
  return out;
}

ExampleSet parse_examples(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorKind::format, "empty example file");
  const json header = parse_header(lines[0]);
  ExampleSet set;
  try {
    if (header.at("kind").get<std::string>() != "examples") {
      fail(ErrorKind::format, "not an example file");
    }
    set.n_markers = header.at("n_markers").get<int>();
    set.subjects = header.at("subjects").get<std::vector<std::string>>();
    set.source_fingerprint = header.at("source_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("example header: ") + e.what());
  }
  const int n = set.n_markers;
  if (n < 1) fail(ErrorKind::format, "example header: n_markers must be positive");
  set.examples.reserve(lines.size() - 1);
  std::vector<int> mapping(static_cast<std::size_t>(n));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != 1 + 4 * static_cast<std::size_t>(n)) {
      bad_row(i, "expected " + std::to_string(1 + 4 * n) + " fields, got " +
                     std::to_string(cells.size()));
    }
    TrainingExample ex;
    ex.frame.frame_index = parse_int(cells[0], i);
    for (int k = 0; k < n; ++k) mapping[k] = static_cast<int>(parse_int(cells[1 + k], i));
    try {
      ex.target = Permutation(mapping);
    } catch (const Error&) {
      bad_row(i, "target is not a permutation");
    }
    read_triples(cells, 1 + static_cast<std::size_t>(n), n, i, kOcclusionPlaceholder, ex.frame);
    set.examples.push_back(std::move(ex));
  }
  return set;
}

void write_examples(const std::filesystem::path& path, const ExampleSet& set) {
  write_file(path, serialize_examples(set));
}

ExampleSet read_examples(const std::filesystem::path& path) {
  return parse_examples(read_file(path));
}

}  // namespace mocap
