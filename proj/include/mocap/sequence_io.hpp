#pragma once

// On-disk formats for sequences and augmented example sets.
//
// Sequence file: UTF-8 CSV. The first line is a JSON header
//   {"action":"walk","fps":120,"n_markers":41,"subject":"s000"}
// followed by one row per frame: frame_index, then x,y,z per marker in column
// order. Occluded samples are written as NaN,NaN,NaN. Finite values use 17
// significant digits, so they round-trip exactly. Ground-truth labels go to
// a parallel ".labels" file with a "column,label" header and one row per
// column.
//
// Example-set file: same header line with "kind":"examples" plus the list of
// source subjects, then one row per example: frame_index, the N target
// entries, then x,y,z per marker (NaN triples for occluded markers).

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mocap/core.hpp"
#include "mocap/synthdata.hpp"

namespace mocap {

std::string serialize_sequence(const Sequence& sequence);
std::string serialize_labels(std::span<const int> labels);

/// Throws ErrorKind::format on a malformed header or row.
Sequence parse_sequence(std::string_view text);
std::vector<int> parse_labels(std::string_view text, int n_markers);

/// "walk.csv" -> "walk.labels".
std::filesystem::path labels_path(const std::filesystem::path& sequence_path);

/// Writes the sequence and, when it has labels, the parallel labels file.
void write_sequence(const std::filesystem::path& path, const Sequence& sequence);

/// Reads a sequence and its labels file when one exists.
Sequence read_sequence(const std::filesystem::path& path);

struct ExampleSet {
  int n_markers = 0;
  std::vector<std::string> subjects;
  std::string source_fingerprint;
  std::vector<TrainingExample> examples;
};

std::string serialize_examples(const ExampleSet& set);
ExampleSet parse_examples(std::string_view text);
void write_examples(const std::filesystem::path& path, const ExampleSet& set);
ExampleSet read_examples(const std::filesystem::path& path);

}  // namespace mocap
