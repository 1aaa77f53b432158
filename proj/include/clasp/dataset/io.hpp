#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "clasp/dataset/types.hpp"

namespace clasp::dataset {

inline constexpr int kDatasetSchemaVersion = 1;

// Split sizes for n items: floor(0.8n), floor(0.1n), rest; then one item
// moved from train into any split left empty. Throws SplitError for n < 3.
std::array<std::size_t, 3> split_sizes(std::size_t n);

// Seeded shuffle, then partition by split_sizes.
DatasetSplit split_dataset(const std::vector<LabeledExample>& corpus, std::uint64_t seed);

// Canonical line for one example: fixed key order, shortest round-trip reals.
std::string to_jsonl_line(const LabeledExample& ex);
LabeledExample from_jsonl_line(const std::string& line, std::size_t line_number = 0);

void write_jsonl(std::ostream& out, const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> read_jsonl(std::istream& in);

void save_jsonl(const std::vector<LabeledExample>& examples, const std::filesystem::path& path);
std::vector<LabeledExample> load_jsonl(const std::filesystem::path& path);

// Shortest decimal that parses back to the same value.
std::string format_real(double v);
std::string format_real(float v);

}  // namespace clasp::dataset
