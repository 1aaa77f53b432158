#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "clasp/dataset/io.hpp"
#include "clasp/error.hpp"

namespace clasp::dataset {

namespace {

using nlohmann::json;

const std::string kHeader = R"({"schema":"clasp-dataset","version":1})";

template <typename T>
std::string shortest(T v) {
  if (!std::isfinite(v)) throw InvalidSignalError("cannot serialise a non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quoted(const std::string& s) { return json(s).dump(); }

template <typename T>
T required(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError("line " + std::to_string(line) + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string format_real(double v) { return shortest(v); }
std::string format_real(float v) { return shortest(v); }

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  if (n < 3) {
    throw SplitError("cannot split " + std::to_string(n) + " examples into train/val/test");
  }
  std::array<std::size_t, 3> sizes = {8 * n / 10, n / 10, 0};
  sizes[2] = n - sizes[0] - sizes[1];
  for (std::size_t i = 1; i < 3; ++i) {
    if (sizes[i] == 0) {
      --sizes[0];
      ++sizes[i];
    }
  }
  return sizes;
}

DatasetSplit split_dataset(const std::vector<LabeledExample>& corpus, std::uint64_t seed) {
  const auto sizes = split_sizes(corpus.size());
  std::set<std::string> ids;
  for (const auto& ex : corpus) {
    if (!ids.insert(ex.signal.id).second) {
      throw SplitError("duplicate example id '" + ex.signal.id + "'");
    }
  }
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher-Yates with explicit draws: std::shuffle is not portable across
  // standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  DatasetSplit split;
  split.seed = seed;
  std::size_t k = 0;
  for (std::size_t i = 0; i < sizes[0]; ++i) split.train.push_back(corpus[order[k++]]);
  for (std::size_t i = 0; i < sizes[1]; ++i) split.val.push_back(corpus[order[k++]]);
  for (std::size_t i = 0; i < sizes[2]; ++i) split.test.push_back(corpus[order[k++]]);
  return split;
}

std::string to_jsonl_line(const LabeledExample& ex) {
  std::string out;
  out.reserve(ex.signal.values.size() * 12 + 256);
  out += "{\"id\":" + quoted(ex.signal.id) + ",\"values\":[";
  for (std::size_t i = 0; i < ex.signal.values.size(); ++i) {
    if (i) out += ',';
    out += shortest(ex.signal.values[i]);
  }
  out += "],\"text\":" + quoted(ex.caption.text);
  out += ",\"trend\":" + quoted(std::string(to_string(ex.labels.trend)));
  out += ",\"periodic\":" + quoted(std::string(to_string(ex.labels.periodic)));
  out += ",\"fluctuation\":" + quoted(std::string(to_string(ex.labels.fluctuation)));
  out += ",\"gen_params\":{";
  bool first = true;
  for (const auto& [name, value] : ex.gen_params) {
    if (!first) out += ',';
    first = false;
    out += quoted(name) + ':' + shortest(value);
  }
  out += "},\"template_id\":" + std::to_string(ex.template_id) + '}';
  return out;
}

LabeledExample from_jsonl_line(const std::string& line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_number) + ": " + e.what());
  }
  if (!obj.is_object()) {
    throw ParseError("line " + std::to_string(line_number) + ": expected a JSON object");
  }
  LabeledExample ex;
  ex.signal.id = required<std::string>(obj, "id", line_number);
  ex.signal.values = required<std::vector<float>>(obj, "values", line_number);
  ex.caption.id = ex.signal.id;
  ex.caption.text = required<std::string>(obj, "text", line_number);
  try {
    ex.labels.trend = parse_trend(required<std::string>(obj, "trend", line_number));
    ex.labels.periodic = parse_periodic(required<std::string>(obj, "periodic", line_number));
    ex.labels.fluctuation =
        parse_fluctuation(required<std::string>(obj, "fluctuation", line_number));
  } catch (const ParseError& e) {
    throw ParseError("line " + std::to_string(line_number) + ": " + e.what());
  }
  ex.gen_params = required<GenParams>(obj, "gen_params", line_number);
  ex.template_id = required<int>(obj, "template_id", line_number);
  return ex;
}

void write_jsonl(std::ostream& out, const std::vector<LabeledExample>& examples) {
  out << kHeader << '\n';
  for (const auto& ex : examples) out << to_jsonl_line(ex) << '\n';
}

std::vector<LabeledExample> read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("line 1: ") + e.what());
  }
  if (!header.is_object() || header.value("schema", "") != "clasp-dataset") {
    throw ParseError("line 1: not a clasp-dataset file");
  }
  const int version = header.value("version", -1);
  if (version != kDatasetSchemaVersion) {
    throw VersionError("dataset schema version " + std::to_string(version) + ", expected " +
                       std::to_string(kDatasetSchemaVersion));
  }
  std::vector<LabeledExample> out;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    out.push_back(from_jsonl_line(line, line_number));
  }
  return out;
}

void save_jsonl(const std::vector<LabeledExample>& examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_jsonl(out, examples);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<LabeledExample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_jsonl(in);
}

}  // namespace clasp::dataset
