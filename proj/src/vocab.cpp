#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "clasp/dataset/captions.hpp"
#include "clasp/encoders/vocab.hpp"
#include "clasp/error.hpp"

namespace clasp::encoders {

namespace {

const std::string kHeaderPrefix = "#clasp-vocab";

}  // namespace

Vocab::Vocab() : tokens_{"<pad>", "<unk>"} { rebuild_lookup(); }

void Vocab::rebuild_lookup() {
  lookup_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!lookup_.emplace(tokens_[i], i).second) {
      throw VocabError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::build(const std::vector<dataset::Caption>& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : corpus) {
    for (auto& w : dataset::normalize_tokens(c.text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, n] : counts) {
    if (n >= min_count && w != "<pad>" && w != "<unk>") kept.emplace_back(w, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  v.min_count_ = min_count;
  for (auto& [w, n] : kept) v.tokens_.push_back(std::move(w));
  v.rebuild_lookup();
  return v;
}

const std::string& Vocab::token(std::size_t index) const {
  if (index >= tokens_.size()) {
    throw VocabError("token index " + std::to_string(index) + " out of range for vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[index];
}

std::size_t Vocab::index(std::string_view word) const {
  const auto it = lookup_.find(std::string(word));
  return it == lookup_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view word) const { return lookup_.count(std::string(word)) != 0; }

std::string Vocab::serialize() const {
  std::string out = kHeaderPrefix + " version=" + std::to_string(kVocabVersion) +
                    " min_count=" + std::to_string(min_count_) + "\n";
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Vocab Vocab::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeaderPrefix, 0) != 0) {
    throw VocabError("missing vocabulary header");
  }
  int version = -1;
  std::size_t min_count = 0;
  std::istringstream header(line.substr(kHeaderPrefix.size()));
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw VocabError("malformed vocabulary header field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    try {
      if (key == "version") version = std::stoi(value);
      if (key == "min_count") min_count = std::stoul(value);
    } catch (const std::exception&) {
      throw VocabError("malformed vocabulary header field '" + field + "'");
    }
  }
  if (version != kVocabVersion) {
    throw VocabError("vocabulary version " + std::to_string(version) + ", expected " +
                     std::to_string(kVocabVersion));
  }
  Vocab v;
  v.tokens_.clear();
  v.min_count_ = min_count;
  while (std::getline(in, line)) {
    if (!line.empty()) v.tokens_.push_back(line);
  }
  if (v.tokens_.size() < 2 || v.tokens_[kPad] != "<pad>" || v.tokens_[kUnk] != "<unk>") {
    throw VocabError("vocabulary must start with <pad> and <unk>");
  }
  v.rebuild_lookup();
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize();
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

Vocab build_vocab(const std::vector<dataset::Caption>& corpus, std::size_t min_count) {
  return Vocab::build(corpus, min_count);
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
  TokenSeq seq;
  for (const auto& w : dataset::normalize_tokens(text)) seq.indices.push_back(vocab.index(w));
  if (seq.indices.empty()) seq.indices.push_back(kUnk);
  return seq;
}

std::string detokenize(const TokenSeq& seq, const Vocab& vocab) {
  std::string out;
  for (const auto i : seq.indices) {
    if (!out.empty()) out += ' ';
    out += vocab.token(i);
  }
  return out;
}

}  // namespace clasp::encoders
