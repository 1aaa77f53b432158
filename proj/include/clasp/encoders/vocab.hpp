#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clasp/dataset/types.hpp"

namespace clasp::encoders {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kUnk = 1;
inline constexpr int kVocabVersion = 1;

struct TokenSeq {
  std::vector<std::size_t> indices;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Word-level vocabulary. Index 0 is <pad>, index 1 is <unk>; the rest are
// ordered by descending corpus frequency, ties lexicographically.
class Vocab {
 public:
  Vocab();

  static Vocab build(const std::vector<dataset::Caption>& corpus, std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t index) const;
  // kUnk for unknown words.
  std::size_t index(std::string_view word) const;
  bool contains(std::string_view word) const;

  // Header "#clasp-vocab version=1 min_count=N", then one token per line.
  std::string serialize() const;
  static Vocab deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.min_count_ == b.min_count_;
  }

 private:
  void rebuild_lookup();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::size_t min_count_ = 1;
};

Vocab build_vocab(const std::vector<dataset::Caption>& corpus, std::size_t min_count);

// Lowercase, punctuation to spaces, whitespace split, unknown words to <unk>.
// Never empty: text without words yields [<unk>].
TokenSeq tokenize(std::string_view text, const Vocab& vocab);

// Tokens joined by single spaces.
std::string detokenize(const TokenSeq& seq, const Vocab& vocab);

}  // namespace clasp::encoders
