#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clasp/dataset/types.hpp"

namespace clasp::dataset {

// Caption templates. Ids 0-3 are the fixed query forms:
//   0  SUSHI-style descriptive sentences
//   1  short captions of at most nine words
//   2  "The signal is <label>."
//   3  "<label>"
// Ids 4-7 are paraphrase frames that draw synonyms from per-class pools.
// 6 and 7 are held out: the generator never uses them for training captions.
inline constexpr int kTemplateCount = 8;
inline constexpr int kSushiTemplate = 0;
inline constexpr int kNineWordTemplate = 1;
inline constexpr int kLabelSentenceTemplate = 2;
inline constexpr int kLabelOnlyTemplate = 3;

std::span<const int> train_templates();
std::span<const int> heldout_templates();
bool is_heldout_template(int template_id);

// Deterministic in (triple, template_id, rng_seed). Mentions every non-null
// component exactly once; an all-null triple is described as flat.
Caption render_caption(const ClassTriple& triple, int template_id, std::uint64_t rng_seed,
                       std::string id = {});

struct PhraseHit {
  ClassValue value;
  std::size_t token_offset = 0;
  std::size_t token_count = 0;
};

// Non-overlapping, longest-first matches of class phrases in the normalised
// token stream of `text`. Flat-trend phrases are reported as Trend::flat.
std::vector<PhraseHit> find_class_phrases(std::string_view text);

// Recovers the ClassTriple a caption describes; nullopt when one category
// is mentioned with two different classes.
std::optional<ClassTriple> detect_labels(std::string_view text);

// Lowercase, punctuation to spaces, split on whitespace.
std::vector<std::string> normalize_tokens(std::string_view text);

}  // namespace clasp::dataset
