#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clasp/contrastive/model.hpp"
#include "clasp/dataset/types.hpp"
#include "clasp/retrieval/index.hpp"

namespace clasp::eval {

enum class QueryVariant { sushi_caption, nine_word_caption, template_sentence, label_only };

inline constexpr std::array<QueryVariant, 4> kAllVariants = {
    QueryVariant::sushi_caption, QueryVariant::nine_word_caption, QueryVariant::template_sentence,
    QueryVariant::label_only};

std::string_view to_string(QueryVariant v);
QueryVariant parse_variant(std::string_view s);
// Caption template that renders the variant.
int variant_template(QueryVariant v);

struct ClassQuery {
  std::string text;
  dataset::ClassValue target;
};

// One query per non-null class value. Flat trend and the absent periodic /
// fluctuation classes describe no pattern and get no query.
std::vector<ClassQuery> make_class_queries(QueryVariant variant);

// Queries rendered with one paraphrase template; `seeds` picks synonyms.
std::vector<ClassQuery> make_paraphrase_queries(int template_id, std::size_t seeds);

// Text query -> ids of the top-k candidates, best first. The harness sees
// only the ids it returns.
using Ranker = std::function<std::vector<std::string>(const std::string& query, std::size_t k)>;

// Ranks test signals with a trained model. Built from the series alone.
Ranker model_ranker(std::shared_ptr<const retrieval::Retriever> retriever);

// Uniformly random permutation per query, seeded by (seed, query text).
Ranker random_ranker(std::vector<std::string> ids, std::uint64_t seed);

struct EvalConfig {
  std::size_t k = 10;
  std::vector<double> tfidf_thresholds = {0.5, 0.8};
  std::vector<QueryVariant> variants = {kAllVariants.begin(), kAllVariants.end()};
  bool caption_queries = true;     // every test caption as a TF-IDF query
  bool paraphrase_queries = true;  // train vs held-out templates, class oracle
  std::size_t paraphrase_seeds = 3;
};

struct QueryResult {
  std::string query;
  std::string variant;   // query set
  std::string oracle;    // "class_label" or "tfidf@0.5" ...
  std::string category;  // class category for class-label queries, else empty
  std::size_t relevant = 0;
  double ap = 0.0;
};

struct EvalReport {
  std::size_t k = 10;
  std::size_t candidates = 0;
  std::vector<double> tfidf_thresholds;
  std::uint64_t model_fingerprint = 0;
  std::vector<QueryResult> queries;
  std::size_t empty_relevant_sets = 0;

  // Mean AP over queries matching the filters; empty filters match all.
  double map(std::string_view oracle, std::string_view variant, std::string_view category = {}) const;
  std::size_t count(std::string_view oracle, std::string_view variant,
                    std::string_view category = {}) const;
};

// Runs every configured query through `rank` against `test`. Relevance is
// judged from the test captions and labels, which the ranker never sees.
EvalReport run_eval(const Ranker& rank, const std::vector<dataset::LabeledExample>& test,
                    const EvalConfig& config);

// Builds a signal index from the test series only. Throws LeakageError if
// a test id also appears in `train_ids`.
EvalReport run_eval(const contrastive::ContrastiveModel& model,
                    const std::vector<std::string>& train_ids,
                    const std::vector<dataset::LabeledExample>& test, const EvalConfig& config);

std::string oracle_name(double tfidf_threshold);
inline constexpr std::string_view kClassOracle = "class_label";

std::string report_to_json(const EvalReport& report);
// Columns: query, variant, oracle, ap.
std::string report_to_csv(const EvalReport& report);

}  // namespace clasp::eval
