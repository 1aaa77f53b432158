#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "clasp/dataset/captions.hpp"
#include "clasp/dataset/generator.hpp"
#include "clasp/dataset/io.hpp"
#include "clasp/error.hpp"
#include "clasp/eval/harness.hpp"
#include "clasp/eval/metrics.hpp"

namespace clasp::eval {

namespace {

using dataset::Category;
using dataset::ClassValue;

std::vector<ClassValue> non_null_classes() {
  std::vector<ClassValue> out;
  for (const auto t : dataset::kAllTrends) {
    if (!dataset::is_null(t)) out.push_back({Category::trend, static_cast<int>(t)});
  }
  for (const auto p : dataset::kAllPeriodics) {
    if (!dataset::is_null(p)) out.push_back({Category::periodic, static_cast<int>(p)});
  }
  for (const auto f : dataset::kAllFluctuations) {
    if (!dataset::is_null(f)) out.push_back({Category::fluctuation, static_cast<int>(f)});
  }
  return out;
}

std::uint64_t text_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

struct Judge {
  const std::vector<dataset::LabeledExample>& test;
  TfidfModel tfidf;
  std::vector<TfidfModel::Vector> caption_vectors;

  explicit Judge(const std::vector<dataset::LabeledExample>& t) : test(t), tfidf(captions(t)) {
    for (const auto& ex : test) caption_vectors.push_back(tfidf.vectorize(ex.caption.text));
  }

  static std::vector<std::string> captions(const std::vector<dataset::LabeledExample>& t) {
    std::vector<std::string> out;
    for (const auto& ex : t) out.push_back(ex.caption.text);
    return out;
  }

  std::set<std::string> by_class(const ClassValue& target) const {
    std::set<std::string> out;
    for (const auto& ex : test) {
      if (dataset::matches(ex.labels, target)) out.insert(ex.signal.id);
    }
    return out;
  }

  std::set<std::string> by_tfidf(const std::string& query, double ts) const {
    std::set<std::string> out;
    const auto q = tfidf.vectorize(query);
    if (q.empty()) return out;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (!caption_vectors[i].empty() && TfidfModel::cosine(q, caption_vectors[i]) > ts) {
        out.insert(test[i].signal.id);
      }
    }
    return out;
  }
};

void score(EvalReport& report, const std::vector<std::string>& ranked, const std::string& query,
           const std::string& variant, const std::string& oracle, const std::string& category,
           const std::set<std::string>& relevant) {
  QueryResult r;
  r.query = query;
  r.variant = variant;
  r.oracle = oracle;
  r.category = category;
  r.relevant = relevant.size();
  r.ap = average_precision_at_k(ranked, relevant, report.k);
  if (relevant.empty()) ++report.empty_relevant_sets;
  report.queries.push_back(std::move(r));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string_view to_string(QueryVariant v) {
  switch (v) {
    case QueryVariant::sushi_caption: return "sushi_caption";
    case QueryVariant::nine_word_caption: return "nine_word_caption";
    case QueryVariant::template_sentence: return "template_sentence";
    case QueryVariant::label_only: return "label_only";
  }
  return "?";
}

QueryVariant parse_variant(std::string_view s) {
  for (const auto v : kAllVariants) {
    if (to_string(v) == s) return v;
  }
  throw ParseError("unknown query variant '" + std::string(s) + "'");
}

int variant_template(QueryVariant v) {
  switch (v) {
    case QueryVariant::sushi_caption: return dataset::kSushiTemplate;
    case QueryVariant::nine_word_caption: return dataset::kNineWordTemplate;
    case QueryVariant::template_sentence: return dataset::kLabelSentenceTemplate;
    case QueryVariant::label_only: return dataset::kLabelOnlyTemplate;
  }
  return dataset::kSushiTemplate;
}

std::vector<ClassQuery> make_class_queries(QueryVariant variant) {
  std::vector<ClassQuery> out;
  for (const auto& value : non_null_classes()) {
    const auto triple = dataset::single_component(value);
    out.push_back({dataset::render_caption(triple, variant_template(variant), 0).text, value});
  }
  return out;
}

std::vector<ClassQuery> make_paraphrase_queries(int template_id, std::size_t seeds) {
  std::vector<ClassQuery> out;
  for (const auto& value : non_null_classes()) {
    std::set<std::string> seen;
    const auto triple = dataset::single_component(value);
    for (std::size_t s = 0; s < seeds; ++s) {
      auto text = dataset::render_caption(triple, template_id, dataset::derive_seed(s, 0)).text;
      if (seen.insert(text).second) out.push_back({std::move(text), value});
    }
  }
  return out;
}

Ranker model_ranker(std::shared_ptr<const retrieval::Retriever> retriever) {
  return [retriever](const std::string& query, std::size_t k) {
    std::vector<std::string> ids;
    for (const auto& hit : retriever->by_text(query, k).hits) ids.push_back(hit.id);
    return ids;
  };
}

Ranker random_ranker(std::vector<std::string> ids, std::uint64_t seed) {
  return [ids = std::move(ids), seed](const std::string& query, std::size_t k) {
    std::vector<std::string> order = ids;
    std::mt19937_64 rng(dataset::derive_seed(seed, text_hash(query)));
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    order.resize(std::min(k, order.size()));
    return order;
  };
}

std::string oracle_name(double tfidf_threshold) {
  std::ostringstream os;
  os << "tfidf@" << tfidf_threshold;
  return os.str();
}

double EvalReport::map(std::string_view oracle, std::string_view variant,
                       std::string_view category) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& q : queries) {
    if (!oracle.empty() && q.oracle != oracle) continue;
    if (!variant.empty() && q.variant != variant) continue;
    if (!category.empty() && q.category != category) continue;
    sum += q.ap;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::size_t EvalReport::count(std::string_view oracle, std::string_view variant,
                              std::string_view category) const {
  std::size_t n = 0;
  for (const auto& q : queries) {
    if ((oracle.empty() || q.oracle == oracle) && (variant.empty() || q.variant == variant) &&
        (category.empty() || q.category == category)) {
      ++n;
    }
  }
  return n;
}

EvalReport run_eval(const Ranker& rank, const std::vector<dataset::LabeledExample>& test,
                    const EvalConfig& config) {
  if (test.empty()) throw ContractError("run_eval: empty test split");
  if (config.k == 0) throw ContractError("run_eval: k must be at least 1");
  for (const double ts : config.tfidf_thresholds) {
    if (!(ts >= 0.0 && ts <= 1.0)) throw ContractError("run_eval: tf-idf threshold outside [0, 1]");
  }
  const Judge judge(test);
  EvalReport report;
  report.k = config.k;
  report.candidates = test.size();
  report.tfidf_thresholds = config.tfidf_thresholds;

  const auto run_class_set = [&](const std::vector<ClassQuery>& queries, const std::string& variant,
                                 bool with_tfidf) {
    for (const auto& q : queries) {
      const auto ranked = rank(q.text, config.k);
      score(report, ranked, q.text, variant, std::string(kClassOracle),
            std::string(dataset::to_string(q.target.category)), judge.by_class(q.target));
      if (!with_tfidf) continue;
      for (const double ts : config.tfidf_thresholds) {
        score(report, ranked, q.text, variant, oracle_name(ts),
              std::string(dataset::to_string(q.target.category)), judge.by_tfidf(q.text, ts));
      }
    }
  };

  for (const auto v : config.variants) {
    run_class_set(make_class_queries(v), std::string(to_string(v)), true);
  }
  if (config.paraphrase_queries) {
    std::vector<ClassQuery> seen_templates, held_out;
    for (const int t : {4, 5}) {
      auto q = make_paraphrase_queries(t, config.paraphrase_seeds);
      seen_templates.insert(seen_templates.end(), q.begin(), q.end());
    }
    for (const int t : dataset::heldout_templates()) {
      auto q = make_paraphrase_queries(t, config.paraphrase_seeds);
      held_out.insert(held_out.end(), q.begin(), q.end());
    }
    run_class_set(seen_templates, "paraphrase_train", false);
    run_class_set(held_out, "paraphrase_heldout", false);
  }
  if (config.caption_queries) {
    for (const auto& ex : test) {
      const auto ranked = rank(ex.caption.text, config.k);
      for (const double ts : config.tfidf_thresholds) {
        score(report, ranked, ex.caption.text, "test_caption", oracle_name(ts), "",
              judge.by_tfidf(ex.caption.text, ts));
      }
    }
  }
  return report;
}

EvalReport run_eval(const contrastive::ContrastiveModel& model,
                    const std::vector<std::string>& train_ids,
                    const std::vector<dataset::LabeledExample>& test, const EvalConfig& config) {
  const std::set<std::string> train(train_ids.begin(), train_ids.end());
  std::vector<dataset::SignalSeries> signals;
  signals.reserve(test.size());
  for (const auto& ex : test) {
    if (train.count(ex.signal.id) != 0) {
      throw LeakageError("test example '" + ex.signal.id + "' also appears in the training split");
    }
    signals.push_back(ex.signal);
  }
  if (signals.empty()) throw ContractError("run_eval: empty test split");
  auto retriever =
      std::make_shared<const retrieval::Retriever>(model, retrieval::build_index(signals, model));
  auto report = run_eval(model_ranker(retriever), test, config);
  report.model_fingerprint = retriever->index().fingerprint;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["k"] = report.k;
  j["candidates"] = report.candidates;
  j["tfidf_thresholds"] = report.tfidf_thresholds;
  j["model_fingerprint"] = report.model_fingerprint;
  j["empty_relevant_sets"] = report.empty_relevant_sets;

  // oracle -> variant -> {map, queries, by_category}
  std::vector<std::string> oracles, variants;
  for (const auto& q : report.queries) {
    if (std::find(oracles.begin(), oracles.end(), q.oracle) == oracles.end()) oracles.push_back(q.oracle);
    if (std::find(variants.begin(), variants.end(), q.variant) == variants.end()) {
      variants.push_back(q.variant);
    }
  }
  ordered_json summary = ordered_json::object();
  for (const auto& o : oracles) {
    for (const auto& v : variants) {
      const auto n = report.count(o, v);
      if (n == 0) continue;
      ordered_json entry;
      entry["map"] = report.map(o, v);
      entry["queries"] = n;
      ordered_json cats = ordered_json::object();
      for (const auto c : {Category::trend, Category::periodic, Category::fluctuation}) {
        const std::string name(dataset::to_string(c));
        if (report.count(o, v, name) != 0) cats[name] = report.map(o, v, name);
      }
      if (!cats.empty()) entry["by_category"] = cats;
      summary[o][v] = entry;
    }
  }
  j["summary"] = summary;
  ordered_json rows = ordered_json::array();
  for (const auto& q : report.queries) {
    rows.push_back({{"query", q.query},
                    {"variant", q.variant},
                    {"oracle", q.oracle},
                    {"category", q.category},
                    {"relevant", q.relevant},
                    {"ap", q.ap}});
  }
  j["queries"] = rows;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "query,variant,oracle,ap\n";
  for (const auto& q : report.queries) {
    out += csv_field(q.query) + ',' + csv_field(q.variant) + ',' + csv_field(q.oracle) + ',' +
           dataset::format_real(q.ap) + '\n';
  }
  return out;
}

}  // namespace clasp::eval
