#include <random>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

#include "clasp/contrastive/train.hpp"
#include "clasp/dataset/captions.hpp"
#include "clasp/dataset/generator.hpp"
#include "clasp/eval/harness.hpp"
#include "clasp/eval/metrics.hpp"

using namespace clasp;
using namespace clasp::eval;

namespace {

std::vector<std::string> random_ranking(std::size_t m, std::size_t len, std::mt19937_64& rng) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back("x" + std::to_string(i));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(len);
  return ids;
}

std::vector<dataset::LabeledExample> corpus(std::size_t n, std::uint64_t seed) {
  dataset::GeneratorConfig cfg;
  cfg.size = n;
  cfg.length = 32;
  return dataset::generate_dataset(cfg, seed);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("average precision against enumeration on random instances") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng() % 30;
    const std::size_t len = rng() % (m + 1);
    const auto ranked = random_ranking(m, len, rng);
    std::set<std::string> rel;
    for (std::size_t i = 0; i < m; ++i)
      if (rng() % 3 == 0) rel.insert("x" + std::to_string(i));
    const std::size_t k = 1 + rng() % 12;
    CHECK(average_precision_at_k(ranked, rel, k) == oracle::average_precision(ranked, rel, k));
  }
}

TEST_CASE("average precision examples and properties") {
  CHECK(average_precision_at_k({"a", "b", "c"}, {}, 10) == 0.0);
  CHECK(average_precision_at_k({"a", "b", "c"}, {"a", "b"}, 10) == 1.0);
  // hits at ranks 2 and 4 of 2 relevant: (1/2 + 2/4) / 2
  CHECK(average_precision_at_k({"x", "a", "y", "b"}, {"a", "b"}, 10) == doctest::Approx(0.5));
  // more relevant than k: normaliser is k
  CHECK(average_precision_at_k({"a", "b"}, {"a", "b", "c"}, 2) == 1.0);
  CHECK_THROWS_AS(average_precision_at_k({"a", "a"}, {"a"}, 10), ContractError);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto ranked = random_ranking(20, 15, rng);
    std::set<std::string> rel;
    for (std::size_t i = 0; i < 20; ++i)
      if (rng() % 4 == 0) rel.insert("x" + std::to_string(i));
    const double ap = average_precision_at_k(ranked, rel, 10);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
    if (rel.empty()) continue;
    // putting a relevant item first never lowers AP
    const std::string first = *rel.begin();
    std::vector<std::string> moved = {first};
    for (const auto& id : ranked)
      if (id != first) moved.push_back(id);
    CHECK(average_precision_at_k(moved, rel, 10) >= ap - 1e-12);
  }
}

TEST_CASE("expected random AP agrees with Monte Carlo") {
  for (const auto& [m, r] : {std::pair<std::size_t, std::size_t>{200, 30}, {200, 5}, {50, 12}, {12, 12}, {30, 1}}) {
    CAPTURE(m);
    CAPTURE(r);
    const double mc = oracle::monte_carlo_random_ap(m, r, 10, 20000, 99);
    CHECK(std::abs(expected_random_ap(m, r, 10) - mc) < 0.01);
  }
  CHECK(expected_random_ap(10, 0, 10) == 0.0);
  CHECK(expected_random_ap(10, 10, 10) == doctest::Approx(1.0));
}

TEST_CASE("tf-idf cosine matches a direct bag-of-words computation") {
  const auto data = corpus(200, 5);
  std::vector<std::string> docs;
  for (const auto& ex : data) docs.push_back(ex.caption.text);
  const TfidfModel model(docs);
  CHECK(model.documents() == 200);
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"sawtooth wave signal", "the signal shows a sawtooth wave"},
      {"The signal rises linearly.", "linearly increasing, sine wave"},
      {"large noise", "noise noise large spikes"}};
  for (const auto& [a, b] : pairs) {
    CHECK(model.cosine(a, b) == doctest::Approx(oracle::tfidf_cosine(a, b, docs)).epsilon(1e-9));
    CHECK(model.cosine(a, b) == model.cosine(b, a));
    CHECK(model.relevant(a, b, 0.3) == model.relevant(b, a, 0.3));
  }
  CHECK(model.relevant("sine wave", "sine wave", 0.99));
  CHECK_FALSE(model.relevant("alpha beta", "gamma delta", 0.01));
  CHECK_FALSE(model.relevant("", "", 0.0));
}

TEST_CASE("class queries follow table I") {
  const auto template_sentence = make_class_queries(QueryVariant::template_sentence);
  const auto label_only = make_class_queries(QueryVariant::label_only);
  CHECK(template_sentence.size() == 14);
  const dataset::ClassValue saw{dataset::Category::periodic, static_cast<int>(dataset::Periodic::sawtooth)};
  for (const auto& q : template_sentence)
    if (q.target == saw) CHECK(q.text == "The signal is sawtooth wave.");
  for (const auto& q : label_only)
    if (q.target == saw) CHECK(q.text == "sawtooth wave");
  for (const auto& q : make_class_queries(QueryVariant::nine_word_caption)) CHECK(dataset::count_words(q.text) <= 9);
  for (const auto v : kAllVariants) {
    CHECK(parse_variant(to_string(v)) == v);
    for (const auto& q : make_class_queries(v)) {
      const auto t = dataset::single_component(q.target);
      const bool all_null = dataset::is_null(t.trend) && dataset::is_null(t.periodic) && dataset::is_null(t.fluctuation);
      CHECK_FALSE(all_null);
      CHECK(dataset::detect_labels(q.text) == dataset::single_component(q.target));
    }
  }
  const auto para = make_paraphrase_queries(6, 3);
  CHECK(para.size() >= 14);
}

TEST_CASE("harness with a perfect oracle ranker scores one") {
  const auto test = corpus(120, 9);
  // ranks by the hidden labels, which a real ranker never sees
  const auto queries = make_class_queries(QueryVariant::label_only);
  Ranker cheat = [&](const std::string& query, std::size_t k) {
    std::vector<std::string> good, bad;
    for (const auto& ex : test) {
      bool hit = false;
      for (const auto& q : queries)
        if (q.text == query) hit = dataset::matches(ex.labels, q.target);
      (hit ? good : bad).push_back(ex.signal.id);
    }
    good.insert(good.end(), bad.begin(), bad.end());
    good.resize(std::min(k, good.size()));
    return good;
  };
  EvalConfig cfg;
  cfg.variants = {QueryVariant::label_only};
  cfg.caption_queries = false;
  cfg.paraphrase_queries = false;
  const auto report = run_eval(cheat, test, cfg);
  CHECK(report.count(kClassOracle, "label_only") == 14);
  CHECK(report.map(kClassOracle, "label_only") == doctest::Approx(1.0));
  for (const auto& q : report.queries)
    if (q.oracle == kClassOracle && q.relevant > 0) CHECK(q.ap == 1.0);
}

TEST_CASE("report mAP is the mean of its per-query APs") {
  const auto test = corpus(60, 10);
  std::vector<std::string> ids;
  for (const auto& ex : test) ids.push_back(ex.signal.id);
  const auto report = run_eval(random_ranker(ids, 3), test, EvalConfig{});
  CHECK(report.candidates == 60);
  for (const std::string& oracle : {std::string(kClassOracle), oracle_name(0.5), oracle_name(0.8)}) {
    for (const char* variant : {"sushi_caption", "label_only", "test_caption", "paraphrase_heldout"}) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& q : report.queries)
        if (q.oracle == oracle && q.variant == variant) {
          sum += q.ap;
          ++n;
          CHECK(q.ap >= 0.0);
          CHECK(q.ap <= 1.0);
        }
      CHECK(report.count(oracle, variant) == n);
      if (n > 0) CHECK(report.map(oracle, variant) == doctest::Approx(sum / double(n)));
    }
  }
  CHECK(oracle_name(0.5) == "tfidf@0.5");

  const auto j = nlohmann::json::parse(report_to_json(report));
  CHECK(j["k"] == 10);
  const auto csv = report_to_csv(report);
  CHECK(csv.rfind("query,variant,oracle,ap\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) >= report.queries.size() + 1);
}

TEST_CASE("random ranker is a seeded permutation") {
  std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  const auto r = random_ranker(ids, 1);
  CHECK(r("q", 5) == r("q", 5));
  auto all = r("q", 5);
  std::sort(all.begin(), all.end());
  CHECK(all == ids);
  CHECK(r("q", 3).size() == 3);
}

TEST_CASE("leakage is detected") {
  const auto test = corpus(20, 11);
  contrastive::TrainConfig tc;
  tc.embed_dim = 8;
  const auto model = contrastive::initialize_model(test, tc);
  CHECK_THROWS_AS(run_eval(model, {test[4].signal.id}, test, EvalConfig{}), LeakageError);
  EvalConfig cfg;
  cfg.caption_queries = false;
  cfg.paraphrase_queries = false;
  const auto report = run_eval(model, {"not-in-test"}, test, cfg);
  CHECK(report.model_fingerprint == model.fingerprint());
  CHECK(report.candidates == 20);
}

}
