#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "clasp/contrastive/train.hpp"
#include "clasp/dataset/generator.hpp"
#include "clasp/retrieval/index.hpp"

using namespace clasp;
using namespace clasp::retrieval;

namespace {

EmbeddingIndex random_index(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  EmbeddingIndex idx;
  idx.embeddings = Tensor({m, d});
  for (std::size_t i = 0; i < m; ++i) {
    idx.ids.push_back("item" + std::to_string(1000 + (i * 7919) % m));
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      idx.embeddings.at(i, j) = g(rng);
      norm += double(idx.embeddings.at(i, j)) * idx.embeddings.at(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) idx.embeddings.at(i, j) = float(idx.embeddings.at(i, j) / std::sqrt(norm));
  }
  return idx;
}

// Plain O(M d) scan, full sort.
std::vector<Hit> brute_force(const EmbeddingIndex& idx, const std::vector<float>& q, std::size_t k) {
  double qn = 0.0;
  for (float v : q) qn += double(v) * v;
  qn = std::sqrt(qn);
  std::vector<Hit> all;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double dot = 0.0, rn = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      dot += double(idx.embeddings.at(i, j)) * q[j];
      rn += double(idx.embeddings.at(i, j)) * idx.embeddings.at(i, j);
    }
    all.push_back({idx.ids[i], dot / (qn * std::sqrt(rn))});
  }
  std::stable_sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

struct Fixture {
  std::vector<dataset::LabeledExample> corpus;
  contrastive::ContrastiveModel model;
  Fixture() {
    dataset::GeneratorConfig cfg;
    cfg.size = 30;
    cfg.length = 64;
    corpus = dataset::generate_dataset(cfg, 3);
    contrastive::TrainConfig tc;
    tc.embed_dim = 16;
    model = contrastive::initialize_model(corpus, tc);
  }
  std::vector<dataset::SignalSeries> signals() const {
    std::vector<dataset::SignalSeries> out;
    for (const auto& ex : corpus) out.push_back(ex.signal);
    return out;
  }
  std::vector<dataset::Caption> captions() const {
    std::vector<dataset::Caption> out;
    for (const auto& ex : corpus) out.push_back(ex.caption);
    return out;
  }
};

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("cosine") {
  const std::vector<float> a = {1, 0}, b = {1, 1}, z = {0, 0};
  CHECK(cosine(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine(a, z) == 0.0);
}

TEST_CASE("search equals a brute-force scan") {
  std::mt19937_64 rng(7);
  const auto idx = random_index(257, 24, rng);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> q(24);
    for (auto& v : q) v = g(rng);
    const std::size_t k = 1 + rng() % 20;
    const auto got = search(idx, q, k);
    const auto want = brute_force(idx, q, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("ordering, ties and k") {
  EmbeddingIndex idx;
  idx.ids = {"c", "a", "b", "d"};
  idx.embeddings = Tensor({4, 2}, {1, 0, 1, 0, 0, 1, 1, 0});
  const std::vector<float> q = {1, 0};
  const auto hits = search(idx, q, 10);
  REQUIRE(hits.size() == 4);
  CHECK(hits[0].id == "a");
  CHECK(hits[1].id == "c");
  CHECK(hits[2].id == "d");
  CHECK(hits[3].id == "b");
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
  CHECK(search(idx, q, 2).size() == 2);
  CHECK_THROWS_AS(search(idx, q, 0), ContractError);
  CHECK_THROWS(search(idx, std::vector<float>{1, 0, 0}, 1));
  CHECK(search(idx, q, 3) == search(idx, q, 3));
}

TEST_CASE("index build, modality and staleness") {
  Fixture f;
  const auto sig = build_index(f.signals(), f.model);
  CHECK(sig.size() == f.corpus.size());
  CHECK(sig.dim() == 16);
  CHECK(sig.modality == Modality::signal);
  CHECK(sig.fingerprint == f.model.fingerprint());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    double n = 0.0;
    for (std::size_t j = 0; j < sig.dim(); ++j) n += double(sig.embeddings.at(i, j)) * sig.embeddings.at(i, j);
    const auto p = encoders::prepare_signal(f.corpus[i].signal);
    const bool zero = std::all_of(p.values.begin(), p.values.end(), [](float v) { return v == 0.0f; });
    CHECK(std::sqrt(n) == doctest::Approx(zero ? 0.0 : 1.0).epsilon(1e-5));
  }
  const auto txt = build_index(f.captions(), f.model);
  CHECK(txt.modality == Modality::text);
  CHECK_THROWS_AS(build_index(std::vector<dataset::SignalSeries>{}, f.model), IndexError);

  const auto r = query_by_text("a sine wave", sig, f.model, 5);
  CHECK(r.query == "a sine wave");
  CHECK(r.hits.size() == 5);
  CHECK_THROWS_AS(query_by_text("a sine wave", txt, f.model, 5), ModalityError);
  CHECK_THROWS_AS(query_by_signal(f.corpus[0].signal, sig, f.model, 5), ModalityError);
  CHECK(query_by_signal(f.corpus[0].signal, txt, f.model, 3).hits.size() == 3);
  CHECK_THROWS_AS(query_by_signal({"empty", {}}, txt, f.model, 3), InvalidSignalError);

  auto other = f.model;
  other.params.at("proj.text.bias")[0] += 1.0f;
  CHECK_THROWS_AS(query_by_text("x", sig, other, 5), StaleIndexError);
  CHECK_THROWS_AS(Retriever(other, sig), StaleIndexError);

  const Retriever ret(f.model, sig);
  CHECK(ret.by_text("a sine wave", 5) == r);
}

TEST_CASE("index persistence") {
  Fixture f;
  const auto sig = build_index(f.signals(), f.model);
  CHECK(deserialize_index(serialize_index(sig)) == sig);
  const auto path = std::filesystem::temp_directory_path() / "clasp_test_index.bin";
  save_index(sig, path);
  CHECK(load_index(path) == sig);
  std::filesystem::remove(path);
  CHECK(parse_modality(to_string(Modality::text)) == Modality::text);
  CHECK_THROWS(parse_modality("audio"));
}

}
