#include <algorithm>
#include <cmath>

#include "clasp/contrastive/container.hpp"
#include "clasp/encoders/encoder.hpp"
#include "clasp/retrieval/index.hpp"

namespace clasp::retrieval {

namespace {

void require_modality(const EmbeddingIndex& index, Modality expected) {
  if (index.modality != expected) {
    throw ModalityError("query needs a " + std::string(to_string(expected)) + " index, got a " +
                        std::string(to_string(index.modality)) + " index");
  }
}

void require_fresh(const EmbeddingIndex& index, const contrastive::ContrastiveModel& model) {
  const auto fp = model.fingerprint();
  if (fp != index.fingerprint) {
    throw StaleIndexError("index was built with model " + std::to_string(index.fingerprint) +
                          ", current model is " + std::to_string(fp) + "; rebuild the index");
  }
}

RetrievalResult text_query(std::string_view text, const EmbeddingIndex& index,
                           const contrastive::ContrastiveModel& model, std::size_t k) {
  const auto q = contrastive::embed_texts(model, {std::string(text)});
  return {std::string(text), search(index, q.data(), k)};
}

RetrievalResult signal_query(const dataset::SignalSeries& series, const EmbeddingIndex& index,
                             const contrastive::ContrastiveModel& model, std::size_t k) {
  const auto q = contrastive::embed_signals(model, {series});
  return {series.id, search(index, q.data(), k)};
}

}  // namespace

std::string_view to_string(Modality m) { return m == Modality::signal ? "signal" : "text"; }

Modality parse_modality(std::string_view s) {
  if (s == "signal") return Modality::signal;
  if (s == "text") return Modality::text;
  throw ModalityError("unknown modality '" + std::string(s) + "'");
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine: dimensions " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingIndex build_index(const std::vector<dataset::SignalSeries>& items,
                           const contrastive::ContrastiveModel& model) {
  if (items.empty()) throw IndexError("cannot build an index from zero signals");
  EmbeddingIndex index;
  for (const auto& s : items) index.ids.push_back(s.id);
  index.embeddings = contrastive::embed_signals(model, items);
  index.modality = Modality::signal;
  index.fingerprint = model.fingerprint();
  return index;
}

EmbeddingIndex build_index(const std::vector<dataset::Caption>& items,
                           const contrastive::ContrastiveModel& model) {
  if (items.empty()) throw IndexError("cannot build an index from zero captions");
  EmbeddingIndex index;
  std::vector<std::string> texts;
  for (const auto& c : items) {
    index.ids.push_back(c.id);
    texts.push_back(c.text);
  }
  index.embeddings = contrastive::embed_texts(model, texts);
  index.modality = Modality::text;
  index.fingerprint = model.fingerprint();
  return index;
}

std::vector<Hit> search(const EmbeddingIndex& index, std::span<const float> query, std::size_t k) {
  if (k == 0) throw ContractError("search: k must be at least 1");
  const std::size_t m = index.size();
  const std::size_t d = index.dim();
  if (query.size() != d) {
    throw ShapeError("search: query dimension " + std::to_string(query.size()) +
                     " does not match index dimension " + std::to_string(d));
  }
  double qn = 0.0;
  for (const float v : query) qn += static_cast<double>(v) * v;
  qn = std::sqrt(qn);

  std::vector<double> scores(m, 0.0);
  const float* rows = index.embeddings.raw();
  if (qn > 0.0) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
      const float* row = rows + static_cast<std::size_t>(i) * d;
      double dot = 0.0, rn = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dot += static_cast<double>(row[j]) * query[j];
        rn += static_cast<double>(row[j]) * row[j];
      }
      scores[static_cast<std::size_t>(i)] = rn > 0.0 ? dot / (qn * std::sqrt(rn)) : 0.0;
    }
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  const std::size_t top = std::min(k, m);
  const auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.ids[a] < index.ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    before);
  std::vector<Hit> hits;
  hits.reserve(top);
  for (std::size_t i = 0; i < top; ++i) hits.push_back({index.ids[order[i]], scores[order[i]]});
  return hits;
}

RetrievalResult query_by_text(std::string_view text, const EmbeddingIndex& index,
                              const contrastive::ContrastiveModel& model, std::size_t k) {
  require_modality(index, Modality::signal);
  require_fresh(index, model);
  return text_query(text, index, model, k);
}

RetrievalResult query_by_signal(const dataset::SignalSeries& series, const EmbeddingIndex& index,
                                const contrastive::ContrastiveModel& model, std::size_t k) {
  require_modality(index, Modality::text);
  require_fresh(index, model);
  return signal_query(series, index, model, k);
}

Retriever::Retriever(const contrastive::ContrastiveModel& model, EmbeddingIndex index)
    : model_(model), index_(std::move(index)) {
  require_fresh(index_, model_);
}

RetrievalResult Retriever::by_text(std::string_view text, std::size_t k) const {
  require_modality(index_, Modality::signal);
  return text_query(text, index_, model_, k);
}

RetrievalResult Retriever::by_signal(const dataset::SignalSeries& series, std::size_t k) const {
  require_modality(index_, Modality::text);
  return signal_query(series, index_, model_, k);
}

std::string serialize_index(const EmbeddingIndex& index) {
  if (index.ids.size() != index.embeddings.dim(0)) {
    throw IndexError("index has " + std::to_string(index.ids.size()) + " ids but " +
                     std::to_string(index.embeddings.dim(0)) + " rows");
  }
  std::string ids;
  for (const auto& id : index.ids) {
    if (id.find('\n') != std::string::npos) throw IndexError("item id contains a newline");
    ids += id + '\n';
  }
  return contrastive::write_container({
      contrastive::make_record("ids", ids),
      contrastive::make_record("embeddings", index.embeddings),
      contrastive::make_record("modality", to_string(index.modality)),
      contrastive::make_u32_record("fingerprint", index.fingerprint),
  });
}

EmbeddingIndex deserialize_index(std::string_view bytes) {
  const auto records = contrastive::read_container(bytes);
  EmbeddingIndex index;
  const auto ids = contrastive::record_bytes(contrastive::find_record(records, "ids"));
  std::size_t start = 0;
  while (start < ids.size()) {
    const auto end = ids.find('\n', start);
    if (end == std::string::npos) throw CheckpointError("index ids record is malformed");
    index.ids.push_back(ids.substr(start, end - start));
    start = end + 1;
  }
  index.embeddings = contrastive::record_tensor(contrastive::find_record(records, "embeddings"));
  index.modality =
      parse_modality(contrastive::record_bytes(contrastive::find_record(records, "modality")));
  index.fingerprint = contrastive::record_u32(contrastive::find_record(records, "fingerprint"));
  if (index.embeddings.rank() != 2 || index.embeddings.dim(0) != index.ids.size()) {
    throw CheckpointError("index embeddings do not match its ids");
  }
  return index;
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  contrastive::write_file(path, serialize_index(index));
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  return deserialize_index(contrastive::read_file(path));
}

}  // namespace clasp::retrieval
