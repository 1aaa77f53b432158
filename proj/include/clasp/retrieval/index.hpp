#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clasp/contrastive/model.hpp"
#include "clasp/dataset/types.hpp"

namespace clasp::retrieval {

using numerics::Tensor;

enum class Modality { signal, text };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);

// Immutable after construction. Rows are unit-norm embeddings of the items,
// in insertion order.
struct EmbeddingIndex {
  std::vector<std::string> ids;
  Tensor embeddings;  // [M,d]
  Modality modality = Modality::signal;
  std::uint32_t fingerprint = 0;

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return embeddings.dim(1); }

  friend bool operator==(const EmbeddingIndex&, const EmbeddingIndex&) = default;
};

struct Hit {
  std::string id;
  double score = 0.0;  // cosine

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct RetrievalResult {
  std::string query;
  std::vector<Hit> hits;  // scores non-increasing, ties by ascending id

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

// dot / (|a||b|); 0 when either vector is zero.
double cosine(std::span<const float> a, std::span<const float> b);

// Throws IndexError on an empty item list.
EmbeddingIndex build_index(const std::vector<dataset::SignalSeries>& items,
                           const contrastive::ContrastiveModel& model);
EmbeddingIndex build_index(const std::vector<dataset::Caption>& items,
                           const contrastive::ContrastiveModel& model);

// Exact scan: cosine of `query` against every row, top min(k, M).
std::vector<Hit> search(const EmbeddingIndex& index, std::span<const float> query, std::size_t k);

// Checks modality and fingerprint on every call.
RetrievalResult query_by_text(std::string_view text, const EmbeddingIndex& index,
                              const contrastive::ContrastiveModel& model, std::size_t k);
RetrievalResult query_by_signal(const dataset::SignalSeries& series, const EmbeddingIndex& index,
                                const contrastive::ContrastiveModel& model, std::size_t k);

// A model paired with one index whose fingerprint was verified at
// construction; queries skip the per-call check.
class Retriever {
 public:
  Retriever(const contrastive::ContrastiveModel& model, EmbeddingIndex index);

  const EmbeddingIndex& index() const { return index_; }
  const contrastive::ContrastiveModel& model() const { return model_; }

  RetrievalResult by_text(std::string_view text, std::size_t k) const;
  RetrievalResult by_signal(const dataset::SignalSeries& series, std::size_t k) const;

 private:
  const contrastive::ContrastiveModel& model_;
  EmbeddingIndex index_;
};

// Container records "ids", "embeddings", "modality", "fingerprint".
std::string serialize_index(const EmbeddingIndex& index);
EmbeddingIndex deserialize_index(std::string_view bytes);
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

}  // namespace clasp::retrieval
