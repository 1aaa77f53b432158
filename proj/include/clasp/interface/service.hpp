#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clasp/contrastive/model.hpp"
#include "clasp/dataset/types.hpp"
#include "clasp/retrieval/index.hpp"

namespace httplib {
class Server;
}

namespace clasp::interface {

inline constexpr std::size_t kMaxResultPoints = 256;
inline constexpr std::size_t kMaxK = 100;

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// Bucket means over at most `points` equal index ranges.
std::vector<float> downsample_mean(const std::vector<float>& values, std::size_t points);

// Read-only search service over one model, one signal index and the corpus
// that supplies series, captions and labels for display.
class Service {
 public:
  // Throws StaleIndexError when the index was built by another model.
  Service(contrastive::ContrastiveModel model, retrieval::EmbeddingIndex index,
          std::vector<dataset::LabeledExample> corpus);

  HttpResponse search(const std::string& body);
  HttpResponse signal(const std::string& id);
  HttpResponse health();
  HttpResponse stats();

  const retrieval::Retriever& retriever() const { return retriever_; }
  std::uint64_t requests() const { return requests_.load(); }

 private:
  static HttpResponse error(int status, const std::string& message);

  contrastive::ContrastiveModel model_;
  retrieval::Retriever retriever_;
  std::vector<dataset::LabeledExample> corpus_;
  std::map<std::string, std::size_t> by_id_;
  std::atomic<std::uint64_t> requests_{0};
};

// Registers the /api routes and, when `static_dir` exists, a static mount at /.
void register_routes(httplib::Server& server, Service& service,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace clasp::interface
