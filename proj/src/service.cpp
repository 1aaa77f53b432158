#include <chrono>

#include "httplib.h"
#include "json.hpp"

#include "clasp/error.hpp"
#include "clasp/interface/service.hpp"

namespace clasp::interface {

namespace {

using nlohmann::json;

json labels_json(const dataset::ClassTriple& t) {
  return {{"trend", dataset::to_string(t.trend)},
          {"periodic", dataset::to_string(t.periodic)},
          {"fluctuation", dataset::to_string(t.fluctuation)}};
}

void reply(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

std::vector<float> downsample_mean(const std::vector<float>& values, std::size_t points) {
  if (points == 0) throw ContractError("downsample_mean: points must be positive");
  const std::size_t n = values.size();
  if (n <= points) return values;
  std::vector<float> out(points);
  for (std::size_t b = 0; b < points; ++b) {
    const std::size_t lo = b * n / points;
    const std::size_t hi = (b + 1) * n / points;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += values[i];
    out[b] = static_cast<float>(sum / static_cast<double>(hi - lo));
  }
  return out;
}

Service::Service(contrastive::ContrastiveModel model, retrieval::EmbeddingIndex index,
                 std::vector<dataset::LabeledExample> corpus)
    : model_(std::move(model)), retriever_(model_, std::move(index)), corpus_(std::move(corpus)) {
  for (std::size_t i = 0; i < corpus_.size(); ++i) by_id_.emplace(corpus_[i].signal.id, i);
}

HttpResponse Service::error(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

HttpResponse Service::search(const std::string& body) {
  ++requests_;
  const auto start = std::chrono::steady_clock::now();
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("query_text") || !req["query_text"].is_string()) {
    return error(400, "request needs a string field 'query_text'");
  }
  const auto text = req["query_text"].get<std::string>();
  if (text.empty()) return error(400, "query_text is empty");
  std::size_t k = 10;
  if (req.contains("k")) {
    const auto& kv = req["k"];
    if (!kv.is_number_integer() || kv.get<long long>() < 1 ||
        kv.get<long long>() > static_cast<long long>(kMaxK)) {
      return error(400, "k must be an integer in [1, " + std::to_string(kMaxK) + "]");
    }
    k = kv.get<std::size_t>();
  }
  const auto result = retriever_.by_text(text, k);
  json results = json::array();
  for (const auto& hit : result.hits) {
    json item{{"id", hit.id}, {"score", hit.score}};
    if (const auto it = by_id_.find(hit.id); it != by_id_.end()) {
      const auto& ex = corpus_[it->second];
      item["values"] = downsample_mean(ex.signal.values, kMaxResultPoints);
      item["caption"] = ex.caption.text;
    } else {
      item["values"] = json::array();
    }
    results.push_back(std::move(item));
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  json out{{"query_text", text},
           {"k", k},
           {"results", results},
           {"model_fingerprint", retriever_.index().fingerprint},
           {"latency_ms", ms}};
  return {200, out.dump()};
}

HttpResponse Service::signal(const std::string& id) {
  ++requests_;
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return error(404, "unknown signal id '" + id + "'");
  const auto& ex = corpus_[it->second];
  json out{{"id", ex.signal.id},
           {"values", ex.signal.values},
           {"caption", ex.caption.text},
           {"labels", labels_json(ex.labels)}};
  return {200, out.dump()};
}

HttpResponse Service::health() {
  ++requests_;
  return {200, json{{"status", "ok"}, {"fingerprint", retriever_.index().fingerprint}}.dump()};
}

HttpResponse Service::stats() {
  ++requests_;
  std::map<std::string, std::size_t> trend, periodic, fluctuation;
  for (const auto& ex : corpus_) {
    ++trend[std::string(dataset::to_string(ex.labels.trend))];
    ++periodic[std::string(dataset::to_string(ex.labels.periodic))];
    ++fluctuation[std::string(dataset::to_string(ex.labels.fluctuation))];
  }
  json out{{"corpus_size", corpus_.size()},
           {"index_size", retriever_.index().size()},
           {"embedding_dim", retriever_.index().dim()},
           {"modality", retrieval::to_string(retriever_.index().modality)},
           {"fingerprint", retriever_.index().fingerprint},
           {"requests", requests_.load()},
           {"classes", {{"trend", trend}, {"periodic", periodic}, {"fluctuation", fluctuation}}}};
  return {200, out.dump()};
}

void register_routes(httplib::Server& server, Service& service,
                     const std::optional<std::filesystem::path>& static_dir) {
  server.Post("/api/search", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.search(req.body));
  });
  server.Get(R"(/api/signal/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.signal(req.matches[1]));
  });
  server.Get("/api/health", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.health());
  });
  server.Get("/api/stats", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.stats());
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", message}}.dump(), "application/json");
      });
  if (static_dir && std::filesystem::is_directory(*static_dir)) {
    server.set_mount_point("/", static_dir->string());
  }
}

}  // namespace clasp::interface
