#include <cmath>

#include "clasp/dataset/captions.hpp"
#include "clasp/error.hpp"
#include "clasp/eval/metrics.hpp"

namespace clasp::eval {

double average_precision_at_k(const std::vector<std::string>& ranked,
                              const std::set<std::string>& relevant, std::size_t k) {
  if (k == 0) throw ContractError("average_precision_at_k: k must be at least 1");
  std::set<std::string> seen;
  for (const auto& id : ranked) {
    if (!seen.insert(id).second) {
      throw ContractError("average_precision_at_k: duplicate id '" + id + "' in ranking");
    }
  }
  if (relevant.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.count(ranked[i]) != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

double expected_random_ap(std::size_t m, std::size_t r, std::size_t k) {
  if (m == 0 || r == 0) return 0.0;
  if (r > m) throw ContractError("expected_random_ap: more relevant items than candidates");
  // E[rel_i * hits_i / i] = P(rel_i) * E[hits_i | rel_i] / i
  //   = (r/m) * (1 + (i-1)(r-1)/(m-1)) / i
  const double md = static_cast<double>(m);
  const double rd = static_cast<double>(r);
  double sum = 0.0;
  const std::size_t depth = std::min(k, m);
  for (std::size_t i = 1; i <= depth; ++i) {
    const double others = m > 1 ? static_cast<double>(i - 1) * (rd - 1.0) / (md - 1.0) : 0.0;
    sum += (rd / md) * (1.0 + others) / static_cast<double>(i);
  }
  return sum / static_cast<double>(std::min(r, k));
}

TfidfModel::TfidfModel(const std::vector<std::string>& corpus) : documents_(corpus.size()) {
  for (const auto& doc : corpus) {
    const auto tokens = dataset::normalize_tokens(doc);
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df_[t];
  }
}

double TfidfModel::idf(const std::string& term) const {
  const auto it = df_.find(term);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

TfidfModel::Vector TfidfModel::vectorize(std::string_view text) const {
  std::map<std::string, std::size_t> counts;
  for (auto& t : dataset::normalize_tokens(text)) ++counts[std::move(t)];
  Vector v;
  double ss = 0.0;
  for (const auto& [term, n] : counts) {
    const double w = (1.0 + std::log(static_cast<double>(n))) * idf(term);
    v.emplace(term, w);
    ss += w * w;
  }
  if (ss > 0.0) {
    const double inv = 1.0 / std::sqrt(ss);
    for (auto& [term, w] : v) w *= inv;
  }
  return v;
}

double TfidfModel::cosine(const Vector& a, const Vector& b) {
  const Vector& small = a.size() <= b.size() ? a : b;
  const Vector& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [term, w] : small) {
    const auto it = large.find(term);
    if (it != large.end()) dot += w * it->second;
  }
  return dot;
}

double TfidfModel::cosine(std::string_view a, std::string_view b) const {
  return cosine(vectorize(a), vectorize(b));
}

bool TfidfModel::relevant(std::string_view query, std::string_view candidate, double ts) const {
  const auto q = vectorize(query);
  const auto c = vectorize(candidate);
  if (q.empty() || c.empty()) return false;
  return cosine(q, c) > ts;
}

}  // namespace clasp::eval
