#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace clasp::eval {

// (1 / min(|relevant|, k)) * sum of precision@i over relevant hits in the
// top k; 0 for an empty relevant set. Duplicate ids throw ContractError.
double average_precision_at_k(const std::vector<std::string>& ranked,
                              const std::set<std::string>& relevant, std::size_t k = 10);

// Expected AP@k of a uniformly random ranking of m items, r of them relevant.
double expected_random_ap(std::size_t m, std::size_t r, std::size_t k = 10);

// TF-IDF over a fixed document collection: tf = 1 + ln(count),
// idf = ln((1 + N) / (1 + df)) + 1, vectors l2-normalised.
class TfidfModel {
 public:
  explicit TfidfModel(const std::vector<std::string>& corpus);

  using Vector = std::map<std::string, double>;

  Vector vectorize(std::string_view text) const;
  double idf(const std::string& term) const;
  double cosine(std::string_view a, std::string_view b) const;
  static double cosine(const Vector& a, const Vector& b);
  // cosine > ts; empty text is never relevant.
  bool relevant(std::string_view query, std::string_view candidate, double ts) const;

  std::size_t documents() const { return documents_; }

 private:
  std::map<std::string, std::size_t> df_;
  std::size_t documents_ = 0;
};

}  // namespace clasp::eval
