#pragma once

// Gradient-check cases shared by the unit tests and the acceptance run:
// one per differentiable operator, plus the encoders and the loss.

#include <random>
#include <string>
#include <vector>

#include "clasp/contrastive/loss.hpp"
#include "clasp/numerics/gradcheck.hpp"
#include "clasp/numerics/ops.hpp"

namespace gradcases {

using namespace clasp::numerics;

struct Case {
  std::string name;
  LossBuilder build;
  ParamMap<double> params;
};

inline Tensor64 random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor64 t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Contracts any tensor to a scalar with a fixed random weighting so every
// output coordinate reaches the loss with a distinct coefficient.
inline Var<double> probe(const Var<double>& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = out.value().size();
  auto w = out.tape()->constant(random_tensor({n, 1}, rng));
  return reshape(matmul(reshape(out, {1, n}), w), {1});
}

inline std::vector<Case> operator_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Case> cases;
  auto add_case = [&](std::string name, ParamMap<double> params, LossBuilder fn) {
    cases.push_back({std::move(name), std::move(fn), std::move(params)});
  };
  using V = std::map<std::string, Var<double>>;
  const std::size_t n = 1 + rng() % 8;

  add_case("add", {{"a", random_tensor({n, 3}, rng)}, {"b", random_tensor({n, 3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(add(p.at("a"), p.at("b")), 1); });
  add_case("sub", {{"a", random_tensor({n, 3}, rng)}, {"b", random_tensor({n, 3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(sub(p.at("a"), p.at("b")), 2); });
  add_case("mul_scalar", {{"a", random_tensor({n, 4}, rng)}},
           [](Tape<double>&, const V& p) { return probe(mul_scalar(p.at("a"), -1.7), 3); });
  add_case("scale", {{"a", random_tensor({n, 4}, rng)}, {"s", random_tensor({1}, rng, 0.5, 2.0)}},
           [](Tape<double>&, const V& p) { return probe(scale(p.at("a"), p.at("s")), 4); });
  add_case("exp", {{"a", random_tensor({n, 3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(exp(p.at("a")), 5); });
  add_case("matmul", {{"a", random_tensor({n, 5}, rng)}, {"b", random_tensor({5, 3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(matmul(p.at("a"), p.at("b")), 6); });
  add_case("conv1d",
           {{"x", random_tensor({2, 3, 11}, rng)},
            {"w", random_tensor({4, 3, 5}, rng)},
            {"b", random_tensor({4}, rng)}},
           [](Tape<double>&, const V& p) {
             return probe(conv1d(p.at("x"), p.at("w"), p.at("b"), 2, 2), 7);
           });
  add_case("relu", {{"a", random_tensor({n, 6}, rng)}},
           [](Tape<double>&, const V& p) { return probe(relu(p.at("a")), 8); });
  add_case("embedding_lookup", {{"table", random_tensor({6, 4}, rng)}},
           [](Tape<double>&, const V& p) {
             static const std::vector<std::size_t> idx = {3, 0, 3, 5, 1};
             return probe(embedding_lookup(p.at("table"), std::span<const std::size_t>(idx)), 9);
           });
  add_case("mean_over_axis", {{"a", random_tensor({2, 3, 4}, rng)}},
           [](Tape<double>&, const V& p) { return probe(mean_over_axis(p.at("a"), 1), 10); });
  add_case("l2_normalize_rows", {{"a", random_tensor({n, 5}, rng)}},
           [](Tape<double>&, const V& p) { return probe(l2_normalize_rows(p.at("a")), 11); });
  add_case("transpose", {{"a", random_tensor({n, 3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(transpose(p.at("a")), 12); });
  add_case("log_softmax_rows", {{"a", random_tensor({n, 5}, rng, -3.0, 3.0)}},
           [](Tape<double>&, const V& p) { return probe(log_softmax_rows(p.at("a")), 13); });
  add_case("gather_diag", {{"a", random_tensor({n, n}, rng)}},
           [](Tape<double>&, const V& p) { return probe(gather_diag(p.at("a")), 14); });
  add_case("reshape", {{"a", random_tensor({2, 6}, rng)}},
           [](Tape<double>&, const V& p) { return probe(reshape(p.at("a"), {3, 4}), 15); });
  add_case("linear",
           {{"x", random_tensor({n, 4}, rng)}, {"w", random_tensor({4, 3}, rng)}, {"b", random_tensor({3}, rng)}},
           [](Tape<double>&, const V& p) { return probe(linear(p.at("x"), p.at("w"), p.at("b")), 16); });

  // the full loss: random raw embeddings, normalisation, learned temperature
  const std::size_t nb = 2 + rng() % 7;
  add_case("clasp_loss",
           {{"text", random_tensor({nb, 6}, rng)},
            {"signal", random_tensor({nb, 6}, rng)},
            {"log_tau", Tensor64::scalar(std::log(3.0))}},
           [](Tape<double>&, const V& p) {
             auto et = l2_normalize_rows(p.at("text"));
             auto es = l2_normalize_rows(p.at("signal"));
             return clasp::contrastive::clasp_loss(
                 clasp::contrastive::similarity_matrix(et, es, exp(p.at("log_tau"))));
           });
  add_case("clasp_loss_raw_c", {{"c", random_tensor({nb, nb}, rng, -4.0, 4.0)}},
           [](Tape<double>&, const V& p) { return clasp::contrastive::clasp_loss(p.at("c")); });
  return cases;
}

}  // namespace gradcases
