#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clasp/dataset/types.hpp"
#include "clasp/encoders/vocab.hpp"
#include "clasp/error.hpp"
#include "clasp/numerics/ops.hpp"
#include "clasp/numerics/tape.hpp"

namespace clasp::encoders {

using numerics::BasicTensor;
using numerics::ParamMap;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

template <typename T>
using VarMap = std::map<std::string, Var<T>>;

struct EncoderConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 128;
  std::size_t text_hidden = 256;
  std::size_t text_dim = 128;    // U
  std::size_t signal_dim = 128;  // V
  std::array<std::size_t, 4> channels = {32, 64, 128, 128};
  std::size_t kernel = 7;
  std::size_t stride = 2;
  std::size_t padding = 3;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

inline constexpr std::size_t kMinEncoderLength = 16;
inline constexpr std::size_t kResampleLength = 64;

// Parameter names and shapes of both encoders, in a fixed order.
std::vector<std::pair<std::string, numerics::Shape>> encoder_param_shapes(const EncoderConfig& c);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor, biases included.
ParamMap<float> init_encoder_params(const EncoderConfig& c, std::uint64_t seed);

// z-score with the population std (floored at 1e-8).
dataset::SignalSeries preprocess_signal(const dataset::SignalSeries& series);

// Linear interpolation onto `length` evenly spaced points.
std::vector<float> resample_linear(const std::vector<float>& values, std::size_t length);

// What the encoder consumes: short series are resampled to 64 samples,
// then z-scored.
dataset::SignalSeries prepare_signal(const dataset::SignalSeries& series);

// Stacks prepared series of equal length into [N, 1, L].
template <typename T>
BasicTensor<T> stack_signals(const std::vector<const dataset::SignalSeries*>& batch) {
  if (batch.empty()) throw ContractError("stack_signals: empty batch");
  const std::size_t len = batch.front()->length();
  BasicTensor<T> out({batch.size(), 1, len});
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (batch[n]->length() != len) {
      throw ShapeError("stack_signals: series '" + batch[n]->id + "' has length " +
                       std::to_string(batch[n]->length()) + ", batch length is " +
                       std::to_string(len));
    }
    for (std::size_t i = 0; i < len; ++i) {
      out.raw()[n * len + i] = static_cast<T>(batch[n]->values[i]);
    }
  }
  return out;
}

// Length after the four stride-2 convolutions.
std::size_t signal_temporal_length(const EncoderConfig& c, std::size_t length, std::size_t layers = 4);

// x [N,1,L] -> [N,V]. Four conv+relu blocks, mean over time, dense.
template <typename T>
Var<T> signal_encoder(const VarMap<T>& p, const Var<T>& x, const EncoderConfig& c) {
  numerics::detail::require_rank("signal_encoder input", x.shape(), 3);
  if (x.shape()[2] < kMinEncoderLength) {
    throw InputTooShortError("signal encoder needs at least " + std::to_string(kMinEncoderLength) +
                             " samples, got " + std::to_string(x.shape()[2]));
  }
  Var<T> h = x;
  for (std::size_t l = 0; l < c.channels.size(); ++l) {
    const std::string base = "signal.conv" + std::to_string(l);
    h = numerics::relu(
        numerics::conv1d(h, p.at(base + ".weight"), p.at(base + ".bias"), c.stride, c.padding));
  }
  auto pooled = numerics::mean_over_axis(h, 2);
  return numerics::linear(pooled, p.at("signal.dense.weight"), p.at("signal.dense.bias"));
}

// Mean of the non-pad token embeddings of each sequence -> [N, embed_dim].
// Expressed as a constant averaging matrix times the gathered rows, so the
// pooling is differentiable with the existing operators.
template <typename T>
Var<T> pooled_embeddings(const Var<T>& table, const std::vector<TokenSeq>& batch) {
  if (batch.empty()) throw ContractError("text encoder: empty batch");
  const std::size_t vocab = table.shape()[0];
  std::vector<std::size_t> flat;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (const auto& seq : batch) {
    const std::size_t start = flat.size();
    for (const auto i : seq.indices) {
      if (i >= vocab) {
        throw VocabError("token index " + std::to_string(i) + " out of range for vocabulary of " +
                         std::to_string(vocab));
      }
      if (i != kPad) flat.push_back(i);
    }
    spans.emplace_back(start, flat.size() - start);
  }
  // a batch of pad-only sequences pools to zeros
  if (flat.empty()) flat.push_back(kPad);
  BasicTensor<T> avg({batch.size(), flat.size()});
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto [start, count] = spans[n];
    for (std::size_t j = 0; j < count; ++j) {
      avg.raw()[n * flat.size() + start + j] = T{1} / static_cast<T>(count);
    }
  }
  auto rows = numerics::embedding_lookup(table, std::span<const std::size_t>(flat));
  return numerics::matmul(table.tape()->constant(std::move(avg)), rows);
}

// token sequences -> [N,U]. Embedding, mean pool, dense, relu, dense.
template <typename T>
Var<T> text_encoder(const VarMap<T>& p, const std::vector<TokenSeq>& batch) {
  auto pooled = pooled_embeddings(p.at("text.embedding"), batch);
  auto h = numerics::relu(
      numerics::linear(pooled, p.at("text.dense0.weight"), p.at("text.dense0.bias")));
  return numerics::linear(h, p.at("text.dense1.weight"), p.at("text.dense1.bias"));
}

// Inference helpers over a frozen parameter map.
Tensor encode_signal(const dataset::SignalSeries& prepared, const ParamMap<float>& params,
                     const EncoderConfig& c);
Tensor encode_text(const TokenSeq& tokens, const ParamMap<float>& params, const EncoderConfig& c);

}  // namespace clasp::encoders
