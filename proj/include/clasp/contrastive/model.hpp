#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clasp/contrastive/loss.hpp"
#include "clasp/dataset/types.hpp"
#include "clasp/encoders/encoder.hpp"
#include "clasp/encoders/vocab.hpp"

namespace clasp::contrastive {

using numerics::ParamMap;
using numerics::Tensor;

struct ModelConfig {
  encoders::EncoderConfig encoder;
  std::size_t embed_dim = 64;  // d
  bool normalize = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Everything needed to embed either modality: vocabulary, encoder and
// projection parameters, and log_temperature.
struct ContrastiveModel {
  ModelConfig config;
  encoders::Vocab vocab;
  ParamMap<float> params;

  double temperature() const;
  // CRC32 of the serialised checkpoint.
  std::uint32_t fingerprint() const;

  friend bool operator==(const ContrastiveModel&, const ContrastiveModel&) = default;
};

// Fresh model with uniform(+-1/sqrt(fan_in)) weights and log tau = ln(1/0.07).
ContrastiveModel init_model(const ModelConfig& config, encoders::Vocab vocab, std::uint64_t seed);

std::string serialize_model(const ContrastiveModel& model);
ContrastiveModel deserialize_model(std::string_view bytes);
void save_checkpoint(const ContrastiveModel& model, const std::filesystem::path& path);
ContrastiveModel load_checkpoint(const std::filesystem::path& path);

// Outputs of one forward pass over a batch of N pairs.
template <typename T>
struct BatchGraph {
  Var<T> text_embedding;    // [N,d]
  Var<T> signal_embedding;  // [N,d]
  Var<T> similarity;        // [N,N]
  Var<T> loss;              // [1]
};

// `signals` is [N,1,L] of prepared series; `fixed_tau` > 0 replaces the
// learned temperature.
template <typename T>
BatchGraph<T> forward_batch(const encoders::VarMap<T>& p, const ModelConfig& config,
                            const BasicTensor<T>& signals,
                            const std::vector<encoders::TokenSeq>& tokens, double fixed_tau = 0.0) {
  if (signals.dim(0) != tokens.size()) {
    throw ShapeError("forward_batch: " + std::to_string(signals.dim(0)) + " signals but " +
                     std::to_string(tokens.size()) + " captions");
  }
  Tape<T>& tape = *p.begin()->second.tape();
  BatchGraph<T> g;
  auto xs = encoders::signal_encoder(p, tape.constant(signals), config.encoder);
  auto xt = encoders::text_encoder(p, tokens);
  g.signal_embedding = project(xs, p.at("proj.signal.weight"), p.at("proj.signal.bias"),
                               config.normalize);
  g.text_embedding = project(xt, p.at("proj.text.weight"), p.at("proj.text.bias"), config.normalize);
  Var<T> tau = fixed_tau > 0.0 ? tape.constant(BasicTensor<T>::scalar(static_cast<T>(fixed_tau)))
                               : numerics::exp(p.at("log_temperature"));
  g.similarity = similarity_matrix(g.text_embedding, g.signal_embedding, tau);
  g.loss = clasp_loss(g.similarity);
  return g;
}

// Unit-norm embeddings, one row per input, for cosine retrieval. Series are
// prepared internally and may have different lengths.
Tensor embed_signals(const ContrastiveModel& model, const std::vector<dataset::SignalSeries>& series);
Tensor embed_texts(const ContrastiveModel& model, const std::vector<std::string>& texts);

// Loss of the model on one batch of pairs, without gradients.
double batch_loss(const ContrastiveModel& model, const std::vector<dataset::SignalSeries>& prepared,
                  const std::vector<encoders::TokenSeq>& tokens, double fixed_tau = 0.0);

}  // namespace clasp::contrastive
