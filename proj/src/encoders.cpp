#include <cmath>
#include <random>

#include "clasp/encoders/encoder.hpp"

namespace clasp::encoders {

namespace {

VarMap<float> frozen(Tape<float>& tape, const ParamMap<float>& params) {
  VarMap<float> out;
  for (const auto& [name, value] : params) out.emplace(name, tape.constant(value));
  return out;
}

}  // namespace

std::vector<std::pair<std::string, numerics::Shape>> encoder_param_shapes(const EncoderConfig& c) {
  std::vector<std::pair<std::string, numerics::Shape>> out;
  std::size_t in = 1;
  for (std::size_t l = 0; l < c.channels.size(); ++l) {
    const std::string base = "signal.conv" + std::to_string(l);
    out.push_back({base + ".weight", {c.channels[l], in, c.kernel}});
    out.push_back({base + ".bias", {c.channels[l]}});
    in = c.channels[l];
  }
  out.push_back({"signal.dense.weight", {in, c.signal_dim}});
  out.push_back({"signal.dense.bias", {c.signal_dim}});
  out.push_back({"text.embedding", {c.vocab_size, c.embed_dim}});
  out.push_back({"text.dense0.weight", {c.embed_dim, c.text_hidden}});
  out.push_back({"text.dense0.bias", {c.text_hidden}});
  out.push_back({"text.dense1.weight", {c.text_hidden, c.text_dim}});
  out.push_back({"text.dense1.bias", {c.text_dim}});
  return out;
}

ParamMap<float> init_encoder_params(const EncoderConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto shapes = encoder_param_shapes(c);
  // fan_in of each tensor: conv in*k, dense rows, embedding width
  std::map<std::string, std::size_t> fan_in;
  for (const auto& [name, shape] : shapes) {
    if (name.ends_with(".weight") && shape.size() == 3) fan_in[name] = shape[1] * shape[2];
    else if (name.ends_with(".weight")) fan_in[name] = shape[0];
    else if (name == "text.embedding") fan_in[name] = shape[1];
  }
  for (const auto& [name, shape] : shapes) {
    if (name.ends_with(".bias")) {
      fan_in[name] = fan_in.at(name.substr(0, name.size() - 5) + ".weight");
    }
  }
  ParamMap<float> params;
  for (const auto& [name, shape] : shapes) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in.at(name)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(shape);
    // biases start at zero; a random bias swamps the input after a few layers
    if (!name.ends_with(".bias")) {
      for (auto& v : t.data()) v = static_cast<float>(dist(rng));
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

dataset::SignalSeries preprocess_signal(const dataset::SignalSeries& series) {
  dataset::validate_signal(series);
  const auto n = static_cast<double>(series.length());
  double mean = 0.0;
  for (const float v : series.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (const float v : series.values) var += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(var / n), 1e-8);
  dataset::SignalSeries out;
  out.id = series.id;
  out.values.resize(series.length());
  for (std::size_t i = 0; i < series.length(); ++i) {
    out.values[i] = static_cast<float>((series.values[i] - mean) / sd);
  }
  // values that are equal up to rounding noise should not be inflated to unit variance
  if (std::sqrt(var / n) <= 1e-8 * std::max(1.0, std::abs(mean))) {
    std::fill(out.values.begin(), out.values.end(), 0.0f);
  }
  return out;
}

std::vector<float> resample_linear(const std::vector<float>& values, std::size_t length) {
  if (values.size() < 2 || length < 2) {
    throw InvalidSignalError("resampling needs at least 2 input and output samples");
  }
  std::vector<float> out(length);
  const double scale = static_cast<double>(values.size() - 1) / static_cast<double>(length - 1);
  for (std::size_t j = 0; j < length; ++j) {
    const double pos = static_cast<double>(j) * scale;
    const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
    const double frac = pos - static_cast<double>(i);
    out[j] = static_cast<float>(values[i] + frac * (static_cast<double>(values[i + 1]) - values[i]));
  }
  return out;
}

dataset::SignalSeries prepare_signal(const dataset::SignalSeries& series) {
  dataset::validate_signal(series);
  if (series.length() >= kResampleLength) return preprocess_signal(series);
  dataset::SignalSeries resampled{series.id, resample_linear(series.values, kResampleLength)};
  return preprocess_signal(resampled);
}

std::size_t signal_temporal_length(const EncoderConfig& c, std::size_t length, std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) {
    length = (length + 2 * c.padding - c.kernel) / c.stride + 1;
  }
  return length;
}

Tensor encode_signal(const dataset::SignalSeries& prepared, const ParamMap<float>& params,
                     const EncoderConfig& c) {
  Tape<float> tape;
  const auto p = frozen(tape, params);
  auto x = tape.constant(stack_signals<float>({&prepared}));
  return signal_encoder(p, x, c).value().reshaped({c.signal_dim});
}

Tensor encode_text(const TokenSeq& tokens, const ParamMap<float>& params, const EncoderConfig& c) {
  Tape<float> tape;
  const auto p = frozen(tape, params);
  return text_encoder(p, std::vector<TokenSeq>{tokens}).value().reshaped({c.text_dim});
}

}  // namespace clasp::encoders
