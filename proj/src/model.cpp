#include <cmath>
#include <map>
#include <random>

#include "json.hpp"

#include "clasp/contrastive/container.hpp"
#include "clasp/contrastive/model.hpp"

namespace clasp::contrastive {

namespace {

using nlohmann::json;

constexpr std::size_t kEmbedChunk = 64;

json config_json(const ModelConfig& c) {
  const auto& e = c.encoder;
  return json{{"vocab_size", e.vocab_size},   {"embed_dim", e.embed_dim},
              {"text_hidden", e.text_hidden}, {"text_dim", e.text_dim},
              {"signal_dim", e.signal_dim},   {"channels", e.channels},
              {"kernel", e.kernel},           {"stride", e.stride},
              {"padding", e.padding},         {"projection_dim", c.embed_dim},
              {"normalize", c.normalize}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  auto& e = c.encoder;
  e.vocab_size = j.at("vocab_size").get<std::size_t>();
  e.embed_dim = j.at("embed_dim").get<std::size_t>();
  e.text_hidden = j.at("text_hidden").get<std::size_t>();
  e.text_dim = j.at("text_dim").get<std::size_t>();
  e.signal_dim = j.at("signal_dim").get<std::size_t>();
  e.channels = j.at("channels").get<std::array<std::size_t, 4>>();
  e.kernel = j.at("kernel").get<std::size_t>();
  e.stride = j.at("stride").get<std::size_t>();
  e.padding = j.at("padding").get<std::size_t>();
  c.embed_dim = j.at("projection_dim").get<std::size_t>();
  c.normalize = j.at("normalize").get<bool>();
  return c;
}

std::vector<std::pair<std::string, numerics::Shape>> model_param_shapes(const ModelConfig& c) {
  auto shapes = encoders::encoder_param_shapes(c.encoder);
  shapes.push_back({"proj.signal.weight", {c.encoder.signal_dim, c.embed_dim}});
  shapes.push_back({"proj.signal.bias", {c.embed_dim}});
  shapes.push_back({"proj.text.weight", {c.encoder.text_dim, c.embed_dim}});
  shapes.push_back({"proj.text.bias", {c.embed_dim}});
  shapes.push_back({"log_temperature", {1}});
  return shapes;
}

encoders::VarMap<float> frozen(Tape<float>& tape, const ParamMap<float>& params) {
  encoders::VarMap<float> out;
  for (const auto& [name, value] : params) out.emplace(name, tape.constant(value));
  return out;
}

void copy_rows(const Tensor& src, Tensor& dst, std::size_t first_row) {
  std::copy(src.data().begin(), src.data().end(), dst.raw() + first_row * dst.dim(1));
}

void normalize_rows(Tensor& t) {
  const std::size_t d = t.dim(1);
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    float* row = t.raw() + r * d;
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += static_cast<double>(row[j]) * row[j];
    if (ss == 0.0) continue;
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(row[j] * inv);
  }
}

}  // namespace

double ContrastiveModel::temperature() const {
  return std::exp(static_cast<double>(params.at("log_temperature").item()));
}

// CRC of the container body; the whole container ends in its own CRC, which
// would make every fingerprint the same residue.
std::uint32_t ContrastiveModel::fingerprint() const {
  const auto bytes = serialize_model(*this);
  return crc32_of(std::string_view(bytes).substr(0, bytes.size() - 4));
}

ContrastiveModel init_model(const ModelConfig& config, encoders::Vocab vocab, std::uint64_t seed) {
  ContrastiveModel m;
  m.config = config;
  m.config.encoder.vocab_size = vocab.size();
  m.vocab = std::move(vocab);
  m.params = encoders::init_encoder_params(m.config.encoder, seed);
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
  for (const auto& [name, shape] : model_param_shapes(m.config)) {
    if (m.params.count(name) != 0 || !name.starts_with("proj.")) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(
                                    name.ends_with(".weight") ? shape[0]
                                    : name == "proj.signal.bias" ? m.config.encoder.signal_dim
                                                                 : m.config.encoder.text_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(shape);
    if (name.ends_with(".weight")) {
      for (auto& v : t.data()) v = static_cast<float>(dist(rng));
    }
    m.params.emplace(name, std::move(t));
  }
  m.params.emplace("log_temperature",
                   Tensor::scalar(static_cast<float>(kInitialLogTemperature)));
  return m;
}

std::string serialize_model(const ContrastiveModel& model) {
  std::vector<Record> records;
  records.push_back(make_record("config", config_json(model.config).dump()));
  records.push_back(make_record("vocab", model.vocab.serialize()));
  for (const auto& [name, shape] : model_param_shapes(model.config)) {
    const auto it = model.params.find(name);
    if (it == model.params.end()) throw CheckpointError("model is missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw CheckpointError("parameter '" + name + "' has shape " +
                            numerics::shape_str(it->second.shape()) + ", expected " +
                            numerics::shape_str(shape));
    }
    records.push_back(make_record(name, it->second));
  }
  return write_container(records);
}

ContrastiveModel deserialize_model(std::string_view bytes) {
  const auto records = read_container(bytes);
  ContrastiveModel m;
  try {
    m.config = config_from_json(json::parse(record_bytes(find_record(records, "config"))));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad model config: ") + e.what());
  }
  try {
    m.vocab = encoders::Vocab::deserialize(record_bytes(find_record(records, "vocab")));
  } catch (const VocabError& e) {
    throw CheckpointError(std::string("bad vocabulary: ") + e.what());
  }
  if (m.vocab.size() != m.config.encoder.vocab_size) {
    throw CheckpointError("vocabulary size does not match model config");
  }
  for (const auto& [name, shape] : model_param_shapes(m.config)) {
    auto t = record_tensor(find_record(records, name));
    if (t.shape() != shape) {
      throw CheckpointError("parameter '" + name + "' has shape " + numerics::shape_str(t.shape()) +
                            ", expected " + numerics::shape_str(shape));
    }
    m.params.emplace(name, std::move(t));
  }
  return m;
}

void save_checkpoint(const ContrastiveModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

ContrastiveModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

Tensor embed_signals(const ContrastiveModel& model, const std::vector<dataset::SignalSeries>& series) {
  if (series.empty()) throw ContractError("embed_signals: no series");
  const std::size_t d = model.config.embed_dim;
  Tensor out({series.size(), d});
  std::vector<dataset::SignalSeries> prepared;
  prepared.reserve(series.size());
  for (const auto& s : series) prepared.push_back(encoders::prepare_signal(s));

  // equal-length runs share a batch
  std::size_t start = 0;
  while (start < prepared.size()) {
    std::size_t end = start + 1;
    while (end < prepared.size() && end - start < kEmbedChunk &&
           prepared[end].length() == prepared[start].length()) {
      ++end;
    }
    std::vector<const dataset::SignalSeries*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&prepared[i]);
    Tape<float> tape;
    const auto p = frozen(tape, model.params);
    auto x = tape.constant(encoders::stack_signals<float>(batch));
    auto e = numerics::linear(encoders::signal_encoder(p, x, model.config.encoder),
                              p.at("proj.signal.weight"), p.at("proj.signal.bias"));
    copy_rows(e.value(), out, start);
    start = end;
  }
  normalize_rows(out);
  return out;
}

Tensor embed_texts(const ContrastiveModel& model, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ContractError("embed_texts: no texts");
  const std::size_t d = model.config.embed_dim;
  Tensor out({texts.size(), d});
  for (std::size_t start = 0; start < texts.size(); start += kEmbedChunk) {
    const std::size_t end = std::min(texts.size(), start + kEmbedChunk);
    std::vector<encoders::TokenSeq> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(encoders::tokenize(texts[i], model.vocab));
    Tape<float> tape;
    const auto p = frozen(tape, model.params);
    auto e = numerics::linear(encoders::text_encoder(p, batch), p.at("proj.text.weight"),
                              p.at("proj.text.bias"));
    copy_rows(e.value(), out, start);
  }
  normalize_rows(out);
  return out;
}

double batch_loss(const ContrastiveModel& model, const std::vector<dataset::SignalSeries>& prepared,
                  const std::vector<encoders::TokenSeq>& tokens, double fixed_tau) {
  std::vector<const dataset::SignalSeries*> ptrs;
  for (const auto& s : prepared) ptrs.push_back(&s);
  Tape<float> tape;
  const auto p = frozen(tape, model.params);
  const auto g =
      forward_batch(p, model.config, encoders::stack_signals<float>(ptrs), tokens, fixed_tau);
  return g.loss.value().item();
}

}  // namespace clasp::contrastive
