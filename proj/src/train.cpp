#include <cmath>
#include <limits>
#include <random>

#include "clasp/contrastive/train.hpp"
#include "clasp/numerics/adam.hpp"

namespace clasp::contrastive {

namespace {

struct PreparedSet {
  std::vector<dataset::SignalSeries> signals;
  std::vector<encoders::TokenSeq> tokens;
};

PreparedSet prepare(const std::vector<dataset::LabeledExample>& set, const encoders::Vocab& vocab) {
  PreparedSet out;
  out.signals.resize(set.size());
  out.tokens.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.signals[i] = encoders::prepare_signal(set[i].signal);
    out.tokens[i] = encoders::tokenize(set[i].caption.text, vocab);
  }
  for (const auto& s : out.signals) {
    if (s.length() != out.signals.front().length()) {
      throw ConfigError("training signals must share one length");
    }
  }
  return out;
}

double loss_on(const ContrastiveModel& model, const PreparedSet& set,
               const std::vector<std::size_t>& rows, double fixed_tau) {
  std::vector<dataset::SignalSeries> signals;
  std::vector<encoders::TokenSeq> tokens;
  for (const auto r : rows) {
    signals.push_back(set.signals[r]);
    tokens.push_back(set.tokens[r]);
  }
  return batch_loss(model, signals, tokens, fixed_tau);
}

double mean_loss(const ContrastiveModel& model, const PreparedSet& set, std::size_t batch_size,
                 double fixed_tau) {
  const std::size_t n = set.signals.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t b = std::min(batch_size, n);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start + b <= n; start += b) {
    std::vector<std::size_t> rows(b);
    for (std::size_t i = 0; i < b; ++i) rows[i] = start + i;
    total += loss_on(model, set, rows, fixed_tau);
    ++batches;
  }
  return total / static_cast<double>(batches);
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i-- > 1;) {
    std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
  }
}

}  // namespace

ContrastiveModel initialize_model(const std::vector<dataset::LabeledExample>& train,
                                  const TrainConfig& config) {
  std::vector<dataset::Caption> captions;
  captions.reserve(train.size());
  for (const auto& ex : train) captions.push_back(ex.caption);
  ModelConfig mc;
  mc.embed_dim = config.embed_dim;
  mc.normalize = config.normalize;
  return init_model(mc, encoders::build_vocab(captions, config.vocab_min_count), config.seed);
}

double evaluate_loss(const ContrastiveModel& model, const std::vector<dataset::LabeledExample>& set,
                     std::size_t batch_size, double fixed_tau) {
  return mean_loss(model, prepare(set, model.vocab), batch_size, fixed_tau);
}

TrainResult train(ContrastiveModel model, const std::vector<dataset::LabeledExample>& train_set,
                  const std::vector<dataset::LabeledExample>& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (val_set.empty()) throw ConfigError("validation set is empty");
  if (config.batch_size < 1 || config.batch_size > train_set.size()) {
    throw ConfigError("batch size " + std::to_string(config.batch_size) +
                      " must lie in [1, training set size " + std::to_string(train_set.size()) + "]");
  }
  const double fixed_tau = config.learn_temperature ? 0.0 : config.fixed_temperature;
  const PreparedSet train_data = prepare(train_set, model.vocab);
  const PreparedSet val_data = prepare(val_set, model.vocab);

  numerics::AdamState<float> adam;
  adam.lr = config.lr;
  const float max_log_tau = static_cast<float>(std::log(kMaxTemperature));

  TrainResult result;
  result.best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(train_set.size());
  const std::size_t n = config.batch_size;
  const std::size_t batches = train_set.size() / n;
  bool first_step = true;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<const dataset::SignalSeries*> signals;
      std::vector<encoders::TokenSeq> tokens;
      for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
        signals.push_back(&train_data.signals[order[i]]);
        tokens.push_back(train_data.tokens[order[i]]);
      }
      Tape<float> tape;
      const auto vars = tape.parameters(model.params);
      double loss = 0.0;
      numerics::ParamMap<float> grads;
      try {
        const auto g = forward_batch(vars, model.config, encoders::stack_signals<float>(signals),
                                     tokens, fixed_tau);
        loss = g.loss.value().item();
        if (!std::isfinite(loss)) throw NumericalError("loss is not finite");
        grads = tape.backward(g.loss);
      } catch (const NumericalError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b) + ": " + e.what());
      }
      if (first_step) {
        result.log.initial_loss = loss;
        first_step = false;
      }
      if (!config.learn_temperature) grads.erase("log_temperature");
      numerics::adam_step(model.params, grads, adam);
      for (const auto& [name, p] : model.params) {
        if (!p.all_finite()) {
          throw DivergenceError("parameter '" + name + "' became non-finite at epoch " +
                                std::to_string(epoch));
        }
      }
      auto& log_tau = model.params.at("log_temperature").data()[0];
      log_tau = std::min(log_tau, max_log_tau);
      epoch_loss += loss;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(batches);
    entry.val_loss = mean_loss(model, val_data, n, fixed_tau);
    entry.temperature = model.temperature();
    if (!std::isfinite(entry.val_loss)) {
      throw DivergenceError("validation loss is not finite at epoch " + std::to_string(epoch));
    }
    if (entry.val_loss < best_val) {
      best_val = entry.val_loss;
      result.best = model;
      result.log.best_epoch = epoch;
      if (config.checkpoint_path) save_checkpoint(model, *config.checkpoint_path);
    }
    result.log.epochs.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(const std::vector<dataset::LabeledExample>& train_set,
                  const std::vector<dataset::LabeledExample>& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return train(initialize_model(train_set, config), train_set, val_set, config, on_epoch);
}

}  // namespace clasp::contrastive
