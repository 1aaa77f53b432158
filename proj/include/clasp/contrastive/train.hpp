#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "clasp/contrastive/model.hpp"
#include "clasp/dataset/types.hpp"

namespace clasp::contrastive {

struct TrainConfig {
  std::size_t batch_size = 32;  // N
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  std::size_t embed_dim = 64;  // d
  bool normalize = true;
  // When false, log_temperature is frozen and tau = fixed_temperature.
  bool learn_temperature = true;
  double fixed_temperature = 1.0;
  std::size_t vocab_min_count = 1;
  std::optional<std::filesystem::path> checkpoint_path;  // best-val model
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's batches
  double val_loss = 0.0;
  double temperature = 0.0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainLog {
  double initial_loss = 0.0;  // first batch, before any update
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

struct TrainResult {
  ContrastiveModel model;  // after the last epoch
  ContrastiveModel best;   // lowest validation loss
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Vocabulary from the training captions plus freshly initialised weights.
ContrastiveModel initialize_model(const std::vector<dataset::LabeledExample>& train,
                                  const TrainConfig& config);

// Seeded shuffle per epoch, full batches only, Adam on every parameter,
// tau clamped to 100. A non-finite loss throws DivergenceError; the best
// checkpoint written so far stays on disk.
TrainResult train(ContrastiveModel model, const std::vector<dataset::LabeledExample>& train_set,
                  const std::vector<dataset::LabeledExample>& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

TrainResult train(const std::vector<dataset::LabeledExample>& train_set,
                  const std::vector<dataset::LabeledExample>& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Mean loss over consecutive full batches (one short batch if the set is
// smaller than batch_size).
double evaluate_loss(const ContrastiveModel& model, const std::vector<dataset::LabeledExample>& set,
                     std::size_t batch_size, double fixed_tau = 0.0);

}  // namespace clasp::contrastive
