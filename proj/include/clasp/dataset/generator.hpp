#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clasp/dataset/types.hpp"

namespace clasp::dataset {

// Parameters read by compose_signal, by component:
//   every trend       offset
//   non-flat trend    slope (change per sample)
//   exp_inc/exp_dec   exp_rate
//   periodic          amplitude, period (samples), phase (radians)
//   noise             noise_sigma (absolute)
//   spikes            spike_rate (per sample), spike_magnitude (absolute)
std::vector<std::string> required_params(const ClassTriple& triple);

// The three additive parts of a composed signal, in double precision.
struct SignalComponents {
  std::vector<double> trend;
  std::vector<double> periodic;
  std::vector<double> fluctuation;
};

SignalComponents compose_components(const ClassTriple& triple, const GenParams& params,
                                    std::size_t length, std::uint64_t rng_seed);

// trend + periodic + fluctuation, un-normalised. The fluctuation stream is
// seeded from rng_seed alone, so it is the same whatever the other parts are.
SignalSeries compose_signal(const ClassTriple& triple, const GenParams& params,
                            std::size_t length, std::uint64_t rng_seed, std::string id = {});

// Maps the series onto [-1, 1]; a constant series becomes all zeros.
void minmax_normalize(std::vector<float>& values);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GeneratorConfig {
  std::size_t size = 1000;
  std::size_t length = 2048;

  // Index 0 is the null class. Heavier null weights give more one- and
  // two-component series, which the single-component queries need.
  std::array<double, 7> trend_weights = {6, 1, 1, 1, 1, 1, 1};
  std::array<double, 5> periodic_weights = {4, 1, 1, 1, 1};
  std::array<double, 5> fluctuation_weights = {4, 1, 1, 1, 1};

  // Total trend change over the series; slope = change / length.
  Range trend_change{1.0, 2.0};
  Range offset{-1.0, 1.0};
  // Below ~5 an exponential rise is hard to tell from a quadratic once normalized.
  Range exp_rate{5.0, 8.0};
  Range amplitude{0.1, 0.3};
  // As a fraction of length; never below 4 samples.
  Range period_fraction{1.0 / 32.0, 1.0 / 8.0};
  // Relative to the half-range of trend + periodic.
  double small_noise_ratio = 0.02;
  double large_noise_ratio = 0.3;
  Range spike_rate{0.005, 0.02};
  Range spike_magnitude{0.6, 1.2};

  // Caption templates sampled uniformly. Defaults to the training templates.
  std::vector<int> templates = {0, 1, 2, 3, 4, 5};
  bool normalize = true;
};

// 12-sample series with nine-word captions.
GeneratorConfig truce_config(std::size_t size);

// Number of triples with nonzero weight in every category.
std::size_t active_triple_count(const GeneratorConfig& config);

// Deterministic in (config, seed); examples are generated in parallel from
// per-index RNG streams. When size >= 10 * active_triple_count the first
// active_triple_count examples enumerate every active triple.
std::vector<LabeledExample> generate_dataset(const GeneratorConfig& config, std::uint64_t seed);

// Reproducible stream seed for element `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::string example_id(std::size_t index);

}  // namespace clasp::dataset
