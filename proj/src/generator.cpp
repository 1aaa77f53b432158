#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <random>

#include "clasp/dataset/captions.hpp"
#include "clasp/dataset/generator.hpp"
#include "clasp/error.hpp"

namespace clasp::dataset {

namespace {

double param(const GenParams& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw MissingParamError(name);
  if (!std::isfinite(it->second)) {
    throw InvalidParamError("parameter '" + name + "' is not finite");
  }
  return it->second;
}

double positive_param(const GenParams& params, const std::string& name) {
  const double v = param(params, name);
  if (v <= 0.0) throw InvalidParamError("parameter '" + name + "' must be positive");
  return v;
}

double trend_value(Trend trend, const GenParams& params, std::size_t i, std::size_t length) {
  const double c = param(params, "offset");
  if (trend == Trend::flat) return c;
  const double s = std::abs(param(params, "slope"));
  const double n = static_cast<double>(length);
  const double t = static_cast<double>(i) / n;
  const double span = s * n;
  switch (trend) {
    case Trend::linear_inc: return c + s * static_cast<double>(i);
    case Trend::linear_dec: return c - s * static_cast<double>(i);
    case Trend::quadratic: return c + span * t * t;
    case Trend::exp_inc: {
      const double k = positive_param(params, "exp_rate");
      return c + span * std::expm1(k * t) / std::expm1(k);
    }
    case Trend::exp_dec: {
      const double k = positive_param(params, "exp_rate");
      return c - span * (-std::expm1(-k * t)) / (-std::expm1(-k));
    }
    case Trend::neg_cubic: {
      // falls, rises through the middle, then falls again
      const double u = 2.0 * t - 1.0;
      return c - span * (u * u * u - 0.5 * u);
    }
    case Trend::flat: break;
  }
  return c;
}

double periodic_value(Periodic p, double amplitude, double period, double phase, std::size_t i) {
  const double x = static_cast<double>(i) / period + phase / (2.0 * std::numbers::pi);
  const double frac = x - std::floor(x);
  switch (p) {
    case Periodic::none: return 0.0;
    case Periodic::sine: return amplitude * std::sin(2.0 * std::numbers::pi * x);
    case Periodic::square: return frac < 0.5 ? amplitude : -amplitude;
    case Periodic::sawtooth: return amplitude * (2.0 * frac - 1.0);
    case Periodic::triangle: return amplitude * (1.0 - 4.0 * std::abs(frac - 0.5));
  }
  return 0.0;
}

double uniform(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

template <std::size_t N>
int weighted_pick(std::mt19937_64& rng, const std::array<double, N>& weights) {
  std::discrete_distribution<int> dist(weights.begin(), weights.end());
  return dist(rng);
}

template <std::size_t N>
void check_weights(const std::array<double, N>& weights, const char* what) {
  double total = 0.0;
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ConfigError(std::string(what) + " weights must be finite and non-negative");
    }
    total += w;
  }
  if (total <= 0.0) throw ConfigError(std::string(what) + " weights are all zero");
}

std::vector<ClassTriple> active_triples(const GeneratorConfig& config) {
  std::vector<ClassTriple> out;
  for (const Trend t : kAllTrends) {
    if (config.trend_weights[static_cast<std::size_t>(t)] <= 0.0) continue;
    for (const Periodic p : kAllPeriodics) {
      if (config.periodic_weights[static_cast<std::size_t>(p)] <= 0.0) continue;
      for (const Fluctuation f : kAllFluctuations) {
        if (config.fluctuation_weights[static_cast<std::size_t>(f)] <= 0.0) continue;
        out.push_back({t, p, f});
      }
    }
  }
  return out;
}

void validate_config(const GeneratorConfig& config) {
  check_weights(config.trend_weights, "trend");
  check_weights(config.periodic_weights, "periodic");
  check_weights(config.fluctuation_weights, "fluctuation");
  if (config.length < 2) throw ConfigError("signal length must be at least 2");
  if (config.templates.empty()) throw ConfigError("no caption templates configured");
  for (const int id : config.templates) {
    if (id < 0 || id >= kTemplateCount) {
      throw ConfigError("caption template " + std::to_string(id) + " does not exist");
    }
  }
  for (const Range* r : {&config.trend_change, &config.offset, &config.exp_rate,
                         &config.amplitude, &config.period_fraction, &config.spike_rate,
                         &config.spike_magnitude}) {
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
      throw ConfigError("parameter range is empty or not finite");
    }
  }
}

// Draws the parameters a triple needs. Fluctuation sizes are relative to
// the deterministic part, so they are resolved after it is known.
GenParams sample_params(const ClassTriple& triple, const GeneratorConfig& config,
                        std::mt19937_64& rng) {
  GenParams p;
  const double n = static_cast<double>(config.length);
  p["offset"] = uniform(rng, config.offset);
  if (!is_null(triple.trend)) p["slope"] = uniform(rng, config.trend_change) / n;
  if (triple.trend == Trend::exp_inc || triple.trend == Trend::exp_dec) {
    p["exp_rate"] = uniform(rng, config.exp_rate);
  }
  if (!is_null(triple.periodic)) {
    p["amplitude"] = uniform(rng, config.amplitude);
    p["period"] = std::max(4.0, uniform(rng, config.period_fraction) * n);
    p["phase"] = uniform(rng, {0.0, 2.0 * std::numbers::pi});
  }
  if (is_null(triple.fluctuation)) return p;

  ClassTriple deterministic = triple;
  deterministic.fluctuation = Fluctuation::none;
  const auto parts = compose_components(deterministic, p, config.length, 0);
  double lo = parts.trend[0] + parts.periodic[0];
  double hi = lo;
  for (std::size_t i = 0; i < config.length; ++i) {
    const double v = parts.trend[i] + parts.periodic[i];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // a flat series still needs a visible fluctuation scale
  const double half_range = std::max(0.5 * (hi - lo), 0.5);

  switch (triple.fluctuation) {
    case Fluctuation::small_noise: p["noise_sigma"] = config.small_noise_ratio * half_range; break;
    case Fluctuation::large_noise: p["noise_sigma"] = config.large_noise_ratio * half_range; break;
    case Fluctuation::pos_spikes:
    case Fluctuation::neg_spikes:
      p["spike_rate"] = uniform(rng, config.spike_rate);
      p["spike_magnitude"] = uniform(rng, config.spike_magnitude) * half_range;
      break;
    case Fluctuation::none: break;
  }
  return p;
}

}  // namespace

std::vector<std::string> required_params(const ClassTriple& triple) {
  std::vector<std::string> names = {"offset"};
  if (!is_null(triple.trend)) names.emplace_back("slope");
  if (triple.trend == Trend::exp_inc || triple.trend == Trend::exp_dec) {
    names.emplace_back("exp_rate");
  }
  if (!is_null(triple.periodic)) {
    names.insert(names.end(), {"amplitude", "period", "phase"});
  }
  switch (triple.fluctuation) {
    case Fluctuation::small_noise:
    case Fluctuation::large_noise: names.emplace_back("noise_sigma"); break;
    case Fluctuation::pos_spikes:
    case Fluctuation::neg_spikes: names.insert(names.end(), {"spike_rate", "spike_magnitude"}); break;
    case Fluctuation::none: break;
  }
  return names;
}

SignalComponents compose_components(const ClassTriple& triple, const GenParams& params,
                                    std::size_t length, std::uint64_t rng_seed) {
  if (length < 2) throw InvalidParamError("signal length must be at least 2");
  for (const auto& name : required_params(triple)) param(params, name);

  SignalComponents out;
  out.trend.resize(length);
  out.periodic.assign(length, 0.0);
  out.fluctuation.assign(length, 0.0);

  for (std::size_t i = 0; i < length; ++i) out.trend[i] = trend_value(triple.trend, params, i, length);

  if (!is_null(triple.periodic)) {
    const double amplitude = param(params, "amplitude");
    const double period = positive_param(params, "period");
    const double phase = param(params, "phase");
    for (std::size_t i = 0; i < length; ++i) {
      out.periodic[i] = periodic_value(triple.periodic, amplitude, period, phase, i);
    }
  }

  std::mt19937_64 rng(rng_seed);
  switch (triple.fluctuation) {
    case Fluctuation::none: break;
    case Fluctuation::small_noise:
    case Fluctuation::large_noise: {
      const double sigma = param(params, "noise_sigma");
      if (sigma < 0.0) throw InvalidParamError("parameter 'noise_sigma' must be non-negative");
      std::normal_distribution<double> noise(0.0, 1.0);
      for (auto& v : out.fluctuation) v = sigma * noise(rng);
      break;
    }
    case Fluctuation::pos_spikes:
    case Fluctuation::neg_spikes: {
      const double rate = param(params, "spike_rate");
      if (rate < 0.0 || rate > 1.0) {
        throw InvalidParamError("parameter 'spike_rate' must lie in [0, 1]");
      }
      const double magnitude = std::abs(param(params, "spike_magnitude"));
      const double sign = triple.fluctuation == Fluctuation::pos_spikes ? 1.0 : -1.0;
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      for (auto& v : out.fluctuation) v = coin(rng) < rate ? sign * magnitude : 0.0;
      break;
    }
  }
  return out;
}

SignalSeries compose_signal(const ClassTriple& triple, const GenParams& params, std::size_t length,
                            std::uint64_t rng_seed, std::string id) {
  const auto parts = compose_components(triple, params, length, rng_seed);
  SignalSeries s;
  s.id = std::move(id);
  s.values.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    s.values[i] = static_cast<float>(parts.trend[i] + parts.periodic[i] + parts.fluctuation[i]);
  }
  return s;
}

void minmax_normalize(std::vector<float>& values) {
  if (values.empty()) return;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi - lo <= 0.0) {
    std::fill(values.begin(), values.end(), 0.0f);
    return;
  }
  for (auto& v : values) v = static_cast<float>(2.0 * (v - lo) / (hi - lo) - 1.0);
}

GeneratorConfig truce_config(std::size_t size) {
  GeneratorConfig c;
  c.size = size;
  c.length = 12;
  c.period_fraction = {1.0 / 3.0, 1.0 / 2.0};
  c.spike_rate = {0.08, 0.2};
  c.templates = {kNineWordTemplate};
  return c;
}

std::size_t active_triple_count(const GeneratorConfig& config) {
  return active_triples(config).size();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over a combined key
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string example_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%07zu", index);
  return buf;
}

std::vector<LabeledExample> generate_dataset(const GeneratorConfig& config, std::uint64_t seed) {
  validate_config(config);
  const auto triples = active_triples(config);
  const bool enumerate = config.size >= 10 * triples.size();
  const auto count = static_cast<std::int64_t>(config.size);

  std::vector<LabeledExample> out(config.size);
  // Any exception is rethrown after the loop; none may escape the region.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t idx = 0; idx < count; ++idx) {
    try {
      const auto i = static_cast<std::size_t>(idx);
      std::mt19937_64 rng(derive_seed(seed, i));
      ClassTriple triple;
      if (enumerate && i < triples.size()) {
        triple = triples[i];
      } else {
        triple.trend = static_cast<Trend>(weighted_pick(rng, config.trend_weights));
        triple.periodic = static_cast<Periodic>(weighted_pick(rng, config.periodic_weights));
        triple.fluctuation = static_cast<Fluctuation>(weighted_pick(rng, config.fluctuation_weights));
      }
      const int template_id =
          config.templates[static_cast<std::size_t>(rng() % config.templates.size())];
      const std::uint64_t noise_seed = rng();
      const std::uint64_t caption_seed = rng();

      LabeledExample ex;
      ex.labels = triple;
      ex.template_id = template_id;
      ex.gen_params = sample_params(triple, config, rng);
      ex.signal = compose_signal(triple, ex.gen_params, config.length, noise_seed, example_id(i));
      if (config.normalize) minmax_normalize(ex.signal.values);
      ex.caption = render_caption(triple, template_id, caption_seed, ex.signal.id);
      out[i] = std::move(ex);
    } catch (...) {
#pragma omp critical(clasp_generate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace clasp::dataset
