#include <cmath>
#include <sstream>

#include "clasp/dataset/types.hpp"
#include "clasp/error.hpp"

namespace clasp::dataset {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& all, const char* what) {
  for (const E v : all) {
    if (to_string(v) == s) return v;
  }
  throw ParseError(std::string("unknown ") + what + " class '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Trend v) {
  switch (v) {
    case Trend::flat: return "flat";
    case Trend::linear_inc: return "linear_inc";
    case Trend::linear_dec: return "linear_dec";
    case Trend::quadratic: return "quadratic";
    case Trend::exp_inc: return "exp_inc";
    case Trend::exp_dec: return "exp_dec";
    case Trend::neg_cubic: return "neg_cubic";
  }
  return "?";
}

std::string_view to_string(Periodic v) {
  switch (v) {
    case Periodic::none: return "none";
    case Periodic::sine: return "sine";
    case Periodic::square: return "square";
    case Periodic::sawtooth: return "sawtooth";
    case Periodic::triangle: return "triangle";
  }
  return "?";
}

std::string_view to_string(Fluctuation v) {
  switch (v) {
    case Fluctuation::none: return "none";
    case Fluctuation::small_noise: return "small_noise";
    case Fluctuation::large_noise: return "large_noise";
    case Fluctuation::pos_spikes: return "pos_spikes";
    case Fluctuation::neg_spikes: return "neg_spikes";
  }
  return "?";
}

std::string_view to_string(Category v) {
  switch (v) {
    case Category::trend: return "trend";
    case Category::periodic: return "periodic";
    case Category::fluctuation: return "fluctuation";
  }
  return "?";
}

Trend parse_trend(std::string_view s) { return parse_enum(s, kAllTrends, "trend"); }
Periodic parse_periodic(std::string_view s) { return parse_enum(s, kAllPeriodics, "periodic"); }
Fluctuation parse_fluctuation(std::string_view s) {
  return parse_enum(s, kAllFluctuations, "fluctuation");
}

std::string_view class_label(Trend v) {
  switch (v) {
    case Trend::flat: return "flat";
    case Trend::linear_inc: return "linearly increasing";
    case Trend::linear_dec: return "linearly decreasing";
    case Trend::quadratic: return "quadratically increasing";
    case Trend::exp_inc: return "exponentially increasing";
    case Trend::exp_dec: return "exponentially decreasing";
    case Trend::neg_cubic: return "negative cubic";
  }
  return "?";
}

std::string_view class_label(Periodic v) {
  switch (v) {
    case Periodic::none: return "none";
    case Periodic::sine: return "sine wave";
    case Periodic::square: return "square wave";
    case Periodic::sawtooth: return "sawtooth wave";
    case Periodic::triangle: return "triangle wave";
  }
  return "?";
}

std::string_view class_label(Fluctuation v) {
  switch (v) {
    case Fluctuation::none: return "none";
    case Fluctuation::small_noise: return "small noise";
    case Fluctuation::large_noise: return "large noise";
    case Fluctuation::pos_spikes: return "positive spikes";
    case Fluctuation::neg_spikes: return "negative spikes";
  }
  return "?";
}

std::string_view class_label(const ClassValue& v) {
  switch (v.category) {
    case Category::trend: return class_label(static_cast<Trend>(v.value));
    case Category::periodic: return class_label(static_cast<Periodic>(v.value));
    case Category::fluctuation: return class_label(static_cast<Fluctuation>(v.value));
  }
  return "?";
}

std::string_view class_name(const ClassValue& v) {
  switch (v.category) {
    case Category::trend: return to_string(static_cast<Trend>(v.value));
    case Category::periodic: return to_string(static_cast<Periodic>(v.value));
    case Category::fluctuation: return to_string(static_cast<Fluctuation>(v.value));
  }
  return "?";
}

bool matches(const ClassTriple& labels, const ClassValue& v) {
  switch (v.category) {
    case Category::trend: return static_cast<int>(labels.trend) == v.value;
    case Category::periodic: return static_cast<int>(labels.periodic) == v.value;
    case Category::fluctuation: return static_cast<int>(labels.fluctuation) == v.value;
  }
  return false;
}

ClassTriple single_component(const ClassValue& v) {
  ClassTriple t;
  switch (v.category) {
    case Category::trend: t.trend = static_cast<Trend>(v.value); break;
    case Category::periodic: t.periodic = static_cast<Periodic>(v.value); break;
    case Category::fluctuation: t.fluctuation = static_cast<Fluctuation>(v.value); break;
  }
  return t;
}

void validate_signal(const SignalSeries& s) {
  if (s.values.size() < 2) {
    throw InvalidSignalError("signal '" + s.id + "' has " + std::to_string(s.values.size()) +
                             " samples; at least 2 are required");
  }
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i])) {
      throw InvalidSignalError("signal '" + s.id + "' has a non-finite value at index " +
                               std::to_string(i));
    }
  }
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (const char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::size_t Caption::word_count() const { return count_words(text); }

}  // namespace clasp::dataset
