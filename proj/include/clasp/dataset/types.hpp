#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace clasp::dataset {

enum class Trend { flat, linear_inc, linear_dec, quadratic, exp_inc, exp_dec, neg_cubic };
enum class Periodic { none, sine, square, sawtooth, triangle };
enum class Fluctuation { none, small_noise, large_noise, pos_spikes, neg_spikes };

enum class Category { trend, periodic, fluctuation };

inline constexpr std::array<Trend, 7> kAllTrends = {
    Trend::flat,    Trend::linear_inc, Trend::linear_dec, Trend::quadratic,
    Trend::exp_inc, Trend::exp_dec,    Trend::neg_cubic};
inline constexpr std::array<Periodic, 5> kAllPeriodics = {
    Periodic::none, Periodic::sine, Periodic::square, Periodic::sawtooth, Periodic::triangle};
inline constexpr std::array<Fluctuation, 5> kAllFluctuations = {
    Fluctuation::none, Fluctuation::small_noise, Fluctuation::large_noise, Fluctuation::pos_spikes,
    Fluctuation::neg_spikes};

struct ClassTriple {
  Trend trend = Trend::flat;
  Periodic periodic = Periodic::none;
  Fluctuation fluctuation = Fluctuation::none;

  friend bool operator==(const ClassTriple&, const ClassTriple&) = default;
};

// Stable identifiers used in files ("linear_inc", "sawtooth", ...).
std::string_view to_string(Trend v);
std::string_view to_string(Periodic v);
std::string_view to_string(Fluctuation v);
std::string_view to_string(Category v);
Trend parse_trend(std::string_view s);
Periodic parse_periodic(std::string_view s);
Fluctuation parse_fluctuation(std::string_view s);

// Human-readable class labels ("linearly increasing", "sawtooth wave", ...).
std::string_view class_label(Trend v);
std::string_view class_label(Periodic v);
std::string_view class_label(Fluctuation v);

// flat / none carry no pattern of their own.
inline bool is_null(Trend v) { return v == Trend::flat; }
inline bool is_null(Periodic v) { return v == Periodic::none; }
inline bool is_null(Fluctuation v) { return v == Fluctuation::none; }

// One class value of one category, e.g. {periodic, sawtooth}.
struct ClassValue {
  Category category = Category::trend;
  int value = 0;

  friend bool operator==(const ClassValue&, const ClassValue&) = default;
  friend auto operator<=>(const ClassValue&, const ClassValue&) = default;
};

std::string_view class_label(const ClassValue& v);
std::string_view class_name(const ClassValue& v);
bool matches(const ClassTriple& labels, const ClassValue& v);
// The triple whose only non-null component is v.
ClassTriple single_component(const ClassValue& v);

struct SignalSeries {
  std::string id;
  std::vector<float> values;

  std::size_t length() const { return values.size(); }
  friend bool operator==(const SignalSeries&, const SignalSeries&) = default;
};

// Throws InvalidSignalError unless length >= 2 and all values are finite.
void validate_signal(const SignalSeries& s);

struct Caption {
  std::string id;
  std::string text;

  std::size_t word_count() const;
  friend bool operator==(const Caption&, const Caption&) = default;
};

std::size_t count_words(std::string_view text);

using GenParams = std::map<std::string, double>;

struct LabeledExample {
  SignalSeries signal;
  Caption caption;
  ClassTriple labels;
  GenParams gen_params;
  int template_id = 0;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> val;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
};

}  // namespace clasp::dataset
