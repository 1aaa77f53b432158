#include <algorithm>
#include <array>
#include <cctype>
#include <random>

#include "clasp/dataset/captions.hpp"
#include "clasp/error.hpp"

namespace clasp::dataset {

namespace {

constexpr std::array<int, 6> kTrainTemplates = {0, 1, 2, 3, 4, 5};
constexpr std::array<int, 2> kHeldoutTemplates = {6, 7};

using Pool = std::vector<std::string_view>;

// Verb phrases used by the paraphrase frames.
const Pool& trend_pool(Trend t) {
  static const std::array<Pool, 7> pools = {{
      {"stays flat"},
      {"rises linearly", "increases at a constant rate", "climbs steadily in a straight line"},
      {"falls linearly", "decreases at a constant rate", "declines steadily in a straight line"},
      {"rises quadratically", "grows along a parabolic curve", "increases with a quadratic shape"},
      {"grows exponentially", "rises exponentially", "increases at an exponential rate"},
      {"decays exponentially", "falls exponentially", "decreases at an exponential rate"},
      {"follows a negative cubic curve", "traces an inverted cubic shape",
       "moves like a negative cubic function"},
  }};
  return pools[static_cast<std::size_t>(t)];
}

// Noun phrases without article.
const Pool& periodic_pool(Periodic p) {
  static const std::array<Pool, 5> pools = {{
      {},
      {"sine wave", "sinusoidal oscillation", "smooth sinusoid"},
      {"square wave", "square-shaped pulse train", "rectangular oscillation"},
      {"sawtooth wave", "sawtooth-shaped ramp pattern", "repeating sawtooth ramp"},
      {"triangle wave", "triangular oscillation", "zigzag triangular pattern"},
  }};
  return pools[static_cast<std::size_t>(p)];
}

const Pool& fluctuation_pool(Fluctuation f) {
  static const std::array<Pool, 5> pools = {{
      {},
      {"small noise", "slight random jitter", "a small amount of noise"},
      {"large noise", "heavy random noise", "a large amount of noise"},
      {"positive spikes", "sudden upward spikes", "occasional positive spikes"},
      {"negative spikes", "sudden downward spikes", "occasional negative spikes"},
  }};
  return pools[static_cast<std::size_t>(f)];
}

std::string_view sushi_trend_sentence(Trend t) {
  switch (t) {
    case Trend::flat: return "The signal stays flat over the entire period.";
    case Trend::linear_inc: return "The signal increases linearly over the entire period.";
    case Trend::linear_dec: return "The signal decreases linearly over the entire period.";
    case Trend::quadratic:
      return "The signal rises along a quadratic curve that becomes steeper over time.";
    case Trend::exp_inc: return "The signal increases exponentially, slowly at first and then rapidly.";
    case Trend::exp_dec:
      return "The signal decreases exponentially, dropping rapidly at first and then levelling off.";
    case Trend::neg_cubic:
      return "The signal follows the curve of a negative cubic function, starting with a decline, "
             "rising in the middle and finally resuming the descent.";
  }
  return "";
}

std::string_view sushi_fluctuation_clause(Fluctuation f) {
  switch (f) {
    case Fluctuation::none: return "";
    case Fluctuation::small_noise: return "the signal is covered by a small amount of noise throughout.";
    case Fluctuation::large_noise: return "the signal is covered by a large amount of noise throughout.";
    case Fluctuation::pos_spikes: return "the signal is interrupted sporadically by sudden positive spikes.";
    case Fluctuation::neg_spikes: return "the signal is interrupted sporadically by sudden negative spikes.";
  }
  return "";
}

std::string_view short_trend_verb(Trend t) {
  switch (t) {
    case Trend::flat: return "stays flat";
    case Trend::linear_inc: return "increases linearly";
    case Trend::linear_dec: return "decreases linearly";
    case Trend::quadratic: return "increases quadratically";
    case Trend::exp_inc: return "increases exponentially";
    case Trend::exp_dec: return "decreases exponentially";
    case Trend::neg_cubic: return "drops cubically";
  }
  return "";
}

// Every phrase any template emits for a class, in normalised form.
struct PhraseEntry {
  ClassValue value;
  std::vector<std::string> tokens;
};

const std::vector<PhraseEntry>& phrase_table() {
  static const std::vector<PhraseEntry> table = [] {
    const std::vector<std::pair<ClassValue, std::vector<std::string_view>>> raw = {
        {{Category::trend, static_cast<int>(Trend::flat)}, {"stays flat", "remains flat", "flat"}},
        {{Category::trend, static_cast<int>(Trend::linear_inc)},
         {"increases linearly", "linearly increasing", "rises linearly",
          "increases at a constant rate", "climbs steadily in a straight line"}},
        {{Category::trend, static_cast<int>(Trend::linear_dec)},
         {"decreases linearly", "linearly decreasing", "falls linearly",
          "decreases at a constant rate", "declines steadily in a straight line"}},
        {{Category::trend, static_cast<int>(Trend::quadratic)},
         {"quadratic curve", "increases quadratically", "quadratically increasing",
          "rises quadratically", "grows along a parabolic curve", "increases with a quadratic shape"}},
        {{Category::trend, static_cast<int>(Trend::exp_inc)},
         {"increases exponentially", "exponentially increasing", "grows exponentially",
          "rises exponentially", "increases at an exponential rate"}},
        {{Category::trend, static_cast<int>(Trend::exp_dec)},
         {"decreases exponentially", "exponentially decreasing", "decays exponentially",
          "falls exponentially", "decreases at an exponential rate"}},
        {{Category::trend, static_cast<int>(Trend::neg_cubic)},
         {"negative cubic", "drops cubically", "inverted cubic shape"}},
        {{Category::periodic, static_cast<int>(Periodic::sine)},
         {"sine wave", "sinusoidal oscillation", "smooth sinusoid"}},
        {{Category::periodic, static_cast<int>(Periodic::square)},
         {"square wave", "square shaped pulse train", "rectangular oscillation"}},
        {{Category::periodic, static_cast<int>(Periodic::sawtooth)},
         {"sawtooth wave", "sawtooth shaped ramp pattern", "repeating sawtooth ramp"}},
        {{Category::periodic, static_cast<int>(Periodic::triangle)},
         {"triangle wave", "triangular oscillation", "zigzag triangular pattern"}},
        {{Category::fluctuation, static_cast<int>(Fluctuation::small_noise)},
         {"small noise", "slight random jitter", "small amount of noise"}},
        {{Category::fluctuation, static_cast<int>(Fluctuation::large_noise)},
         {"large noise", "heavy random noise", "large amount of noise"}},
        {{Category::fluctuation, static_cast<int>(Fluctuation::pos_spikes)},
         {"positive spikes", "sudden upward spikes"}},
        {{Category::fluctuation, static_cast<int>(Fluctuation::neg_spikes)},
         {"negative spikes", "sudden downward spikes"}},
    };
    std::vector<PhraseEntry> out;
    for (const auto& [value, phrases] : raw) {
      for (const auto p : phrases) out.push_back({value, normalize_tokens(p)});
    }
    // longest first so the scan prefers the most specific phrase
    std::stable_sort(out.begin(), out.end(), [](const PhraseEntry& a, const PhraseEntry& b) {
      return a.tokens.size() > b.tokens.size();
    });
    return out;
  }();
  return table;
}

std::string join_parts(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size()) ? " and " : ", ";
    out += parts[i];
  }
  return out;
}

std::string_view pick(const Pool& pool, std::mt19937_64& rng) {
  return pool[static_cast<std::size_t>(rng() % pool.size())];
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string render_sushi(const ClassTriple& t) {
  std::vector<std::string> sentences;
  const bool all_null = is_null(t.trend) && is_null(t.periodic) && is_null(t.fluctuation);
  if (!is_null(t.trend) || all_null) sentences.emplace_back(sushi_trend_sentence(t.trend));
  if (!is_null(t.periodic)) {
    sentences.push_back(
        "The signal is showing a periodic pattern that repeats at regular intervals, like a " +
        std::string(class_label(t.periodic)) + ".");
  }
  if (!is_null(t.fluctuation)) {
    const std::string clause(sushi_fluctuation_clause(t.fluctuation));
    sentences.push_back(sentences.empty() ? capitalize(clause) : "Furthermore, " + clause);
  }
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string render_nine_word(const ClassTriple& t) {
  const bool has_t = !is_null(t.trend);
  const bool has_p = !is_null(t.periodic);
  const bool has_f = !is_null(t.fluctuation);
  const std::string tv(short_trend_verb(t.trend));
  const std::string p(class_label(t.periodic));
  const std::string f(class_label(t.fluctuation));
  if (has_t && has_p && has_f) return "Signal " + tv + " with " + p + " and " + f + ".";
  if (has_t && has_p) return "The signal " + tv + " with a " + p + ".";
  if (has_t && has_f) return "The signal " + tv + " with " + f + ".";
  if (has_p && has_f) return "The signal shows a " + p + " with " + f + ".";
  if (has_t) return "The signal " + tv + ".";
  if (has_p) return "The signal shows a " + p + ".";
  if (has_f) return "The signal shows " + f + ".";
  return "The signal stays flat.";
}

std::vector<std::string> label_parts(const ClassTriple& t) {
  std::vector<std::string> parts;
  if (!is_null(t.trend)) parts.emplace_back(class_label(t.trend));
  if (!is_null(t.periodic)) parts.emplace_back(class_label(t.periodic));
  if (!is_null(t.fluctuation)) parts.emplace_back(class_label(t.fluctuation));
  if (parts.empty()) parts.emplace_back(class_label(Trend::flat));
  return parts;
}

std::string render_paraphrase(const ClassTriple& t, int template_id, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // draw in a fixed order so every component's choice is reproducible
  const std::string tv(pick(trend_pool(t.trend), rng));
  const std::string p = is_null(t.periodic) ? "" : std::string(pick(periodic_pool(t.periodic), rng));
  const std::string f =
      is_null(t.fluctuation) ? "" : std::string(pick(fluctuation_pool(t.fluctuation), rng));
  const bool all_null = is_null(t.trend) && is_null(t.periodic) && is_null(t.fluctuation);
  const bool has_t = !is_null(t.trend) || all_null;

  switch (template_id) {
    case 4: {
      std::vector<std::string> s;
      if (has_t) s.push_back(all_null ? "The series remains flat." : "The series " + tv + ".");
      if (!p.empty()) s.push_back("The series repeats periodically like a " + p + ".");
      if (!f.empty()) s.push_back("The data is corrupted with " + f + ".");
      std::string out;
      for (const auto& x : s) out += (out.empty() ? "" : " ") + x;
      return out;
    }
    case 5: {
      std::vector<std::string> parts;
      if (has_t) parts.push_back(tv);
      if (!p.empty()) parts.push_back("oscillates like a " + p);
      if (!f.empty()) parts.push_back("contains " + f);
      return "This time series " + join_parts(parts) + ".";
    }
    case 6: {
      std::vector<std::string> s;
      if (has_t) s.push_back("Overall the measurement " + tv + ".");
      if (!p.empty()) s.push_back("A " + p + " is superimposed on it.");
      if (!f.empty()) s.push_back("Additionally, we see " + f + ".");
      std::string out;
      for (const auto& x : s) out += (out.empty() ? "" : " ") + x;
      return out;
    }
    case 7: {
      std::vector<std::string> parts;
      if (has_t) parts.push_back(tv);
      if (!p.empty()) parts.push_back("follows a " + p);
      if (!f.empty()) parts.push_back("exhibits " + f);
      return "A recording that " + join_parts(parts) + ".";
    }
    default: break;
  }
  throw TemplateError("unknown caption template " + std::to_string(template_id));
}

}  // namespace

std::span<const int> train_templates() { return kTrainTemplates; }
std::span<const int> heldout_templates() { return kHeldoutTemplates; }

bool is_heldout_template(int template_id) {
  return std::find(kHeldoutTemplates.begin(), kHeldoutTemplates.end(), template_id) !=
         kHeldoutTemplates.end();
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || (c < 128 && std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : ch);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Caption render_caption(const ClassTriple& triple, int template_id, std::uint64_t rng_seed,
                       std::string id) {
  Caption c;
  c.id = std::move(id);
  switch (template_id) {
    case kSushiTemplate: c.text = render_sushi(triple); break;
    case kNineWordTemplate: c.text = render_nine_word(triple); break;
    case kLabelSentenceTemplate: c.text = "The signal is " + join_parts(label_parts(triple)) + "."; break;
    case kLabelOnlyTemplate: {
      const auto parts = label_parts(triple);
      for (std::size_t i = 0; i < parts.size(); ++i) c.text += (i ? ", " : "") + parts[i];
      break;
    }
    default: c.text = render_paraphrase(triple, template_id, rng_seed); break;
  }
  return c;
}

std::vector<PhraseHit> find_class_phrases(std::string_view text) {
  const auto tokens = normalize_tokens(text);
  const auto& table = phrase_table();
  std::vector<PhraseHit> hits;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const PhraseEntry* found = nullptr;
    for (const auto& entry : table) {
      const auto& p = entry.tokens;
      if (i + p.size() > tokens.size()) continue;
      if (std::equal(p.begin(), p.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        found = &entry;
        break;
      }
    }
    if (found == nullptr) {
      ++i;
      continue;
    }
    hits.push_back({found->value, i, found->tokens.size()});
    i += found->tokens.size();
  }
  return hits;
}

std::optional<ClassTriple> detect_labels(std::string_view text) {
  std::array<std::optional<int>, 3> seen;
  for (const auto& hit : find_class_phrases(text)) {
    auto& slot = seen[static_cast<std::size_t>(hit.value.category)];
    if (slot && *slot != hit.value.value) return std::nullopt;
    slot = hit.value.value;
  }
  ClassTriple t;
  if (seen[0]) t.trend = static_cast<Trend>(*seen[0]);
  if (seen[1]) t.periodic = static_cast<Periodic>(*seen[1]);
  if (seen[2]) t.fluctuation = static_cast<Fluctuation>(*seen[2]);
  return t;
}

}  // namespace clasp::dataset
