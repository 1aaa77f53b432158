#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "clasp/encoders/encoder.hpp"
#include "clasp/encoders/vocab.hpp"
#include "clasp/numerics/gradcheck.hpp"

using namespace clasp;
using namespace clasp::encoders;
using numerics::Tensor64;

namespace {

std::vector<dataset::Caption> captions(std::initializer_list<const char*> texts) {
  std::vector<dataset::Caption> out;
  for (const char* t : texts) out.push_back({"c", t});
  return out;
}

EncoderConfig tiny_config(std::size_t vocab) {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.embed_dim = 4;
  c.text_hidden = 5;
  c.text_dim = 3;
  c.signal_dim = 3;
  c.channels = {2, 2, 3, 2};
  return c;
}

ParamMap<double> to_double(const ParamMap<float>& p) {
  ParamMap<double> out;
  for (const auto& [k, v] : p) out.emplace(k, v.cast<double>());
  return out;
}

}  // namespace

TEST_SUITE("encoders") {

TEST_CASE("vocab ordering, lookup and round trip") {
  const auto v = build_vocab(captions({"b a c", "a b", "a, D!"}), 1);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "a", "b", "c", "d"});
  CHECK(v.index("a") == 2);
  CHECK(v.index("zzz") == kUnk);
  CHECK(v.token(kPad) == "<pad>");
  CHECK_THROWS_AS(v.token(99), VocabError);
  CHECK(Vocab::deserialize(v.serialize()) == v);
  CHECK(v.serialize().rfind("#clasp-vocab version=1 min_count=1\n", 0) == 0);

  const auto pruned = build_vocab(captions({"b a c", "a b", "a d"}), 2);
  CHECK(pruned.tokens() == std::vector<std::string>{"<pad>", "<unk>", "a", "b"});
  CHECK(pruned.min_count() == 2);

  const auto path = std::filesystem::temp_directory_path() / "clasp_test_vocab.txt";
  v.save(path);
  CHECK(Vocab::load(path) == v);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Vocab::deserialize("#clasp-vocab version=9 min_count=1\n<pad>\n<unk>\n"), VocabError);
}

TEST_CASE("tokenize and detokenize") {
  const auto v = build_vocab(captions({"the signal rises"}), 1);
  const auto seq = tokenize("The signal FALLS.", v);
  CHECK(seq.indices == std::vector<std::size_t>{v.index("the"), v.index("signal"), kUnk});
  CHECK(detokenize(seq, v) == "the signal <unk>");
  CHECK(tokenize("  ...  ", v).indices == std::vector<std::size_t>{kUnk});
  for (const auto i : tokenize("whatever rises", v).indices) CHECK(i < v.size());
}

TEST_CASE("mean pooling: single token equals its row, order does not matter") {
  Tape<float> tape;
  const std::size_t vocab = 6, dim = 3;
  Tensor table({vocab, dim});
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = static_cast<float>(i) * 0.25f - 1.0f;
  auto t = tape.constant(table);
  auto single = pooled_embeddings(t, {TokenSeq{{4}}});
  for (std::size_t j = 0; j < dim; ++j) CHECK(single.value()[j] == table.at(4, j));
  auto a = pooled_embeddings(t, {TokenSeq{{2, 3, 5, 0}}});
  auto b = pooled_embeddings(t, {TokenSeq{{5, 2, 3}}});
  for (std::size_t j = 0; j < dim; ++j) CHECK(a.value()[j] == doctest::Approx(b.value()[j]));
  CHECK_THROWS_AS(pooled_embeddings(t, {TokenSeq{{6}}}), VocabError);
}

TEST_CASE("encode_text is invariant under token permutation") {
  EncoderConfig c;
  c.vocab_size = 20;
  const auto params = init_encoder_params(c, 3);
  std::vector<std::size_t> idx = {2, 5, 7, 7, 11, 19};
  const auto e1 = encode_text(TokenSeq{idx}, params, c);
  std::mt19937_64 rng(1);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto e2 = encode_text(TokenSeq{idx}, params, c);
  CHECK(e1.shape() == numerics::Shape{128});
  for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == doctest::Approx(e2[i]).epsilon(1e-5));
}

TEST_CASE("parameter shapes and init range") {
  EncoderConfig c;
  c.vocab_size = 50;
  const auto shapes = encoder_param_shapes(c);
  std::map<std::string, numerics::Shape> m(shapes.begin(), shapes.end());
  CHECK(m.at("signal.conv0.weight") == numerics::Shape{32, 1, 7});
  CHECK(m.at("signal.conv1.weight") == numerics::Shape{64, 32, 7});
  CHECK(m.at("signal.conv2.weight") == numerics::Shape{128, 64, 7});
  CHECK(m.at("signal.conv3.weight") == numerics::Shape{128, 128, 7});
  CHECK(m.at("signal.dense.weight") == numerics::Shape{128, 128});
  CHECK(m.at("text.embedding") == numerics::Shape{50, 128});
  CHECK(m.at("text.dense0.weight") == numerics::Shape{128, 256});
  CHECK(m.at("text.dense1.weight") == numerics::Shape{256, 128});

  const auto p = init_encoder_params(c, 9);
  CHECK(p == init_encoder_params(c, 9));
  CHECK_FALSE(p == init_encoder_params(c, 10));
  // conv1: fan_in = 32 * 7
  const float bound = 1.0f / std::sqrt(224.0f);
  for (float v : p.at("signal.conv1.weight").data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("signal encoder geometry") {
  EncoderConfig c;
  CHECK(signal_temporal_length(c, 2048, 1) == 1024);
  CHECK(signal_temporal_length(c, 2048, 2) == 512);
  CHECK(signal_temporal_length(c, 2048, 3) == 256);
  CHECK(signal_temporal_length(c, 2048) == 128);

  c.vocab_size = 4;
  const auto params = init_encoder_params(c, 1);
  std::vector<float> v(2048);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.01f * static_cast<float>(i));
  const auto e = encode_signal(prepare_signal({"s", v}), params, c);
  CHECK(e.shape() == numerics::Shape{128});
  CHECK(e.all_finite());

  // 12-point series go through resampling
  std::vector<float> shortv = {1, 3, 2, 5, 4, 6, 5, 7, 6, 8, 7, 9};
  const auto prepared = prepare_signal({"t", shortv});
  CHECK(prepared.length() == kResampleLength);
  CHECK(encode_signal(prepared, params, c).all_finite());
  CHECK_THROWS_AS(encode_signal({"t", shortv}, params, c), InputTooShortError);
}

TEST_CASE("preprocessing") {
  const auto z = preprocess_signal({"s", {1, 2, 3, 4}});
  double mean = 0.0, var = 0.0;
  for (float v : z.values) mean += v;
  mean /= 4.0;
  for (float v : z.values) var += (v - mean) * (v - mean);
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-5));
  // a constant series does not blow up
  for (float v : preprocess_signal({"c", {2, 2, 2}}).values) CHECK(v == 0.0f);
  CHECK_THROWS_AS(preprocess_signal({"e", {}}), InvalidSignalError);

  const auto r = resample_linear({0, 10}, 5);
  CHECK(r == std::vector<float>{0, 2.5f, 5, 7.5f, 10});
  CHECK(resample_linear({1, 2, 3}, 3) == std::vector<float>{1, 2, 3});
}

TEST_CASE("encoders pass the gradient check in double precision") {
  const auto c = tiny_config(7);
  const auto params = to_double(init_encoder_params(c, 4));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor64 x({2, 1, 20});
  for (auto& v : x.data()) v = u(rng);
  const std::vector<TokenSeq> tokens = {TokenSeq{{2, 3, 3}}, TokenSeq{{6, 1}}};

  ParamMap<double> signal_params, text_params;
  for (const auto& [k, v] : params) (k.rfind("signal.", 0) == 0 ? signal_params : text_params).emplace(k, v);

  auto sig = numerics::finite_diff_check(
      [&](Tape<double>& t, const VarMap<double>& p) {
        auto out = signal_encoder(p, t.constant(x), c);
        return numerics::mean_over_axis(numerics::mean_over_axis(out, 1), 0);
      },
      signal_params, 1e-6);
  CAPTURE(sig.worst);
  CHECK(sig.max_rel_error < 1e-4);

  auto txt = numerics::finite_diff_check(
      [&](Tape<double>& t, const VarMap<double>& p) {
        auto out = text_encoder(p, tokens);
        auto w = t.constant(Tensor64({out.value().size(), 1}, {0.3, -0.2, 0.9, 0.1, 0.5, -0.7}));
        return numerics::reshape(numerics::matmul(numerics::reshape(out, {1, out.value().size()}), w), {1});
      },
      text_params, 1e-6);
  CAPTURE(txt.worst);
  CHECK(txt.max_rel_error < 1e-4);
}

}
