#include <random>

#include "doctest.h"
#include "grad_cases.hpp"
#include "oracles.hpp"

#include "clasp/numerics/adam.hpp"
#include "clasp/numerics/kernels.hpp"

using namespace clasp;
using namespace clasp::numerics;

namespace {

std::vector<double> as_double(std::span<const double> s) { return {s.begin(), s.end()}; }

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return v;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<float>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6.0f);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
}

TEST_CASE("matmul against a triple loop") {
  std::mt19937_64 rng(1);
  const std::size_t m = 7, k = 19, n = 5;
  Tape<double> tape;
  const auto a = random_vec<double>(m * k, rng);
  const auto b = random_vec<double>(k * n, rng);
  auto c = matmul(tape.constant(Tensor64({m, k}, a)), tape.constant(Tensor64({k, n}, b)));
  const auto expect = oracle::matmul(a, b, m, k, n);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(c.value()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  CHECK_THROWS_AS(matmul(tape.constant(Tensor64({m, k})), tape.constant(Tensor64({m, k}))), ShapeError);
}

TEST_CASE("conv1d against direct correlation") {
  std::mt19937_64 rng(2);
  const std::size_t n = 2, cin = 3, len = 29, cout = 4, kw = 7;
  for (const auto& [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {2, 3}, {3, 1}}) {
    Tape<double> tape;
    const auto x = random_vec<double>(n * cin * len, rng);
    const auto w = random_vec<double>(cout * cin * kw, rng);
    const auto b = random_vec<double>(cout, rng);
    auto y = conv1d(tape.constant(Tensor64({n, cin, len}, x)), tape.constant(Tensor64({cout, cin, kw}, w)),
                    tape.constant(Tensor64({cout}, b)), stride, pad);
    const auto expect = oracle::conv1d(x, w, b, n, cin, len, cout, kw, stride, pad);
    REQUIRE(y.value().size() == expect.size());
    CHECK(y.shape()[2] == (len + 2 * pad - kw) / stride + 1);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(y.value()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv1d output length 2048 -> 1024") {
  kernels::Conv1dGeometry g;
  g.length = 2048;
  g.kernel = 7;
  g.stride = 2;
  g.padding = 3;
  CHECK(g.out_length() == 1024);
}

TEST_CASE("log_softmax rows exponentiate to one and match the direct formula") {
  std::mt19937_64 rng(3);
  Tape<double> tape;
  const auto x = random_vec<double>(4 * 6, rng);
  auto y = log_softmax_rows(tape.constant(Tensor64({4, 6}, x)));
  for (std::size_t i = 0; i < 4; ++i) {
    double denom = 0.0, total = 0.0;
    for (std::size_t j = 0; j < 6; ++j) denom += std::exp(x[i * 6 + j]);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(y.value().at(i, j) == doctest::Approx(x[i * 6 + j] - std::log(denom)).epsilon(1e-12));
      total += std::exp(y.value().at(i, j));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  // large logits stay finite
  auto big = log_softmax_rows(tape.constant(Tensor64({1, 2}, {1000.0, 0.0})));
  CHECK(big.value()[0] == doctest::Approx(0.0));
  CHECK(big.value()[1] == doctest::Approx(-1000.0));
}

TEST_CASE("l2_normalize_rows leaves a zero row at zero") {
  Tape<double> tape;
  const auto before = zero_norm_row_count();
  auto y = l2_normalize_rows(tape.constant(Tensor64({2, 2}, {3.0, 4.0, 0.0, 0.0})));
  CHECK(y.value()[0] == doctest::Approx(0.6));
  CHECK(y.value()[1] == doctest::Approx(0.8));
  CHECK(y.value()[2] == 0.0);
  CHECK(zero_norm_row_count() == before + 1);
}

TEST_CASE("non-finite values are rejected") {
  Tape<double> tape;
  CHECK_THROWS_AS(exp(tape.constant(Tensor64::scalar(1000.0))), NumericalError);
}

TEST_CASE("embedding_lookup bounds") {
  Tape<double> tape;
  auto table = tape.constant(Tensor64({3, 2}, {1, 2, 3, 4, 5, 6}));
  const std::vector<std::size_t> ok = {2, 0};
  auto rows = embedding_lookup(table, std::span<const std::size_t>(ok));
  CHECK(as_double(rows.value().data()) == std::vector<double>{5, 6, 1, 2});
  const std::vector<std::size_t> bad = {3};
  CHECK_THROWS(embedding_lookup(table, std::span<const std::size_t>(bad)));
}

TEST_CASE("gradients match central differences for every operator") {
  for (const std::uint64_t seed : {11u, 12u, 13u}) {
    for (const auto& c : gradcases::operator_cases(seed)) {
      CAPTURE(c.name);
      const auto report = finite_diff_check(c.build, c.params, 1e-6);
      CAPTURE(report.worst);
      CHECK(report.max_rel_error < 1e-4);
      CHECK(report.coordinates > 0);
    }
  }
}

TEST_CASE("relu kink is reported, not failed") {
  ParamMap<double> p{{"a", Tensor64({1, 3}, {0.0, 0.5, -0.5})}};
  const auto report = finite_diff_check(
      [](Tape<double>&, const std::map<std::string, Var<double>>& v) { return gradcases::probe(relu(v.at("a")), 1); },
      p, 1e-6);
  CHECK(report.kinks == 1);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("shared subexpressions accumulate gradient") {
  Tape<double> tape;
  auto a = tape.parameter("a", Tensor64::scalar(3.0));
  auto loss = add(a, add(a, a));
  const auto g = tape.backward(loss);
  CHECK(g.at("a")[0] == doctest::Approx(3.0));
}

TEST_CASE("backward needs a scalar") {
  Tape<double> tape;
  auto a = tape.parameter("a", Tensor64({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(a), ContractError);
}

TEST_CASE("adam matches a hand-rolled update") {
  ParamMap<double> params{{"w", Tensor64({2}, {1.0, -2.0})}};
  AdamState<double> st;
  st.lr = 0.1;
  const std::vector<std::vector<double>> grads = {{0.5, -1.0}, {0.2, 0.3}, {-0.4, 0.0}};
  std::vector<double> w = {1.0, -2.0}, m(2, 0.0), v(2, 0.0);
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    adam_step(params, ParamMap<double>{{"w", Tensor64({2}, grads[t - 1])}}, st);
    for (std::size_t i = 0; i < 2; ++i) {
      const double g = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      w[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(params.at("w")[i] == doctest::Approx(w[i]).epsilon(1e-12));
    }
  }
  // first step moves each coordinate by lr regardless of gradient scale
  CHECK(st.step == 3);
  CHECK_THROWS_AS(adam_step(params, ParamMap<double>{{"w", Tensor64({3})}}, st), ShapeError);
  CHECK_THROWS_AS(adam_step(params, ParamMap<double>{{"x", Tensor64({2})}}, st), ContractError);
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(5);
  for (const bool ta : {false, true}) {
    for (const bool tb : {false, true}) {
      const std::size_t m = 37, n = 53, k = 41;
      const auto a = random_vec<float>(m * k, rng);
      const auto b = random_vec<float>(k * n, rng);
      std::vector<float> cs(m * n), cp(m * n);
      kernels::serial::gemm(ta, tb, m, n, k, a.data(), b.data(), cs.data());
      kernels::parallel::gemm(ta, tb, m, n, k, a.data(), b.data(), cp.data());
      for (std::size_t i = 0; i < cs.size(); ++i) CHECK(cp[i] == doctest::Approx(cs[i]).epsilon(1e-5));
    }
  }
  kernels::Conv1dGeometry g;
  g.batch = 3;
  g.in_channels = 4;
  g.out_channels = 8;
  g.length = 64;
  g.kernel = 7;
  g.stride = 2;
  g.padding = 3;
  const std::size_t lout = g.out_length();
  const auto x = random_vec<float>(g.batch * g.in_channels * g.length, rng);
  const auto w = random_vec<float>(g.out_channels * g.patch(), rng);
  const auto b = random_vec<float>(g.out_channels, rng);
  const auto dy = random_vec<float>(g.batch * g.out_channels * lout, rng);
  std::vector<float> ys(dy.size()), yp(dy.size());
  kernels::serial::conv1d_forward(g, x.data(), w.data(), b.data(), ys.data());
  kernels::parallel::Conv1dWorkspace<float> ws;
  kernels::parallel::conv1d_forward(g, x.data(), w.data(), b.data(), yp.data(), &ws);
  for (std::size_t i = 0; i < ys.size(); ++i) CHECK(yp[i] == doctest::Approx(ys[i]).epsilon(1e-5));
  std::vector<float> dxs(x.size()), dxp(x.size()), dws(w.size()), dwp(w.size()), dbs(b.size()), dbp(b.size());
  kernels::serial::conv1d_backward(g, x.data(), w.data(), dy.data(), dxs.data(), dws.data(), dbs.data());
  kernels::parallel::conv1d_backward(g, x.data(), w.data(), dy.data(), dxp.data(), dwp.data(), dbp.data(), &ws);
  for (std::size_t i = 0; i < dxs.size(); ++i) CHECK(dxp[i] == doctest::Approx(dxs[i]).epsilon(1e-4));
  for (std::size_t i = 0; i < dws.size(); ++i) CHECK(dwp[i] == doctest::Approx(dws[i]).epsilon(1e-4));
  for (std::size_t i = 0; i < dbs.size(); ++i) CHECK(dbp[i] == doctest::Approx(dbs[i]).epsilon(1e-4));

  const auto mat = random_vec<float>(100 * 16, rng);
  const auto q = random_vec<float>(16, rng);
  std::vector<float> ss(100), sp(100);
  kernels::serial::row_dots(100, 16, mat.data(), q.data(), ss.data());
  kernels::parallel::row_dots(100, 16, mat.data(), q.data(), sp.data());
  for (std::size_t i = 0; i < ss.size(); ++i) CHECK(sp[i] == doctest::Approx(ss[i]).epsilon(1e-5));
}

TEST_CASE("parallel gemm is deterministic") {
  std::mt19937_64 rng(6);
  const std::size_t m = 64, n = 96, k = 128;
  const auto a = random_vec<float>(m * k, rng);
  const auto b = random_vec<float>(k * n, rng);
  std::vector<float> c1(m * n), c2(m * n);
  kernels::parallel::gemm(false, false, m, n, k, a.data(), b.data(), c1.data());
  kernels::parallel::gemm(false, false, m, n, k, a.data(), b.data(), c2.data());
  CHECK(c1 == c2);
}

}
