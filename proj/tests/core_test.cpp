#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "acm/core/adam.hpp"
#include "acm/core/autodiff.hpp"
#include "acm/core/checkpoint.hpp"
#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"
#include "acm/core/nn.hpp"
#include "doctest.h"
#include "support/gradcheck.hpp"

using namespace acm;
using namespace acm::core;
using acm::testing::gradient_check;
using acm::testing::random_tensor;

namespace {

// Naive triple loop; the reference every matmul result is compared against.
Tensor triple_loop(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
      c.at(i, j) = acc;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul matches identity, annihilation and the triple-loop oracle") {
  Tape t;
  Var id = t.constant(Tensor::identity(2));
  Var m = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(identical(matmul(id, m).value(), Tensor::matrix(2, 2, {1, 2, 3, 4})));

  Var p = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 0}));
  Var q = t.constant(Tensor::matrix(2, 2, {0, 0, 0, 1}));
  CHECK(identical(matmul(p, q).value(), Tensor::matrix(2, 2, {0, 0, 0, 0})));

  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    CHECK(identical(matmul(t.constant(a), t.constant(b)).value(), triple_loop(a, b)));
  }

  CHECK_THROWS_AS(matmul(t.constant(Tensor({2, 3})), t.constant(Tensor({2, 3}))),
                  DimensionError);
}

TEST_CASE("softmax values, overflow safety and axis handling") {
  Tape t;
  Var s = softmax(t.constant(Tensor::vector({0, 0})));
  CHECK(s.value()[0] == 0.5);
  CHECK(s.value()[1] == 0.5);

  Var big = softmax(t.constant(Tensor::vector({1000, 1000})));
  CHECK(big.value()[0] == 0.5);
  CHECK(big.value()[1] == 0.5);

  // 50-digit evaluation of exp(x)/sum(exp(x)).
  Var r = softmax(t.constant(Tensor::vector({1, 2, 3})));
  CHECK(r.value()[0] == doctest::Approx(0.0900305731703804579980221).epsilon(1e-15));
  CHECK(r.value()[1] == doctest::Approx(0.2447284710547976524729596).epsilon(1e-15));
  CHECK(r.value()[2] == doctest::Approx(0.6652409557748218895290183).epsilon(1e-15));

  Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 9});
  Var cols = softmax(t.constant(m), 0);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(cols.value().at(0, j) + cols.value().at(1, j) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(softmax(t.constant(Tensor({2, 0}))), DimensionError);
}

TEST_CASE("softmax rows sum to one and are shift invariant on random inputs") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Tensor x = random_tensor({4, 7}, rng, 5.0);
    Tensor shifted = x;
    const double c = 100.0 * rng.normal();
    for (double& v : shifted.data()) v += c;
    const Tensor& a = softmax(t.constant(x)).value();
    const Tensor& b = softmax(t.constant(shifted)).value();
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      std::size_t arg_a = 0, arg_b = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        total += a.at(r, j);
        CHECK(a.at(r, j) > 0.0);
        CHECK(std::abs(a.at(r, j) - b.at(r, j)) < 1e-12);
        if (a.at(r, j) > a.at(r, arg_a)) arg_a = j;
        if (b.at(r, j) > b.at(r, arg_b)) arg_b = j;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
      CHECK(arg_a == arg_b);
    }
  }
}

TEST_CASE("cross entropy") {
  Tape t;
  std::vector<std::size_t> zero{0}, one{1}, three{3};
  CHECK(cross_entropy(t.constant(Tensor::vector({0, 0})), zero).item() ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  const double saturated = cross_entropy(t.constant(Tensor::vector({30, -30})), zero).item();
  CHECK(saturated >= 0.0);
  CHECK(saturated < 1e-25);
  CHECK(cross_entropy(t.constant(Tensor::vector({1, 2, 3})), one).item() ==
        doctest::Approx(1.40760596444438030448292).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy(t.constant(Tensor::vector({1, 2, 3})), three), IndexError);
}

TEST_CASE("backward on simple analytic cases") {
  Tensor w = Tensor::matrix(2, 2, {0.3, -1, 2, 5});
  {
    Tape t;
    Var loss = sum(t.parameter(w));
    t.backward(loss);
    for (double g : w.grad()) CHECK(g == 1.0);
  }
  Tensor scalar_w = Tensor::scalar(1.0);
  {
    Tape t;
    Var loss = square(add_const(t.parameter(scalar_w), Tensor::scalar(-3.0)));
    t.backward(loss);
    CHECK(scalar_w.grad()[0] == -4.0);
  }
  {
    Tape t;
    Var x = t.parameter(w);
    CHECK_THROWS_AS(t.backward(x), DimensionError);
  }
}

TEST_CASE("layer norm and gelu") {
  Tape t;
  Tensor gain({3}, 1.0), bias({3}, 0.0);
  Var flat = layer_norm(t.constant(Tensor::matrix(1, 3, {1, 1, 1})), t.constant(gain),
                        t.constant(bias));
  for (double v : flat.value().data()) CHECK(v == 0.0);

  Rng rng(3);
  Tensor g64({16}, 1.0), b64({16}, 0.0);
  Var ln = layer_norm(t.constant(random_tensor({6, 16}, rng, 3.0)), t.constant(g64),
                      t.constant(b64));
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0.0, var = 0.0;
    for (double v : ln.value().row(r)) mean += v;
    mean /= 16.0;
    for (double v : ln.value().row(r)) var += (v - mean) * (v - mean);
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }

  CHECK(kernels::gelu(0.0) == 0.0);
  // erf form, evaluated at 50 digits.
  CHECK(kernels::gelu(2.0) == doctest::Approx(1.954499736103641585599435).epsilon(1e-15));
  CHECK(kernels::gelu(-1.5) == doctest::Approx(-0.1002108019032870990067411).epsilon(1e-14));
}

TEST_CASE("non-finite values abort with a diagnostic") {
  Tape t;
  Var x = t.constant(Tensor::vector({1e300}));
  CHECK_THROWS_AS(scale(x, 1e300), NumericError);
  Tensor nan_param = Tensor::vector({std::nan("")});
  CHECK_THROWS_AS(t.parameter(nan_param), NumericError);
  try {
    square(scale(x, 1e9));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("scale") != std::string::npos);
  }
}

TEST_CASE("gradient check of every differentiable op") {
  Rng rng(2024);
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
  Tensor c = random_tensor({3, 4}, rng), bias = random_tensor({4}, rng);
  Tensor sq = random_tensor({4, 4}, rng), gain = random_tensor({4}, rng);
  Tensor table = random_tensor({6, 3}, rng);
  Tensor weights = random_tensor({4, 5}, rng);
  Tensor coeff = random_tensor({3, 5}, rng);
  const Tensor k = random_tensor({3, 4}, rng);
  std::vector<std::size_t> targets{1, 0, 3};
  std::vector<std::size_t> ids{0, 2, 2, 5, 1};
  std::vector<std::pair<std::size_t, std::size_t>> spans{{0, 2}, {1, 5}, {3, 4}};

  // Weighted sum makes every output element matter to the scalar loss.
  auto weighted = [&](Tape& t, Var y) {
    Tensor w(y.value().shape());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * i);
    return sum(mul(y, t.constant(w)));
  };

  struct Case {
    const char* name;
    std::function<Var(Tape&)> fn;
    std::vector<std::pair<std::string, Tensor*>> params;
  };
  std::vector<Case> cases = {
      {"matmul", [&](Tape& t) { return weighted(t, matmul(t.parameter(a), t.parameter(b))); },
       {{"a", &a}, {"b", &b}}},
      {"matmul_nt",
       [&](Tape& t) { return weighted(t, matmul_nt(t.parameter(a), t.parameter(c))); },
       {{"a", &a}, {"c", &c}}},
      {"add", [&](Tape& t) { return weighted(t, add(t.parameter(a), t.parameter(c))); },
       {{"a", &a}, {"c", &c}}},
      {"add_bias",
       [&](Tape& t) { return weighted(t, add_bias(t.parameter(a), t.parameter(bias))); },
       {{"a", &a}, {"bias", &bias}}},
      {"mul", [&](Tape& t) { return weighted(t, mul(t.parameter(a), t.parameter(c))); },
       {{"a", &a}, {"c", &c}}},
      {"scale/add_const/square",
       [&](Tape& t) { return weighted(t, square(add_const(scale(t.parameter(a), 0.3), k))); },
       {{"a", &a}}},
      {"softmax rows", [&](Tape& t) { return weighted(t, softmax(t.parameter(a))); },
       {{"a", &a}}},
      {"softmax cols", [&](Tape& t) { return weighted(t, softmax(t.parameter(a), 0)); },
       {{"a", &a}}},
      {"causal_softmax", [&](Tape& t) { return weighted(t, causal_softmax(t.parameter(sq))); },
       {{"sq", &sq}}},
      {"log_softmax", [&](Tape& t) { return weighted(t, log_softmax(t.parameter(a))); },
       {{"a", &a}}},
      {"cross_entropy", [&](Tape& t) { return cross_entropy(t.parameter(a), targets); },
       {{"a", &a}}},
      {"layer_norm",
       [&](Tape& t) {
         return weighted(t,
                         layer_norm(t.parameter(a), t.parameter(gain), t.parameter(bias)));
       },
       {{"a", &a}, {"gain", &gain}, {"bias", &bias}}},
      {"gelu", [&](Tape& t) { return weighted(t, gelu(t.parameter(a))); }, {{"a", &a}}},
      {"embedding", [&](Tape& t) { return weighted(t, embedding(t.parameter(table), ids)); },
       {{"table", &table}}},
      {"segment_mean",
       [&](Tape& t) { return weighted(t, segment_mean(t.parameter(table), ids, spans)); },
       {{"table", &table}}},
      {"cumulative_mean", [&](Tape& t) { return weighted(t, cumulative_mean(t.parameter(a))); },
       {{"a", &a}}},
      {"mean_rows", [&](Tape& t) { return weighted(t, mean_rows(t.parameter(a))); },
       {{"a", &a}}},
      {"slice/concat",
       [&](Tape& t) {
         Var x = t.parameter(a);
         std::vector<Var> parts{slice_cols(x, 2, 2), slice_cols(x, 0, 1)};
         return weighted(t, concat_cols(parts));
       },
       {{"a", &a}}},
      {"composed",
       [&](Tape& t) {
         Var h = gelu(matmul(t.parameter(a), t.parameter(b)));
         Var z = layer_norm(mul(h, t.parameter(coeff)), t.constant(Tensor({5}, 1.0)),
                            t.constant(Tensor({5}, 0.0)));
         return cross_entropy(matmul_nt(z, t.parameter(weights)), targets);
       },
       {{"a", &a}, {"b", &b}, {"coeff", &coeff}, {"weights", &weights}}},
  };
  for (auto& cs : cases) {
    CAPTURE(cs.name);
    const auto res = gradient_check(cs.fn, cs.params);
    CAPTURE(res.worst_parameter);
    CHECK(res.checked > 0);
    CHECK(res.max_relative_error < 1e-4);
  }
}

TEST_CASE("multi-head attention gradient check") {
  Rng rng(99);
  ParameterStore store;
  auto w = nn::AttentionWeights::create(store, "attn", 8, 2, rng);
  Tensor x = random_tensor({3, 8}, rng), mem = random_tensor({4, 8}, rng);
  Tensor bias = random_tensor({3, 4}, rng);
  std::vector<std::pair<std::string, Tensor*>> params{{"x", &x}, {"mem", &mem}};
  for (auto& [name, t] : store) params.emplace_back(name, &t);
  auto res = gradient_check(
      [&](Tape& t) {
        Var out = nn::attention(t, w, t.parameter(x), t.parameter(mem), &bias, false);
        return sum(square(out));
      },
      params);
  CHECK(res.max_relative_error < 1e-4);

  Tensor self = random_tensor({4, 8}, rng);
  params = {{"self", &self}};
  res = gradient_check(
      [&](Tape& t) {
        Var s = t.parameter(self);
        return sum(square(nn::attention(t, w, s, s, nullptr, true)));
      },
      params);
  CHECK(res.max_relative_error < 1e-4);
}

TEST_CASE("rng streams are reproducible and splittable") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  Rng parent(7);
  Rng s1 = parent.split(1), s1b = parent.split(1), s2 = parent.split(2);
  CHECK(parent.counter() == 0);
  CHECK(s1.next_u64() == s1b.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += parent.uniform();
  CHECK(mean / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("same seed gives bit-identical parameters after training steps") {
  auto train = [](std::uint64_t seed) {
    Rng rng(seed);
    ParameterStore store;
    auto lin = nn::Linear::create(store, "lin", 4, 3, rng);
    Adam opt(store, {});
    Tensor x = random_tensor({5, 4}, rng);
    std::vector<std::size_t> y{0, 1, 2, 1, 0};
    for (int step = 0; step < 20; ++step) {
      Tape t;
      t.backward(cross_entropy(lin(t, t.constant(x)), y));
      opt.step();
    }
    return store.snapshot();
  };
  auto p1 = train(5), p2 = train(5), p3 = train(6);
  for (auto& [name, t] : p1) {
    CHECK(identical(t, p2.at(name)));
    CHECK_FALSE(identical(t, p3.at(name)));
  }
}

TEST_CASE("adam first step moves each weight by the learning rate against the gradient") {
  ParameterStore store;
  Tensor& w = store.add("w", Tensor::vector({1.0, -2.0}));
  Adam opt(store, {.learning_rate = 0.1});
  w.grad()[0] = 4.0;
  w.grad()[1] = -0.5;
  opt.step();
  CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(w[1] == doctest::Approx(-1.9).epsilon(1e-7));
  CHECK(w.grad()[0] == 0.0);
}

TEST_CASE("checkpoint round trip is bit exact and the header is validated") {
  Rng rng(1);
  TensorMap tensors;
  tensors.emplace("embed", random_tensor({5, 3}, rng));
  tensors.emplace("ünïcode/name", random_tensor({2}, rng));
  put_meta(tensors, "d_model", 64);
  std::stringstream buf;
  write_checkpoint(buf, tensors);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "ACMT");
  CHECK(static_cast<unsigned char>(bytes[4]) == kCheckpointVersion);

  TensorMap back = read_checkpoint(buf);
  REQUIRE(back.size() == tensors.size());
  for (auto& [name, t] : tensors) CHECK(identical(t, back.at(name)));
  CHECK(get_meta(back, "d_model") == 64.0);
  CHECK_THROWS_AS(get_meta(back, "missing"), DataError);

  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bad_magic(bad);
  CHECK_THROWS_AS(read_checkpoint(bad_magic), DataError);
  bad = bytes;
  bad[4] = 9;
  std::stringstream bad_version(bad);
  CHECK_THROWS_AS(read_checkpoint(bad_version), DataError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), DataError);

  const auto path = std::filesystem::temp_directory_path() / "acm_core_test.ckpt";
  save_checkpoint(path, tensors);
  TensorMap from_file = load_checkpoint(path);
  for (auto& [name, t] : tensors) CHECK(identical(t, from_file.at(name)));
  std::filesystem::remove(path);
}
