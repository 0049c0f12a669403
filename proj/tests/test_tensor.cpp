#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>

#include "pcc/checkpoint.hpp"
#include "pcc/tensor.hpp"
#include "test_util.hpp"

using namespace pcc;
using pcc::test::random_values;

TEST_CASE("relu forward") {
  Tensor x = Tensor::constant({3}, {-1, 0, 2});
  Tensor y = relu(x);
  CHECK(y.values()[0] == 0);
  CHECK(y.values()[1] == 0);
  CHECK(y.values()[2] == 2);
}

TEST_CASE("max over axis 0 with indices") {
  Tensor x = Tensor::constant({2, 2}, {1, 5, 3, 2});
  auto r = max_axis(x, 0);
  CHECK(r.values.shape() == Shape{2});
  CHECK(r.values.values()[0] == 3);
  CHECK(r.values.values()[1] == 5);
  CHECK(r.indices[0] == 1);
  CHECK(r.indices[1] == 0);
}

TEST_CASE("max ties break to the lowest index") {
  Tensor x = Tensor::constant({3, 1}, {7, 7, 7});
  auto r = max_axis(x, 0);
  CHECK(r.indices[0] == 0);
}

TEST_CASE("matmul against a naive triple loop") {
  Rng rng(11);
  const auto a = random_values(rng, 6);
  const auto b = random_values(rng, 12);
  Tensor ta = Tensor::constant({2, 3}, a);
  Tensor tb = Tensor::constant({3, 4}, b);
  Tensor c = matmul(ta, tb);
  REQUIRE(c.shape() == Shape{2, 4});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) {
      real expect = 0;
      for (int k = 0; k < 3; ++k) expect += a[i * 3 + k] * b[k * 4 + j];
      CHECK(c.values()[i * 4 + j] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("matmul shape mismatch is a contract violation") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 2});
  CHECK_THROWS_AS(matmul(a, b), ContractViolation);
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::param({2}, {1, 2});
  Tensor loss = mul(mean_axis(square(x), 0), 2.0);  // sum = 2 * mean
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward of mean(relu(x)) uses subgradient 0 at negatives") {
  Tensor x = Tensor::param({2}, {-1, 3});
  Tensor loss = mean_axis(relu(x), 0);
  backward(loss);
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == doctest::Approx(0.5));
}

TEST_CASE("backward requires a scalar") {
  Tensor x = Tensor::param({2}, {1, 2});
  Tensor y = square(x);
  CHECK_THROWS_AS(backward(y), ContractViolation);
}

TEST_CASE("gradient accumulates through repeated operands and calls") {
  Tensor x = Tensor::param({1}, {3});
  Tensor y = mean_axis(add(x, x), 0);
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(2.0));  // both branches accumulate
  backward(y);                                 // second sweep adds again
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("unreachable parameters keep zero gradients") {
  Tensor used = Tensor::param({1}, {1});
  Tensor unused = Tensor::param({3}, {1, 2, 3});
  backward(mean_axis(square(used), 0));
  for (real g : unused.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward linearity on random small graphs") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto base = random_values(rng, 6);
    const real a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    auto grad_of = [&](bool combined) {
      Tensor x = Tensor::param({2, 3}, base);
      Tensor f = mean_axis(mean_axis(square(x), 1), 0);
      Tensor g = mean_axis(max_axis(relu(x), 1).values, 0);
      Tensor loss;
      if (combined) {
        loss = add(mul(f, a), mul(g, b));
        backward(loss);
        return std::vector<real>(x.grad().begin(), x.grad().end());
      }
      backward(f);
      std::vector<real> gf(x.grad().begin(), x.grad().end());
      x.zero_grad();
      backward(g);
      std::vector<real> out(6);
      for (int i = 0; i < 6; ++i) out[i] = a * gf[i] + b * x.grad()[i];
      return out;
    };
    const auto combined = grad_of(true);
    const auto separate = grad_of(false);
    for (int i = 0; i < 6; ++i)
      CHECK(combined[i] == doctest::Approx(separate[i]).epsilon(1e-12));
  }
}

TEST_CASE("max backward routes everything to the argmax element") {
  Tensor x = Tensor::param({3, 1}, {1, 4, 4});
  auto r = max_axis(x, 0);
  backward(mean_axis(r.values, 0));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);  // tie resolved to the lower index
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("gather and tile route gradients through the selection") {
  Tensor x = Tensor::param({3, 2}, {1, 2, 3, 4, 5, 6});
  const std::vector<std::int64_t> rows{2, 0, 2};
  Tensor g = gather_rows(x, rows);
  CHECK(g.shape() == Shape{3, 2});
  CHECK(g.values()[0] == 5);
  Tensor t = tile_rows(x, 2);
  CHECK(t.shape() == Shape{6, 2});
  // interleaved layout: row i lands at 2i and 2i+1
  CHECK(t.values()[2] == 1);
  CHECK(t.values()[4] == 3);

  Tensor loss = mul(mean_axis(mean_axis(g, 1), 0), 6.0);  // sum of gathered
  backward(loss);
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[4] == 2.0);  // row 2 gathered twice
  x.zero_grad();
  backward(mul(mean_axis(mean_axis(t, 1), 1 - 1), 12.0));  // sum of tiled
  for (real v : x.grad()) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("gather with out-of-range index throws") {
  Tensor x = Tensor::zeros({3, 2});
  const std::vector<std::int64_t> rows{3};
  CHECK_THROWS_AS(gather_rows(x, rows), ContractViolation);
}

TEST_CASE("sqrt of a negative input is rejected") {
  Tensor x = Tensor::constant({1}, {-0.5});
  CHECK_THROWS_AS(sqrt_elem(x), ContractViolation);
}

TEST_CASE("non-finite op output raises a numeric fault naming the op") {
  Tensor x = Tensor::constant({1}, {1e308});
  try {
    Tensor y = mul(x, 1e10);
    FAIL("expected a numeric fault");
  } catch (const NumericFault& f) {
    CHECK(f.op_kind == "mul-scalar");
    CHECK(f.node_id >= 0);
    CHECK(std::string(f.what()).find("mul-scalar") != std::string::npos);
  }
}

TEST_CASE("scalar broadcast add") {
  Tensor x = Tensor::constant({3}, {1, 2, 3});
  Tensor y = add(x, -1.0);
  CHECK(y.values()[0] == 0);
  CHECK(y.values()[2] == 2);
}

TEST_CASE("add shape mismatch beyond scalar broadcast throws") {
  Tensor a = Tensor::zeros({2, 2});
  Tensor b = Tensor::zeros({4});
  CHECK_THROWS_AS(add(a, b), ContractViolation);
}

TEST_CASE("concat-last-axis stacks columns") {
  Tensor a = Tensor::constant({2, 1}, {1, 2});
  Tensor b = Tensor::constant({2, 2}, {3, 4, 5, 6});
  Tensor c = concat_last({a, b});
  REQUIRE(c.shape() == Shape{2, 3});
  CHECK(c.values()[0] == 1);
  CHECK(c.values()[1] == 3);
  CHECK(c.values()[5] == 6);
}

TEST_CASE("forward determinism: same seed, bit-identical values") {
  auto run = [] {
    Rng rng(99);
    Tensor x = Tensor::param({4, 4}, random_values(rng, 16));
    Tensor y = Tensor::constant({4, 4}, random_values(rng, 16));
    Tensor z = matmul(relu(x), y);
    return std::vector<real>(z.values().begin(), z.values().end());
  };
  const auto a = run();
  const auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(real)) == 0);
}

TEST_CASE("grad_check validates a composite function") {
  Rng rng(3);
  Tensor x = Tensor::param({3, 2}, random_values(rng, 6));
  Tensor w = Tensor::param({2, 2}, random_values(rng, 4));
  auto eval = [&] {
    Tensor h = relu(matmul(x, w));
    return mean_axis(mean_axis(square(h), 1), 0);
  };
  std::vector<Tensor> params{x, w};
  auto report = grad_check(eval, params, 1e-5, 1e-4);
  CHECK(report.pass());
  CHECK(report.checked == 10);
}

TEST_CASE("grad_check on a constant function sees zero both ways") {
  Tensor x = Tensor::param({2}, {1, 2});
  auto eval = [] { return Tensor::scalar(4.0); };
  std::vector<Tensor> params{x};
  auto report = grad_check(eval, params, 1e-5, 1e-4);
  CHECK(report.pass());
  CHECK(report.max_rel_err == 0.0);
}

TEST_CASE("grad_check flags a non-deterministic function") {
  Tensor x = Tensor::param({1}, {1});
  int calls = 0;
  auto eval = [&calls] {
    return Tensor::scalar(static_cast<real>(++calls));
  };
  std::vector<Tensor> params{x};
  CHECK_THROWS_AS(grad_check(eval, params, 1e-5, 1e-4), NumericFault);
}

TEST_CASE("no-grad mode detaches outputs") {
  Tensor x = Tensor::param({2}, {1, 2});
  NoGradGuard ng;
  Tensor y = square(x);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("record container round-trips tensors, text and u64 payloads") {
  const std::string dir = pcc::test::scratch_dir("records");
  RecordFile f;
  Rng rng(1);
  const auto data = random_values(rng, 12);
  f.put("gen/w", {3, 4}, data);
  f.put_scalar("state/step", 42);
  f.put_text("state/config", "alpha = 1\nbeta = two\n");
  f.put_u64("state/rng", {1, 2, 0xffffffffffffffffull});
  const std::string path = dir + "/test.pck";
  f.save(path);

  const RecordFile g = RecordFile::load(path);
  CHECK(g.get("gen/w").first == Shape{3, 4});
  CHECK(g.get("gen/w").second == data);
  CHECK(g.get_scalar("state/step") == 42);
  CHECK(g.get_text("state/config") == "alpha = 1\nbeta = two\n");
  CHECK(g.get_u64("state/rng")[2] == 0xffffffffffffffffull);
}

TEST_CASE("truncated record file fails cleanly") {
  const std::string dir = pcc::test::scratch_dir("records_trunc");
  RecordFile f;
  f.put("w", {4}, {1, 2, 3, 4});
  const std::string path = dir + "/trunc.pck";
  f.save(path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());
  }
  pcc::write_file_atomic(path, bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(RecordFile::load(path), RestoreError);
}
