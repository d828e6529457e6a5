#include "doctest.h"
#include "swinoir/ops.hpp"
#include "testutil.hpp"

using namespace swinoir;
using namespace swinoir::testing;

// Every differentiable op: analytic gradient vs central finite differences,
// relative error < 1e-4 on inputs drawn from [-1, 1].
namespace {

constexpr double kTol = 1e-4;

// Weighted scalar loss so all output elements contribute distinctly.
Tensor probe_loss(const Tensor& out, const Tensor& weights) {
  return sum(mul(out, weights));
}

}  // namespace

TEST_CASE("gradients: elementwise ops") {
  Rng rng(101);
  Tensor x = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor y = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 4}, rng);

  CHECK(max_grad_error([&] { return probe_loss(add(x, y), w); }, {x, y}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(sub(x, y), w); }, {x, y}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(mul(x, y), w); }, {x, y}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(scale(x, -1.7), w); }, {x}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(add_scalar(x, 0.3), w); }, {x}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(square(x), w); }, {x}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(gelu(x), w); }, {x}) < kTol);
  CHECK(max_grad_error([&] { return mean(square(x)); }, {x}) < kTol);

  // abs away from the kink; sqrt on shifted-positive input.
  Tensor far = random_tensor({3, 4}, rng, 0.5, 1.5, true);
  CHECK(max_grad_error([&] { return probe_loss(abs(far), w); }, {far}) < kTol);
  CHECK(max_grad_error([&] { return probe_loss(sqrt(far), w); }, {far}) < kTol);
}

TEST_CASE("gradients: bias broadcast add") {
  Rng rng(102);
  Tensor x = random_tensor({4, 3}, rng, -1, 1, true);
  Tensor b = random_tensor({3}, rng, -1, 1, true);
  Tensor w = random_tensor({4, 3}, rng);
  CHECK(max_grad_error([&] { return probe_loss(add(x, b), w); }, {x, b}) < kTol);
}

TEST_CASE("gradients: matmul with and without batch broadcast") {
  Rng rng(103);
  Tensor a = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor b = random_tensor({4, 2}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(matmul(a, b), w); }, {a, b}) < kTol);

  Tensor ab = random_tensor({2, 3, 4}, rng, -1, 1, true);
  Tensor wb = random_tensor({2, 3, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(matmul(ab, b), wb); }, {ab, b}) < kTol);

  Tensor bb = random_tensor({2, 4, 2}, rng, -1, 1, true);
  CHECK(max_grad_error([&] { return probe_loss(matmul(ab, bb), wb); }, {ab, bb}) < kTol);
}

TEST_CASE("gradients: transpose, softmax, layer norm") {
  Rng rng(104);
  Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
  Tensor w = random_tensor({2, 4, 3}, rng);
  CHECK(max_grad_error([&] { return probe_loss(transpose_last2(x), w); }, {x}) < kTol);

  Tensor ws = random_tensor({2, 3, 4}, rng);
  CHECK(max_grad_error([&] { return probe_loss(softmax_lastdim(x), ws); }, {x}) < kTol);

  Tensor gamma = random_tensor({4}, rng, 0.5, 1.5, true);
  Tensor beta = random_tensor({4}, rng, -0.5, 0.5, true);
  CHECK(max_grad_error(
            [&] { return probe_loss(layer_norm(x, gamma, beta, 1e-5), ws); },
            {x, gamma, beta}) < kTol);
}

TEST_CASE("gradients: conv2d") {
  Rng rng(105);
  Tensor x = random_tensor({4, 5, 2}, rng, -1, 1, true);
  Tensor kernel = random_tensor({3, 3, 2, 3}, rng, -1, 1, true);
  Tensor bias = random_tensor({3}, rng, -1, 1, true);
  Tensor w = random_tensor({4, 5, 3}, rng);
  CHECK(max_grad_error([&] { return probe_loss(conv2d(x, kernel, bias), w); },
                       {x, kernel, bias}) < kTol);

  Tensor k1 = random_tensor({1, 1, 2, 2}, rng, -1, 1, true);
  Tensor b1 = random_tensor({2}, rng, -1, 1, true);
  Tensor w1 = random_tensor({4, 5, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(conv2d(x, k1, b1), w1); },
                       {x, k1, b1}) < kTol);
}

TEST_CASE("gradients: rearrangement ops") {
  Rng rng(106);
  Tensor x = random_tensor({2, 2, 8}, rng, -1, 1, true);
  Tensor w = random_tensor({4, 4, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(pixel_shuffle(x, 2), w); }, {x}) < kTol);

  Tensor img = random_tensor({4, 4, 2}, rng, -1, 1, true);
  Tensor wu = random_tensor({2, 2, 8}, rng);
  CHECK(max_grad_error([&] { return probe_loss(pixel_unshuffle(img, 2), wu); }, {img}) < kTol);

  Tensor wp = random_tensor({4, 4, 2}, rng);
  CHECK(max_grad_error(
            [&] {
              return probe_loss(window_merge(window_partition(img, 2), 2, 4, 4), wp);
            },
            {img}) < kTol);

  Tensor wr = random_tensor({16, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(reshape(img, {16, 2}), wr); }, {img}) < kTol);
}

TEST_CASE("gradients: slice, concat, bias table lookup") {
  Rng rng(107);
  Tensor x = random_tensor({3, 6}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 2}, rng);
  CHECK(max_grad_error([&] { return probe_loss(slice_lastdim(x, 1, 2), w); }, {x}) < kTol);

  Tensor a = random_tensor({3, 2}, rng, -1, 1, true);
  Tensor b = random_tensor({3, 3}, rng, -1, 1, true);
  Tensor wc = random_tensor({3, 5}, rng);
  CHECK(max_grad_error([&] { return probe_loss(concat_lastdim({a, b}), wc); }, {a, b}) < kTol);

  // Reusing a tensor twice on the tape accumulates both contributions.
  Tensor wd = random_tensor({3, 4}, rng);
  CHECK(max_grad_error([&] { return probe_loss(concat_lastdim({a, a}), wd); }, {a}) < kTol);

  const int window = 3, span = 2 * window - 1;
  Tensor table = random_tensor({span * span, 2}, rng, -1, 1, true);
  Tensor wt = random_tensor({9, 9}, rng);
  CHECK(max_grad_error(
            [&] { return probe_loss(relative_position_bias(table, window, 1), wt); },
            {table}) < kTol);
}
