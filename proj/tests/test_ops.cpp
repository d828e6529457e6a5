#include <cmath>

#include "doctest.h"
#include "swinoir/ops.hpp"
#include "testutil.hpp"

using namespace swinoir;
using namespace swinoir::testing;

TEST_CASE("matmul identity and hand-expanded cases") {
  Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::from_data({2, 2}, {3, 4, 5, 6});
  Tensor out = matmul(eye, b);
  for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == b.data()[i]);

  Tensor row = Tensor::from_data({1, 2}, {1, 2});
  Tensor col = Tensor::from_data({2, 1}, {3, 4});
  CHECK(matmul(row, col).item() == 11.0);  // 1*3 + 2*4

  Tensor bad = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(matmul(bad, bad), ShapeError);
}

TEST_CASE("matmul broadcasts batch dimensions from size 1") {
  Rng rng(5);
  Tensor a = random_tensor({4, 2, 3}, rng);
  Tensor b = random_tensor({3, 5}, rng);
  Tensor out = matmul(a, b);
  CHECK(out.shape() == std::vector<int>{4, 2, 5});
  // Each batch equals the slice product.
  for (int bi = 0; bi < 4; ++bi) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 5; ++j) {
        double expect = 0.0;
        for (int k = 0; k < 3; ++k)
          expect += a.data()[(bi * 2 + i) * 3 + k] * b.data()[k * 5 + j];
        CHECK(out.data()[(bi * 2 + i) * 5 + j] == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  // Explicit size-1 batch on the right.
  Tensor b2 = random_tensor({1, 3, 5}, rng);
  CHECK(matmul(a, b2).shape() == std::vector<int>{4, 2, 5});
  Tensor incompatible = random_tensor({3, 3, 5}, rng);
  CHECK_THROWS_AS(matmul(a, incompatible), ShapeError);
}

TEST_CASE("softmax rows sum to one and shift invariance holds") {
  Tensor z = Tensor::from_data({3}, {0, 0, 0});
  Tensor out = softmax_lastdim(z);
  for (double v : out.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // [c, c + ln 2] -> [1/3, 2/3] for any c.
  for (double c : {-100.0, 0.0, 7.5, 1000.0}) {
    Tensor x = Tensor::from_data({2}, {c, c + std::log(2.0)});
    Tensor y = softmax_lastdim(x);
    CHECK(y.data()[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(y.data()[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }

  CHECK(softmax_lastdim(Tensor::from_data({1}, {7})).item() == 1.0);

  Rng rng(17);
  Tensor big = random_tensor({6, 9}, rng, -50, 50);
  Tensor soft = softmax_lastdim(big);
  for (int r = 0; r < 6; ++r) {
    double s = 0.0;
    for (int i = 0; i < 9; ++i) {
      const double v = soft.data()[r * 9 + i];
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("layer_norm normalizes channel slices") {
  Tensor gamma = Tensor::full({3}, 1.0);
  Tensor beta = Tensor::zeros({3});
  Tensor constant = Tensor::from_data({1, 3}, {5, 5, 5});
  Tensor out = layer_norm(constant, gamma, beta, 1e-12);
  for (double v : out.data()) CHECK(std::fabs(v) < 1e-5);

  // mean 2, population std 1 -> [-1, 1]
  Tensor g2 = Tensor::full({2}, 1.0);
  Tensor b2 = Tensor::zeros({2});
  Tensor x = Tensor::from_data({1, 2}, {1, 3});
  Tensor y = layer_norm(x, g2, b2, 1e-12);
  CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y.data()[1] == doctest::Approx(1.0).epsilon(1e-9));

  // gamma = 0 annihilates the input, beta passes through.
  Rng rng(2);
  Tensor any = random_tensor({4, 2}, rng);
  Tensor zero_gamma = Tensor::zeros({2});
  Tensor beta2 = Tensor::full({2}, 2.0);
  Tensor anni = layer_norm(any, zero_gamma, beta2, 1e-6);
  for (double v : anni.data()) CHECK(v == 2.0);

  CHECK_THROWS_AS(layer_norm(any, zero_gamma, beta2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(layer_norm(any, Tensor::zeros({3}), beta2, 1e-6), ShapeError);
}

TEST_CASE("gelu matches the exact erf form") {
  CHECK(gelu(Tensor::scalar(0.0)).item() == 0.0);
  // 1 * Phi(1), Phi the standard normal CDF
  CHECK(gelu(Tensor::scalar(1.0)).item() == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(std::fabs(gelu(Tensor::scalar(10.0)).item() - 10.0) < 1e-9);
  CHECK(std::fabs(gelu(Tensor::scalar(-10.0)).item()) < 1e-9);
}

TEST_CASE("conv2d identity, all-ones and one-by-one kernels") {
  Rng rng(9);
  // Center-tap identity kernel copies the input channel.
  Tensor x = random_tensor({5, 4, 1}, rng);
  Tensor kernel = Tensor::zeros({3, 3, 1, 1});
  kernel.mutable_data()[4] = 1.0;  // (dy=1, dx=1)
  Tensor bias = Tensor::zeros({1});
  Tensor out = conv2d(x, kernel, bias);
  CHECK(max_abs_diff(out.data(), x.data()) == 0.0);

  // All-ones kernel over a constant-1 image: interior 9, corners 4, edges 6.
  Tensor ones_img = Tensor::full({4, 4, 1}, 1.0);
  Tensor ones_kernel = Tensor::full({3, 3, 1, 1}, 1.0);
  Tensor counts = conv2d(ones_img, ones_kernel, bias);
  auto at = [&](int y, int xx) { return counts.data()[(y * 4 + xx)]; };
  CHECK(at(1, 1) == 9.0);
  CHECK(at(0, 0) == 4.0);
  CHECK(at(3, 3) == 4.0);
  CHECK(at(0, 1) == 6.0);

  // 1x1 kernel is a per-pixel scaling.
  Tensor w = Tensor::from_data({1, 1, 1, 1}, {2.5});
  Tensor scaled = conv2d(x, w, bias);
  for (long long i = 0; i < x.numel(); ++i)
    CHECK(scaled.data()[i] == doctest::Approx(2.5 * x.data()[i]).epsilon(1e-15));

  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({3, 3, 2, 1}), bias), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({2, 2, 1, 1}), bias), ShapeError);
}

TEST_CASE("conv2d matches a direct-summation oracle") {
  Rng rng(21);
  const int h = 6, w = 5, cin = 3, cout = 2, k = 3, pad = 1;
  Tensor x = random_tensor({h, w, cin}, rng);
  Tensor kernel = random_tensor({k, k, cin, cout}, rng);
  Tensor bias = random_tensor({cout}, rng);
  Tensor out = conv2d(x, kernel, bias);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int co = 0; co < cout; ++co) {
        double expect = bias.data()[co];
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const int yy = y + dy - pad, xs = xx + dx - pad;
            if (yy < 0 || yy >= h || xs < 0 || xs >= w) continue;
            for (int ci = 0; ci < cin; ++ci) {
              expect += x.data()[(yy * w + xs) * cin + ci] *
                        kernel.data()[((dy * k + dx) * cin + ci) * cout + co];
            }
          }
        CHECK(out.data()[(y * w + xx) * cout + co] ==
              doctest::Approx(expect).epsilon(1e-12));
      }
}

TEST_CASE("pixel_shuffle follows the index formula") {
  // 1x1x4 [a, b, c, d] with r = 2 -> 2x2 grid [[a, b], [c, d]]
  Tensor x = Tensor::from_data({1, 1, 4}, {10, 20, 30, 40});
  Tensor out = pixel_shuffle(x, 2);
  CHECK(out.shape() == std::vector<int>{2, 2, 1});
  CHECK(out.data()[0] == 10.0);
  CHECK(out.data()[1] == 20.0);
  CHECK(out.data()[2] == 30.0);
  CHECK(out.data()[3] == 40.0);

  Rng rng(4);
  Tensor any = random_tensor({2, 3, 8}, rng);
  Tensor same = pixel_shuffle(any, 1);
  CHECK(max_abs_diff(same.data(), any.data()) == 0.0);

  // Bitwise round trip.
  Tensor round = pixel_unshuffle(pixel_shuffle(any, 2), 2);
  for (long long i = 0; i < any.numel(); ++i) CHECK(round.data()[i] == any.data()[i]);

  CHECK_THROWS_AS(pixel_shuffle(random_tensor({2, 2, 6}, rng), 2), ShapeError);
}

TEST_CASE("pixel shuffle round trip over random shapes") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + static_cast<int>(rng.below(3));
    const int h = 1 + static_cast<int>(rng.below(5));
    const int w = 1 + static_cast<int>(rng.below(5));
    const int c = (1 + static_cast<int>(rng.below(3))) * r * r;
    Tensor x = random_tensor({h, w, c}, rng);
    Tensor shuffled = pixel_shuffle(x, r);
    CHECK(shuffled.shape() == std::vector<int>{h * r, w * r, c / (r * r)});
    Tensor back = pixel_unshuffle(shuffled, r);
    REQUIRE(back.shape() == x.shape());
    for (long long i = 0; i < x.numel(); ++i) CHECK(back.data()[i] == x.data()[i]);
  }
}

TEST_CASE("window partition enumerates windows row-major") {
  // H = W = 4, M = 2: window 0 holds pixels (0,0), (0,1), (1,0), (1,1).
  Tensor x = Tensor::zeros({4, 4, 1});
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) x.mutable_data()[y * 4 + xx] = y * 10 + xx;
  Tensor windows = window_partition(x, 2);
  CHECK(windows.shape() == std::vector<int>{4, 4, 1});
  CHECK(windows.data()[0] == 0.0);   // (0,0)
  CHECK(windows.data()[1] == 1.0);   // (0,1)
  CHECK(windows.data()[2] == 10.0);  // (1,0)
  CHECK(windows.data()[3] == 11.0);  // (1,1)
  // Window 1 starts at (0,2).
  CHECK(windows.data()[4] == 2.0);

  // Single window case: tokens in scan order.
  Tensor small = Tensor::from_data({2, 2, 1}, {1, 2, 3, 4});
  Tensor one = window_partition(small, 2);
  CHECK(one.shape() == std::vector<int>{1, 4, 1});
  for (int i = 0; i < 4; ++i) CHECK(one.data()[i] == i + 1.0);

  CHECK_THROWS_AS(window_partition(Tensor::zeros({3, 4, 1}), 2), ShapeError);
}

TEST_CASE("window merge inverts partition and ordering matters") {
  Rng rng(8);
  Tensor x = random_tensor({8, 8, 3}, rng);
  Tensor merged = window_merge(window_partition(x, 4), 4, 8, 8);
  for (long long i = 0; i < x.numel(); ++i) CHECK(merged.data()[i] == x.data()[i]);

  // Swapping two windows before the merge must not reproduce the input.
  Tensor windows = window_partition(x, 4);
  Tensor perm = Tensor::from_data(windows.shape(),
                                  std::vector<double>(windows.data().begin(),
                                                      windows.data().end()));
  const int block = 16 * 3;
  for (int i = 0; i < block; ++i) {
    std::swap(perm.mutable_data()[i], perm.mutable_data()[block + i]);
  }
  Tensor wrong = window_merge(perm, 4, 8, 8);
  CHECK(max_abs_diff(wrong.data(), x.data()) > 0.0);

  CHECK_THROWS_AS(window_merge(windows, 4, 8, 12), ShapeError);
}

TEST_CASE("relative position bias shares entries across equal offsets") {
  for (int window : {2, 3, 4}) {
    const int span = 2 * window - 1;
    const int tokens = window * window;
    Rng rng(40 + window);
    Tensor table = random_tensor({span * span, 2}, rng);
    for (int head = 0; head < 2; ++head) {
      Tensor bias = relative_position_bias(table, window, head);
      REQUIRE(bias.shape() == std::vector<int>{tokens, tokens});
      for (int i = 0; i < tokens; ++i)
        for (int j = 0; j < tokens; ++j) {
          const int dy = i / window - j / window;
          const int dx = i % window - j % window;
          const int idx = (dy + window - 1) * span + (dx + window - 1);
          CHECK(bias.data()[i * tokens + j] == table.data()[idx * 2 + head]);
          // Every pair at the same offset shares the entry.
          for (int i2 = 0; i2 < tokens; ++i2)
            for (int j2 = 0; j2 < tokens; ++j2) {
              if (i2 / window - j2 / window == dy && i2 % window - j2 % window == dx) {
                CHECK(bias.data()[i * tokens + j] == bias.data()[i2 * tokens + j2]);
              }
            }
        }
    }
  }
}

TEST_CASE("structural ops validate and slice correctly") {
  Rng rng(51);
  Tensor x = random_tensor({2, 6}, rng);
  Tensor sl = slice_lastdim(x, 2, 3);
  CHECK(sl.shape() == std::vector<int>{2, 3});
  CHECK(sl.data()[0] == x.data()[2]);
  CHECK(sl.data()[3] == x.data()[8]);
  CHECK_THROWS_AS(slice_lastdim(x, 4, 3), ShapeError);

  Tensor a = random_tensor({2, 2}, rng);
  Tensor b = random_tensor({2, 3}, rng);
  Tensor cat = concat_lastdim({a, b});
  CHECK(cat.shape() == std::vector<int>{2, 5});
  CHECK(cat.data()[0] == a.data()[0]);
  CHECK(cat.data()[2] == b.data()[0]);
  CHECK(cat.data()[5] == a.data()[2]);
  CHECK_THROWS_AS(concat_lastdim({a, random_tensor({3, 2}, rng)}), ShapeError);

  CHECK_THROWS_AS(reshape(x, {5, 2}), ShapeError);
  CHECK(reshape(x, {12}).shape() == std::vector<int>{12});

  Tensor bias = random_tensor({6}, rng);
  Tensor added = add(x, bias);
  CHECK(added.data()[7] == doctest::Approx(x.data()[7] + bias.data()[1]));
  CHECK_THROWS_AS(add(bias, x), ShapeError);
}

TEST_CASE("shape algebra is a pure function of input shapes") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng.below(4));
    const int q = 1 + static_cast<int>(rng.below(4));
    const int r = 1 + static_cast<int>(rng.below(4));
    const int batch = 1 + static_cast<int>(rng.below(3));
    Tensor a = random_tensor({batch, p, q}, rng);
    Tensor b = random_tensor({q, r}, rng);
    CHECK(matmul(a, b).shape() == std::vector<int>{batch, p, r});
    CHECK(transpose_last2(a).shape() == std::vector<int>{batch, q, p});
    CHECK(softmax_lastdim(a).shape() == a.shape());

    const int m = 1 + static_cast<int>(rng.below(3));
    const int hh = m * (1 + static_cast<int>(rng.below(3)));
    const int ww = m * (1 + static_cast<int>(rng.below(3)));
    const int cc = 1 + static_cast<int>(rng.below(4));
    Tensor img = random_tensor({hh, ww, cc}, rng);
    Tensor parts = window_partition(img, m);
    CHECK(parts.shape() == std::vector<int>{(hh / m) * (ww / m), m * m, cc});
    CHECK(window_merge(parts, m, hh, ww).shape() == img.shape());
  }
}

TEST_CASE("forward ops stay finite on finite inputs") {
  Rng rng(99);
  Tensor x = random_tensor({4, 4, 4}, rng, -100, 100);
  CHECK(all_finite(softmax_lastdim(x)));
  CHECK(all_finite(gelu(x)));
  CHECK(all_finite(layer_norm(x, Tensor::full({4}, 1.0), Tensor::zeros({4}), 1e-5)));
  CHECK(all_finite(conv2d(x, random_tensor({3, 3, 4, 2}, rng), random_tensor({2}, rng))));
}
