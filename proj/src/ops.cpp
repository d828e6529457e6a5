#include "swinoir/ops.hpp"

#include <algorithm>
#include <cmath>

namespace swinoir {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

using BackwardFn = std::function<void(const std::vector<Tensor>&, const Tensor&)>;

// Marks the output, records the entry when a tape is live.
Tensor finish(const char* op, std::vector<Tensor> inputs, Tensor out, BackwardFn bw) {
  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  if (needs_grad) {
    out.set_requires_grad(true);
    if (GradientTape* tape = GradientTape::active()) {
      tape->record({op, std::move(inputs), out, std::move(bw)});
    }
  }
  return out;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()) + " differ");
  }
}

bool is_suffix_of(const std::vector<int>& suffix, const std::vector<int>& shape) {
  if (suffix.size() > shape.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), shape.rbegin());
}

Tensor unary(const char* op, const Tensor& a, double (*fwd)(double),
             double (*dfdx)(double)) {
  Tensor out = Tensor::zeros(a.shape());
  auto in = a.data();
  double* o = out.mutable_data();
  for (long long i = 0; i < a.numel(); ++i) o[i] = fwd(in[i]);
  return finish(op, {a}, out,
                [dfdx](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  auto go = out.grad();
                  auto x = a.data();
                  double* ga = a.grad_data();
                  for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * dfdx(x[i]);
                });
}

// C[p,r] += / = A[p,q] * B[q,r] on contiguous blocks.
void gemm(const double* a, const double* b, double* c, int p, int q, int r) {
  for (int i = 0; i < p; ++i) {
    double* crow = c + static_cast<size_t>(i) * r;
    for (int k = 0; k < q; ++k) {
      const double av = a[static_cast<size_t>(i) * q + k];
      const double* brow = b + static_cast<size_t>(k) * r;
      for (int j = 0; j < r; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA[p,q] += dC[p,r] * B[q,r]^T
void gemm_grad_a(const double* gc, const double* b, double* ga, int p, int q, int r) {
  for (int i = 0; i < p; ++i) {
    const double* gcrow = gc + static_cast<size_t>(i) * r;
    for (int k = 0; k < q; ++k) {
      const double* brow = b + static_cast<size_t>(k) * r;
      double s = 0.0;
      for (int j = 0; j < r; ++j) s += gcrow[j] * brow[j];
      ga[static_cast<size_t>(i) * q + k] += s;
    }
  }
}

// dB[q,r] += A[p,q]^T * dC[p,r]
void gemm_grad_b(const double* a, const double* gc, double* gb, int p, int q, int r) {
  for (int i = 0; i < p; ++i) {
    const double* gcrow = gc + static_cast<size_t>(i) * r;
    for (int k = 0; k < q; ++k) {
      const double av = a[static_cast<size_t>(i) * q + k];
      double* gbrow = gb + static_cast<size_t>(k) * r;
      for (int j = 0; j < r; ++j) gbrow[j] += av * gcrow[j];
    }
  }
}

struct BatchMap {
  std::vector<int> out_batch;          // broadcast batch dims
  std::vector<long long> a_index;      // flat batch index -> operand block index
  std::vector<long long> b_index;
};

BatchMap broadcast_batches(const char* op, const std::vector<int>& a_shape,
                           const std::vector<int>& b_shape) {
  const int a_nb = static_cast<int>(a_shape.size()) - 2;
  const int b_nb = static_cast<int>(b_shape.size()) - 2;
  const int nb = std::max(a_nb, b_nb);
  BatchMap map;
  map.out_batch.resize(static_cast<size_t>(nb));
  for (int i = 0; i < nb; ++i) {
    const int ad = i < nb - a_nb ? 1 : a_shape[static_cast<size_t>(i - (nb - a_nb))];
    const int bd = i < nb - b_nb ? 1 : b_shape[static_cast<size_t>(i - (nb - b_nb))];
    if (ad != bd && ad != 1 && bd != 1) {
      throw ShapeError(std::string(op) + ": batch dimensions of " +
                       shape_to_string(a_shape) + " and " + shape_to_string(b_shape) +
                       " do not broadcast");
    }
    map.out_batch[static_cast<size_t>(i)] = std::max(ad, bd);
  }
  long long total = 1;
  for (int d : map.out_batch) total *= d;
  map.a_index.resize(static_cast<size_t>(total));
  map.b_index.resize(static_cast<size_t>(total));
  std::vector<int> idx(static_cast<size_t>(nb), 0);
  for (long long flat = 0; flat < total; ++flat) {
    long long ai = 0, bi = 0;
    for (int i = 0; i < nb; ++i) {
      if (i >= nb - a_nb) {
        const int ad = a_shape[static_cast<size_t>(i - (nb - a_nb))];
        ai = ai * ad + (ad == 1 ? 0 : idx[static_cast<size_t>(i)]);
      }
      if (i >= nb - b_nb) {
        const int bd = b_shape[static_cast<size_t>(i - (nb - b_nb))];
        bi = bi * bd + (bd == 1 ? 0 : idx[static_cast<size_t>(i)]);
      }
    }
    map.a_index[static_cast<size_t>(flat)] = ai;
    map.b_index[static_cast<size_t>(flat)] = bi;
    for (int i = nb - 1; i >= 0; --i) {
      if (++idx[static_cast<size_t>(i)] < map.out_batch[static_cast<size_t>(i)]) break;
      idx[static_cast<size_t>(i)] = 0;
    }
  }
  return map;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (!is_suffix_of(b.shape(), a.shape())) {
    throw ShapeError("add: shape " + shape_to_string(b.shape()) +
                     " is not a trailing suffix of " + shape_to_string(a.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  auto av = a.data();
  auto bv = b.data();
  double* o = out.mutable_data();
  const long long bn = b.numel();
  for (long long i = 0; i < a.numel(); ++i) o[i] = av[i] + bv[i % bn];
  return finish("add", {a, b}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0], b = in[1];
                  auto go = out.grad();
                  if (a.requires_grad()) a.accumulate_grad(go);
                  if (b.requires_grad()) {
                    double* gb = b.grad_data();
                    const long long bn = b.numel();
                    for (size_t i = 0; i < go.size(); ++i) gb[i % bn] += go[i];
                  }
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out = Tensor::zeros(a.shape());
  auto av = a.data();
  auto bv = b.data();
  double* o = out.mutable_data();
  for (long long i = 0; i < a.numel(); ++i) o[i] = av[i] - bv[i];
  return finish("sub", {a, b}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0], b = in[1];
                  auto go = out.grad();
                  if (a.requires_grad()) a.accumulate_grad(go);
                  if (b.requires_grad()) {
                    double* gb = b.grad_data();
                    for (size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
                  }
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  auto av = a.data();
  auto bv = b.data();
  double* o = out.mutable_data();
  for (long long i = 0; i < a.numel(); ++i) o[i] = av[i] * bv[i];
  return finish("mul", {a, b}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0], b = in[1];
                  auto go = out.grad();
                  auto av = a.data();
                  auto bv = b.data();
                  if (a.requires_grad()) {
                    double* ga = a.grad_data();
                    for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
                  }
                  if (b.requires_grad()) {
                    double* gb = b.grad_data();
                    for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
                  }
                });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros(a.shape());
  auto av = a.data();
  double* o = out.mutable_data();
  for (long long i = 0; i < a.numel(); ++i) o[i] = av[i] * factor;
  return finish("scale", {a}, out,
                [factor](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  auto go = out.grad();
                  double* ga = a.grad_data();
                  for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
                });
}

Tensor add_scalar(const Tensor& a, double value) {
  Tensor out = Tensor::zeros(a.shape());
  auto av = a.data();
  double* o = out.mutable_data();
  for (long long i = 0; i < a.numel(); ++i) o[i] = av[i] + value;
  return finish("add_scalar", {a}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (a.requires_grad()) a.accumulate_grad(out.grad());
                });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::fabs(x); },
               [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; },
               [](double x) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  return unary("sqrt", a, [](double x) { return std::sqrt(x); },
               [](double x) { return 0.5 / std::sqrt(x); });
}

Tensor gelu(const Tensor& a) {
  return unary("gelu", a,
               [](double x) { return x * 0.5 * (1.0 + std::erf(x * kInvSqrt2)); },
               [](double x) {
                 const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                 const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                 return cdf + x * pdf;
               });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2) {
    throw ShapeError("matmul: operands must have rank >= 2, got " +
                     shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
  }
  const int p = a.dim(-2), q = a.dim(-1);
  const int q2 = b.dim(-2), r = b.dim(-1);
  if (q != q2) {
    throw ShapeError("matmul: inner dimensions of " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()) + " disagree");
  }
  BatchMap map = broadcast_batches("matmul", a.shape(), b.shape());
  std::vector<int> out_shape = map.out_batch;
  out_shape.push_back(p);
  out_shape.push_back(r);
  Tensor out = Tensor::zeros(out_shape);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.mutable_data();
  const long long batches = static_cast<long long>(map.a_index.size());
  for (long long bi = 0; bi < batches; ++bi) {
    gemm(ad + map.a_index[bi] * p * q, bd + map.b_index[bi] * q * r,
         od + bi * p * r, p, q, r);
  }
  return finish("matmul", {a, b}, out,
                [map = std::move(map), p, q, r](const std::vector<Tensor>& in,
                                                const Tensor& out) {
                  Tensor a = in[0], b = in[1];
                  const double* go = out.grad().data();
                  const long long batches = static_cast<long long>(map.a_index.size());
                  if (a.requires_grad()) {
                    double* ga = a.grad_data();
                    const double* bd = b.data().data();
                    for (long long bi = 0; bi < batches; ++bi) {
                      gemm_grad_a(go + bi * p * r, bd + map.b_index[bi] * q * r,
                                  ga + map.a_index[bi] * p * q, p, q, r);
                    }
                  }
                  if (b.requires_grad()) {
                    double* gb = b.grad_data();
                    const double* ad = a.data().data();
                    for (long long bi = 0; bi < batches; ++bi) {
                      gemm_grad_b(ad + map.a_index[bi] * p * q, go + bi * p * r,
                                  gb + map.b_index[bi] * q * r, p, q, r);
                    }
                  }
                });
}

Tensor transpose_last2(const Tensor& a) {
  if (a.ndim() < 2) {
    throw ShapeError("transpose_last2: rank >= 2 required, got " +
                     shape_to_string(a.shape()));
  }
  const int p = a.dim(-2), q = a.dim(-1);
  std::vector<int> out_shape = a.shape();
  out_shape[out_shape.size() - 2] = q;
  out_shape[out_shape.size() - 1] = p;
  Tensor out = Tensor::zeros(out_shape);
  const double* ad = a.data().data();
  double* od = out.mutable_data();
  const long long batches = a.numel() / (static_cast<long long>(p) * q);
  for (long long bi = 0; bi < batches; ++bi) {
    const double* ab = ad + bi * p * q;
    double* ob = od + bi * p * q;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < q; ++j) ob[static_cast<size_t>(j) * p + i] = ab[static_cast<size_t>(i) * q + j];
  }
  return finish("transpose_last2", {a}, out,
                [p, q](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  const double* go = out.grad().data();
                  double* ga = a.grad_data();
                  const long long batches = a.numel() / (static_cast<long long>(p) * q);
                  for (long long bi = 0; bi < batches; ++bi) {
                    const double* gb = go + bi * p * q;
                    double* gab = ga + bi * p * q;
                    for (int i = 0; i < p; ++i)
                      for (int j = 0; j < q; ++j)
                        gab[static_cast<size_t>(i) * q + j] += gb[static_cast<size_t>(j) * p + i];
                  }
                });
}

Tensor softmax_lastdim(const Tensor& a) {
  const int n = a.dim(-1);
  Tensor out = Tensor::zeros(a.shape());
  const double* ad = a.data().data();
  double* od = out.mutable_data();
  const long long rows = a.numel() / n;
  for (long long row = 0; row < rows; ++row) {
    const double* x = ad + row * n;
    double* y = od + row * n;
    double mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      y[i] = std::exp(x[i] - mx);
      s += y[i];
    }
    const double inv = 1.0 / s;
    for (int i = 0; i < n; ++i) y[i] *= inv;
  }
  return finish("softmax_lastdim", {a}, out,
                [n](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  const double* go = out.grad().data();
                  const double* y = out.data().data();
                  double* ga = a.grad_data();
                  const long long rows = a.numel() / n;
                  for (long long row = 0; row < rows; ++row) {
                    const double* gr = go + row * n;
                    const double* yr = y + row * n;
                    double dot = 0.0;
                    for (int i = 0; i < n; ++i) dot += gr[i] * yr[i];
                    double* gar = ga + row * n;
                    for (int i = 0; i < n; ++i) gar[i] += yr[i] * (gr[i] - dot);
                  }
                });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (eps <= 0.0) throw std::invalid_argument("layer_norm: eps must be positive");
  const int c = x.dim(-1);
  if (gamma.ndim() != 1 || gamma.dim(0) != c || beta.ndim() != 1 || beta.dim(0) != c) {
    throw ShapeError("layer_norm: gamma " + shape_to_string(gamma.shape()) +
                     " and beta " + shape_to_string(beta.shape()) +
                     " must both be (" + std::to_string(c) + ") for input " +
                     shape_to_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  const double* xd = x.data().data();
  const double* g = gamma.data().data();
  const double* b = beta.data().data();
  double* od = out.mutable_data();
  const long long positions = x.numel() / c;
  for (long long pos = 0; pos < positions; ++pos) {
    const double* xr = xd + pos * c;
    double* yr = od + pos * c;
    double mean = 0.0;
    for (int i = 0; i < c; ++i) mean += xr[i];
    mean /= c;
    double var = 0.0;
    for (int i = 0; i < c; ++i) {
      const double d = xr[i] - mean;
      var += d * d;
    }
    var /= c;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < c; ++i) yr[i] = (xr[i] - mean) * inv_std * g[i] + b[i];
  }
  return finish(
      "layer_norm", {x, gamma, beta}, out,
      [c, eps](const std::vector<Tensor>& in, const Tensor& out) {
        Tensor x = in[0], gamma = in[1], beta = in[2];
        const double* go = out.grad().data();
        const double* xd = x.data().data();
        const double* g = gamma.data().data();
        double* gx = x.requires_grad() ? x.grad_data() : nullptr;
        double* gg = gamma.requires_grad() ? gamma.grad_data() : nullptr;
        double* gb = beta.requires_grad() ? beta.grad_data() : nullptr;
        const long long positions = x.numel() / c;
        std::vector<double> xhat(static_cast<size_t>(c));
        for (long long pos = 0; pos < positions; ++pos) {
          const double* xr = xd + pos * c;
          const double* gr = go + pos * c;
          double mean = 0.0;
          for (int i = 0; i < c; ++i) mean += xr[i];
          mean /= c;
          double var = 0.0;
          for (int i = 0; i < c; ++i) {
            const double d = xr[i] - mean;
            var += d * d;
          }
          var /= c;
          const double inv_std = 1.0 / std::sqrt(var + eps);
          for (int i = 0; i < c; ++i) xhat[static_cast<size_t>(i)] = (xr[i] - mean) * inv_std;
          if (gb) {
            for (int i = 0; i < c; ++i) gb[i] += gr[i];
          }
          if (gg) {
            for (int i = 0; i < c; ++i) gg[i] += gr[i] * xhat[static_cast<size_t>(i)];
          }
          if (gx) {
            double mean_gy = 0.0, mean_gy_xhat = 0.0;
            for (int i = 0; i < c; ++i) {
              const double gy = gr[i] * g[i];
              mean_gy += gy;
              mean_gy_xhat += gy * xhat[static_cast<size_t>(i)];
            }
            mean_gy /= c;
            mean_gy_xhat /= c;
            double* gxr = gx + pos * c;
            for (int i = 0; i < c; ++i) {
              const double gy = gr[i] * g[i];
              gxr[i] += (gy - mean_gy - xhat[static_cast<size_t>(i)] * mean_gy_xhat) * inv_std;
            }
          }
        }
      });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  if (x.ndim() != 3 || kernel.ndim() != 4) {
    throw ShapeError("conv2d: expected image (H, W, Cin) and kernel (k, k, Cin, Cout), got " +
                     shape_to_string(x.shape()) + " and " + shape_to_string(kernel.shape()));
  }
  const int h = x.dim(0), w = x.dim(1), cin = x.dim(2);
  const int k = kernel.dim(0), cout = kernel.dim(3);
  if (kernel.dim(1) != k || k % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square with odd size, got " +
                     shape_to_string(kernel.shape()));
  }
  if (kernel.dim(2) != cin) {
    throw ShapeError("conv2d: kernel input channels of " + shape_to_string(kernel.shape()) +
                     " do not match image " + shape_to_string(x.shape()));
  }
  if (bias.ndim() != 1 || bias.dim(0) != cout) {
    throw ShapeError("conv2d: bias " + shape_to_string(bias.shape()) +
                     " must be (" + std::to_string(cout) + ")");
  }
  const int pad = (k - 1) / 2;
  Tensor out = Tensor::zeros({h, w, cout});
  const double* xd = x.data().data();
  const double* kd = kernel.data().data();
  const double* bd = bias.data().data();
  double* od = out.mutable_data();
  for (int y = 0; y < h; ++y) {
    for (int xi = 0; xi < w; ++xi) {
      double* orow = od + (static_cast<size_t>(y) * w + xi) * cout;
      for (int co = 0; co < cout; ++co) orow[co] = bd[co];
      for (int dy = 0; dy < k; ++dy) {
        const int yy = y + dy - pad;
        if (yy < 0 || yy >= h) continue;
        for (int dx = 0; dx < k; ++dx) {
          const int xx = xi + dx - pad;
          if (xx < 0 || xx >= w) continue;
          const double* xrow = xd + (static_cast<size_t>(yy) * w + xx) * cin;
          const double* krow = kd + (static_cast<size_t>(dy) * k + dx) * cin * cout;
          for (int ci = 0; ci < cin; ++ci) {
            const double xv = xrow[ci];
            const double* kk = krow + static_cast<size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) orow[co] += xv * kk[co];
          }
        }
      }
    }
  }
  return finish(
      "conv2d", {x, kernel, bias}, out,
      [h, w, cin, k, cout, pad](const std::vector<Tensor>& in, const Tensor& out) {
        Tensor x = in[0], kernel = in[1], bias = in[2];
        const double* go = out.grad().data();
        const double* xd = x.data().data();
        const double* kd = kernel.data().data();
        double* gx = x.requires_grad() ? x.grad_data() : nullptr;
        double* gk = kernel.requires_grad() ? kernel.grad_data() : nullptr;
        double* gb = bias.requires_grad() ? bias.grad_data() : nullptr;
        for (int y = 0; y < h; ++y) {
          for (int xi = 0; xi < w; ++xi) {
            const double* grow = go + (static_cast<size_t>(y) * w + xi) * cout;
            if (gb) {
              for (int co = 0; co < cout; ++co) gb[co] += grow[co];
            }
            for (int dy = 0; dy < k; ++dy) {
              const int yy = y + dy - pad;
              if (yy < 0 || yy >= h) continue;
              for (int dx = 0; dx < k; ++dx) {
                const int xx = xi + dx - pad;
                if (xx < 0 || xx >= w) continue;
                const double* xrow = xd + (static_cast<size_t>(yy) * w + xx) * cin;
                const double* krow = kd + (static_cast<size_t>(dy) * k + dx) * cin * cout;
                if (gx) {
                  double* gxrow = gx + (static_cast<size_t>(yy) * w + xx) * cin;
                  for (int ci = 0; ci < cin; ++ci) {
                    const double* kk = krow + static_cast<size_t>(ci) * cout;
                    double s = 0.0;
                    for (int co = 0; co < cout; ++co) s += grow[co] * kk[co];
                    gxrow[ci] += s;
                  }
                }
                if (gk) {
                  double* gkrow = gk + (static_cast<size_t>(dy) * k + dx) * cin * cout;
                  for (int ci = 0; ci < cin; ++ci) {
                    const double xv = xrow[ci];
                    double* gkk = gkrow + static_cast<size_t>(ci) * cout;
                    for (int co = 0; co < cout; ++co) gkk[co] += xv * grow[co];
                  }
                }
              }
            }
          }
        }
      });
}

namespace {

// Shared helper for the two shuffle directions: index_map[out] = in.
Tensor permutation_op(const char* op, const Tensor& x, std::vector<int> out_shape,
                      std::vector<long long> index_map) {
  Tensor out = Tensor::zeros(std::move(out_shape));
  const double* xd = x.data().data();
  double* od = out.mutable_data();
  for (size_t i = 0; i < index_map.size(); ++i) od[i] = xd[index_map[i]];
  return finish(op, {x}, out,
                [index_map = std::move(index_map)](const std::vector<Tensor>& in,
                                                   const Tensor& out) {
                  Tensor x = in[0];
                  if (!x.requires_grad()) return;
                  const double* go = out.grad().data();
                  double* gx = x.grad_data();
                  for (size_t i = 0; i < index_map.size(); ++i) gx[index_map[i]] += go[i];
                });
}

}  // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
  if (r < 1) throw std::invalid_argument("pixel_shuffle: r must be positive");
  if (x.ndim() != 3) {
    throw ShapeError("pixel_shuffle: expected (H, W, C), got " + shape_to_string(x.shape()));
  }
  const int h = x.dim(0), w = x.dim(1), c_in = x.dim(2);
  if (c_in % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: channels of " + shape_to_string(x.shape()) +
                     " not divisible by r^2 = " + std::to_string(r * r));
  }
  const int c = c_in / (r * r);
  const int oh = h * r, ow = w * r;
  std::vector<long long> map(static_cast<size_t>(oh) * ow * c);
  for (int y = 0; y < h; ++y)
    for (int dy = 0; dy < r; ++dy)
      for (int xi = 0; xi < w; ++xi)
        for (int dx = 0; dx < r; ++dx)
          for (int ci = 0; ci < c; ++ci) {
            const long long oidx =
                ((static_cast<long long>(y) * r + dy) * ow + (static_cast<long long>(xi) * r + dx)) * c + ci;
            const long long iidx =
                (static_cast<long long>(y) * w + xi) * c_in + (ci * r * r + dy * r + dx);
            map[static_cast<size_t>(oidx)] = iidx;
          }
  return permutation_op("pixel_shuffle", x, {oh, ow, c}, std::move(map));
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  if (r < 1) throw std::invalid_argument("pixel_unshuffle: r must be positive");
  if (x.ndim() != 3) {
    throw ShapeError("pixel_unshuffle: expected (H, W, C), got " + shape_to_string(x.shape()));
  }
  const int oh = x.dim(0), ow = x.dim(1), c = x.dim(2);
  if (oh % r != 0 || ow % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial size of " + shape_to_string(x.shape()) +
                     " not divisible by r = " + std::to_string(r));
  }
  const int h = oh / r, w = ow / r;
  const int c_out = c * r * r;
  std::vector<long long> map(static_cast<size_t>(h) * w * c_out);
  for (int y = 0; y < h; ++y)
    for (int xi = 0; xi < w; ++xi)
      for (int ci = 0; ci < c; ++ci)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx) {
            const long long oidx =
                (static_cast<long long>(y) * w + xi) * c_out + (ci * r * r + dy * r + dx);
            const long long iidx =
                ((static_cast<long long>(y) * r + dy) * ow + (static_cast<long long>(xi) * r + dx)) * c + ci;
            map[static_cast<size_t>(oidx)] = iidx;
          }
  return permutation_op("pixel_unshuffle", x, {h, w, c_out}, std::move(map));
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
  long long n = 1;
  for (int d : new_shape) n *= d;
  if (n != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                     shape_to_string(new_shape));
  }
  Tensor out = Tensor::from_data(std::move(new_shape),
                                 std::vector<double>(x.data().begin(), x.data().end()));
  return finish("reshape", {x}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor x = in[0];
                  if (x.requires_grad()) x.accumulate_grad(out.grad());
                });
}

Tensor slice_lastdim(const Tensor& x, int start, int count) {
  const int n = x.dim(-1);
  if (start < 0 || count < 1 || start + count > n) {
    throw ShapeError("slice_lastdim: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of bounds for " +
                     shape_to_string(x.shape()));
  }
  std::vector<int> out_shape = x.shape();
  out_shape.back() = count;
  Tensor out = Tensor::zeros(out_shape);
  const double* xd = x.data().data();
  double* od = out.mutable_data();
  const long long rows = x.numel() / n;
  for (long long row = 0; row < rows; ++row)
    for (int i = 0; i < count; ++i) od[row * count + i] = xd[row * n + start + i];
  return finish("slice_lastdim", {x}, out,
                [start, count, n](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor x = in[0];
                  if (!x.requires_grad()) return;
                  const double* go = out.grad().data();
                  double* gx = x.grad_data();
                  const long long rows = x.numel() / n;
                  for (long long row = 0; row < rows; ++row)
                    for (int i = 0; i < count; ++i)
                      gx[row * n + start + i] += go[row * count + i];
                });
}

Tensor concat_lastdim(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_lastdim: empty input list");
  std::vector<int> lead(parts[0].shape().begin(), parts[0].shape().end() - 1);
  int total = 0;
  for (const Tensor& t : parts) {
    std::vector<int> tl(t.shape().begin(), t.shape().end() - 1);
    if (tl != lead) {
      throw ShapeError("concat_lastdim: leading dimensions of " +
                       shape_to_string(t.shape()) + " and " +
                       shape_to_string(parts[0].shape()) + " differ");
    }
    total += t.dim(-1);
  }
  std::vector<int> out_shape = lead;
  out_shape.push_back(total);
  Tensor out = Tensor::zeros(out_shape);
  double* od = out.mutable_data();
  long long rows = 1;
  for (int d : lead) rows *= d;
  int offset = 0;
  for (const Tensor& t : parts) {
    const int n = t.dim(-1);
    const double* td = t.data().data();
    for (long long row = 0; row < rows; ++row)
      for (int i = 0; i < n; ++i) od[row * total + offset + i] = td[row * n + i];
    offset += n;
  }
  return finish("concat_lastdim", parts, out,
                [total, rows](const std::vector<Tensor>& in, const Tensor& out) {
                  const double* go = out.grad().data();
                  int offset = 0;
                  for (Tensor t : in) {
                    const int n = t.dim(-1);
                    if (t.requires_grad()) {
                      double* gt = t.grad_data();
                      for (long long row = 0; row < rows; ++row)
                        for (int i = 0; i < n; ++i)
                          gt[row * n + i] += go[row * total + offset + i];
                    }
                    offset += n;
                  }
                });
}

Tensor window_partition(const Tensor& x, int window) {
  if (window < 1) throw std::invalid_argument("window_partition: window must be positive");
  if (x.ndim() != 3) {
    throw ShapeError("window_partition: expected (H, W, C), got " + shape_to_string(x.shape()));
  }
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (h % window != 0 || w % window != 0) {
    throw ShapeError("window_partition: " + shape_to_string(x.shape()) +
                     " not divisible by window " + std::to_string(window));
  }
  const int wy_count = h / window, wx_count = w / window;
  const int nw = wy_count * wx_count, tokens = window * window;
  std::vector<long long> map(static_cast<size_t>(nw) * tokens * c);
  for (int wy = 0; wy < wy_count; ++wy)
    for (int wx = 0; wx < wx_count; ++wx)
      for (int ty = 0; ty < window; ++ty)
        for (int tx = 0; tx < window; ++tx)
          for (int ci = 0; ci < c; ++ci) {
            const long long oidx =
                ((static_cast<long long>(wy) * wx_count + wx) * tokens + ty * window + tx) * c + ci;
            const long long iidx =
                ((static_cast<long long>(wy) * window + ty) * w + (static_cast<long long>(wx) * window + tx)) * c + ci;
            map[static_cast<size_t>(oidx)] = iidx;
          }
  return permutation_op("window_partition", x, {nw, tokens, c}, std::move(map));
}

Tensor window_merge(const Tensor& w, int window, int height, int width) {
  if (w.ndim() != 3) {
    throw ShapeError("window_merge: expected (windows, tokens, C), got " +
                     shape_to_string(w.shape()));
  }
  const int nw = w.dim(0), tokens = w.dim(1), c = w.dim(2);
  if (window < 1 || height % window != 0 || width % window != 0 ||
      tokens != window * window || nw != (height / window) * (width / window)) {
    throw ShapeError("window_merge: " + shape_to_string(w.shape()) +
                     " inconsistent with window " + std::to_string(window) + " over " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const int wx_count = width / window;
  std::vector<long long> map(static_cast<size_t>(height) * width * c);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int ci = 0; ci < c; ++ci) {
        const int wy = y / window, wx = x / window;
        const int ty = y % window, tx = x % window;
        const long long oidx = (static_cast<long long>(y) * width + x) * c + ci;
        const long long iidx =
            ((static_cast<long long>(wy) * wx_count + wx) * tokens + ty * window + tx) * c + ci;
        map[static_cast<size_t>(oidx)] = iidx;
      }
  return permutation_op("window_merge", w, {height, width, c}, std::move(map));
}

Tensor relative_position_bias(const Tensor& table, int window, int head) {
  const int span = 2 * window - 1;
  if (table.ndim() != 2 || table.dim(0) != span * span) {
    throw ShapeError("relative_position_bias: table " + shape_to_string(table.shape()) +
                     " must have (2M-1)^2 = " + std::to_string(span * span) +
                     " rows for window " + std::to_string(window));
  }
  const int heads = table.dim(1);
  if (head < 0 || head >= heads) {
    throw std::invalid_argument("relative_position_bias: head " + std::to_string(head) +
                                " out of range for " + std::to_string(heads) + " heads");
  }
  const int tokens = window * window;
  Tensor out = Tensor::zeros({tokens, tokens});
  const double* td = table.data().data();
  double* od = out.mutable_data();
  std::vector<int> index(static_cast<size_t>(tokens) * tokens);
  for (int i = 0; i < tokens; ++i) {
    const int yi = i / window, xi = i % window;
    for (int j = 0; j < tokens; ++j) {
      const int yj = j / window, xj = j % window;
      const int idx = (yi - yj + window - 1) * span + (xi - xj + window - 1);
      index[static_cast<size_t>(i) * tokens + j] = idx;
      od[static_cast<size_t>(i) * tokens + j] = td[static_cast<size_t>(idx) * heads + head];
    }
  }
  return finish("relative_position_bias", {table}, out,
                [index = std::move(index), heads, head, tokens](
                    const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor table = in[0];
                  if (!table.requires_grad()) return;
                  const double* go = out.grad().data();
                  double* gt = table.grad_data();
                  for (size_t i = 0; i < index.size(); ++i)
                    gt[static_cast<size_t>(index[i]) * heads + head] += go[i];
                });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tensor out = Tensor::scalar(s);
  return finish("sum", {a}, out,
                [](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  const double g = out.grad()[0];
                  double* ga = a.grad_data();
                  for (long long i = 0; i < a.numel(); ++i) ga[i] += g;
                });
}

Tensor mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  Tensor out = Tensor::scalar(s * inv_n);
  return finish("mean", {a}, out,
                [inv_n](const std::vector<Tensor>& in, const Tensor& out) {
                  Tensor a = in[0];
                  if (!a.requires_grad()) return;
                  const double g = out.grad()[0] * inv_n;
                  double* ga = a.grad_data();
                  for (long long i = 0; i < a.numel(); ++i) ga[i] += g;
                });
}

}  // namespace swinoir
