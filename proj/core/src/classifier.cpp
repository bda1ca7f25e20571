#include "anw/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "anw/error.hpp"
#include "anw/rng.hpp"
#include "binary_io.hpp"

namespace anw {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'W', 'M'};
constexpr std::uint32_t kVersion = 1;

double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void axpy(double* __restrict y, double a, const double* __restrict x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* __restrict a, const double* __restrict b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// C (M,P) += A (M,K) * B (K,P)
void gemm_nn(double* C, const double* A, const double* B, int M, int K, int P) {
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) axpy(C + static_cast<std::ptrdiff_t>(m) * P, A[m * K + k], B + static_cast<std::ptrdiff_t>(k) * P, P);
}

// C (K,P) += A^T (K,M) * B (M,P), with A stored (M,K)
void gemm_tn(double* C, const double* A, const double* B, int M, int K, int P) {
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) axpy(C + static_cast<std::ptrdiff_t>(k) * P, A[m * K + k], B + static_cast<std::ptrdiff_t>(m) * P, P);
}

// C (M,K) += A (M,P) * B^T (P,K), with B stored (K,P)
void gemm_nt(double* C, const double* A, const double* B, int M, int K, int P) {
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k)
      C[m * K + k] += dot(A + static_cast<std::ptrdiff_t>(m) * P, B + static_cast<std::ptrdiff_t>(k) * P, P);
}

// input plane (C,H,W) -> col (C*kh*kw, H*W) for stride-1 same-padding conv.
void im2col(const double* in, int C, int H, int W, int kh, int kw, double* col) {
  const int pad_y = kh / 2, pad_x = kw / 2;
  const int P = H * W;
  for (int ic = 0; ic < C; ++ic) {
    const double* plane = in + static_cast<std::ptrdiff_t>(ic) * P;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        double* row = col + static_cast<std::ptrdiff_t>((ic * kh + ky) * kw + kx) * P;
        const int dx = kx - pad_x;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(W, W - dx);
        for (int y = 0; y < H; ++y) {
          const int iy = y + ky - pad_y;
          double* dst = row + y * W;
          if (iy < 0 || iy >= H) {
            std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(W));
            continue;
          }
          if (x_lo > 0) std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(x_lo));
          if (x_hi > x_lo)
            std::memcpy(dst + x_lo, plane + iy * W + x_lo + dx,
                        sizeof(double) * static_cast<std::size_t>(x_hi - x_lo));
          if (x_hi < W) std::memset(dst + x_hi, 0, sizeof(double) * static_cast<std::size_t>(W - x_hi));
        }
      }
    }
  }
}

// Scatter-add of col (C*kh*kw, H*W) back into an input plane (C,H,W).
void col2im(const double* col, int C, int H, int W, int kh, int kw, double* out) {
  const int pad_y = kh / 2, pad_x = kw / 2;
  const int P = H * W;
  for (int ic = 0; ic < C; ++ic) {
    double* plane = out + static_cast<std::ptrdiff_t>(ic) * P;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const double* row = col + static_cast<std::ptrdiff_t>((ic * kh + ky) * kw + kx) * P;
        const int dx = kx - pad_x;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(W, W - dx);
        for (int y = 0; y < H; ++y) {
          const int iy = y + ky - pad_y;
          if (iy < 0 || iy >= H || x_hi <= x_lo) continue;
          axpy(plane + iy * W + x_lo + dx, 1.0, row + y * W + x_lo, x_hi - x_lo);
        }
      }
    }
  }
}

struct LayerShape {
  int c, h, w;     // spatial form, or
  int flat = -1;   // flat form after flatten/fc (-1 while spatial)
};

LayerShape infer_output_shape(const Layer& layer, const LayerShape& in, std::size_t index) {
  LayerShape out = in;
  switch (layer.kind) {
    case LayerKind::Conv: {
      if (in.flat >= 0) throw std::invalid_argument("conv after flatten (layer " + std::to_string(index) + ")");
      if (layer.weight.dim(1) != in.c)
        throw std::invalid_argument("conv input channels mismatch at layer " + std::to_string(index));
      out.c = layer.weight.dim(0);
      return out;
    }
    case LayerKind::Relu:
      return out;
    case LayerKind::MaxPool: {
      if (in.flat >= 0) throw std::invalid_argument("maxpool after flatten");
      if (in.h % 2 != 0 || in.w % 2 != 0)
        throw std::invalid_argument("maxpool needs even spatial dims at layer " + std::to_string(index));
      out.h = in.h / 2;
      out.w = in.w / 2;
      return out;
    }
    case LayerKind::Flatten: {
      if (in.flat >= 0) throw std::invalid_argument("flatten twice");
      out.flat = in.c * in.h * in.w;
      return out;
    }
    case LayerKind::Fc: {
      const int want = in.flat >= 0 ? in.flat : in.c * in.h * in.w;
      if (layer.weight.dim(1) != want)
        throw std::invalid_argument("fc input dimension mismatch at layer " + std::to_string(index));
      out.flat = layer.weight.dim(0);
      return out;
    }
  }
  throw std::invalid_argument("unknown layer kind");
}

}  // namespace

Classifier build_tiny_cnn(const std::array<int, 3>& input_shape, int num_classes,
                          std::uint64_t seed, int width) {
  const int c = input_shape[0], h = input_shape[1], w = input_shape[2];
  if (c != 3) throw std::invalid_argument("build_tiny_cnn: expects 3 input channels");
  if (h < 8 || w < 8 || h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument("build_tiny_cnn: H and W must be >= 8 and divisible by 4");
  if (num_classes < 2) throw std::invalid_argument("build_tiny_cnn: need at least 2 classes");
  if (width < 1) throw std::invalid_argument("build_tiny_cnn: width must be positive");

  Rng rng(seed);
  auto init_tensor = [&rng](Tensor& t, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& v : t.data) v = rng.uniform(-limit, limit);
  };

  Classifier net;
  net.input_shape = input_shape;
  net.num_classes = num_classes;

  Layer conv1{LayerKind::Conv, Tensor::zeros({width, c, 3, 3}), Tensor::zeros({width})};
  init_tensor(conv1.weight, c * 9);
  net.layers.push_back(std::move(conv1));
  net.layers.push_back(Layer{LayerKind::Relu, {}, {}});
  net.layers.push_back(Layer{LayerKind::MaxPool, {}, {}});

  Layer conv2{LayerKind::Conv, Tensor::zeros({2 * width, width, 3, 3}), Tensor::zeros({2 * width})};
  init_tensor(conv2.weight, width * 9);
  net.layers.push_back(std::move(conv2));
  net.layers.push_back(Layer{LayerKind::Relu, {}, {}});
  net.layers.push_back(Layer{LayerKind::MaxPool, {}, {}});
  net.layers.push_back(Layer{LayerKind::Flatten, {}, {}});

  const int fc_in = 2 * width * (h / 4) * (w / 4);
  Layer fc{LayerKind::Fc, Tensor::zeros({num_classes, fc_in}), Tensor::zeros({num_classes})};
  init_tensor(fc.weight, fc_in);
  net.layers.push_back(std::move(fc));

  quantize_parameters(net);
  return net;
}

void quantize_parameters(Classifier& net) {
  for (Layer& layer : net.layers) {
    for (auto& v : layer.weight.data) v = snap_f32(v);
    for (auto& v : layer.bias.data) v = snap_f32(v);
  }
}

Tensor forward(const Classifier& net, const Tensor& batch, Activations& acts) {
  if (batch.shape.size() != 4 || batch.dim(1) != net.input_shape[0] ||
      batch.dim(2) != net.input_shape[1] || batch.dim(3) != net.input_shape[2])
    throw std::invalid_argument("forward: batch shape does not match classifier input shape");

  const int B = batch.dim(0);
  acts.input = batch;
  acts.out.assign(net.layers.size(), Tensor{});
  acts.col.assign(net.layers.size(), Tensor{});
  acts.pool_idx.assign(net.layers.size(), {});

  LayerShape shape{net.input_shape[0], net.input_shape[1], net.input_shape[2]};
  const Tensor* cur = &acts.input;

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& layer = net.layers[li];
    const LayerShape out_shape = infer_output_shape(layer, shape, li);
    Tensor& out = acts.out[li];

    switch (layer.kind) {
      case LayerKind::Conv: {
        const int oc = layer.weight.dim(0), ic = layer.weight.dim(1);
        const int kh = layer.weight.dim(2), kw = layer.weight.dim(3);
        const int H = shape.h, W = shape.w, P = H * W, K = ic * kh * kw;
        out = Tensor::zeros({B, oc, H, W});
        Tensor& col = acts.col[li];
        col = Tensor::zeros({B, K, P});
        for (int b = 0; b < B; ++b) {
          const double* in = cur->data.data() + static_cast<std::ptrdiff_t>(b) * ic * P;
          double* colb = col.data.data() + static_cast<std::ptrdiff_t>(b) * K * P;
          im2col(in, ic, H, W, kh, kw, colb);
          double* ob = out.data.data() + static_cast<std::ptrdiff_t>(b) * oc * P;
          for (int o = 0; o < oc; ++o)
            std::fill(ob + static_cast<std::ptrdiff_t>(o) * P, ob + static_cast<std::ptrdiff_t>(o + 1) * P,
                      layer.bias[o]);
          gemm_nn(ob, layer.weight.data.data(), colb, oc, K, P);
        }
        break;
      }
      case LayerKind::Relu: {
        out = *cur;
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::MaxPool: {
        const int C = shape.c, H = shape.h, W = shape.w;
        const int Ho = H / 2, Wo = W / 2;
        out = Tensor::zeros({B, C, Ho, Wo});
        auto& idx = acts.pool_idx[li];
        idx.assign(out.data.size(), 0);
        const std::ptrdiff_t in_img = static_cast<std::ptrdiff_t>(C) * H * W;
        std::size_t oi = 0;
        for (int b = 0; b < B; ++b) {
          const double* in = cur->data.data() + b * in_img;
          for (int ch = 0; ch < C; ++ch) {
            for (int yo = 0; yo < Ho; ++yo) {
              for (int xo = 0; xo < Wo; ++xo) {
                const int y0 = 2 * yo, x0 = 2 * xo;
                int best = (ch * H + y0) * W + x0;
                double best_v = in[best];
                const int cands[3] = {(ch * H + y0) * W + x0 + 1, (ch * H + y0 + 1) * W + x0,
                                      (ch * H + y0 + 1) * W + x0 + 1};
                for (int cand : cands) {
                  if (in[cand] > best_v) {
                    best_v = in[cand];
                    best = cand;
                  }
                }
                out.data[oi] = best_v;
                idx[oi] = best;
                ++oi;
              }
            }
          }
        }
        break;
      }
      case LayerKind::Flatten: {
        out = *cur;
        out.shape = {B, shape.c * shape.h * shape.w};
        break;
      }
      case LayerKind::Fc: {
        const int O = layer.weight.dim(0), I = layer.weight.dim(1);
        out = Tensor::zeros({B, O});
        for (int b = 0; b < B; ++b) {
          const double* x = cur->data.data() + static_cast<std::ptrdiff_t>(b) * I;
          double* y = out.data.data() + static_cast<std::ptrdiff_t>(b) * O;
          for (int o = 0; o < O; ++o)
            y[o] = layer.bias[o] + dot(layer.weight.data.data() + static_cast<std::ptrdiff_t>(o) * I, x, I);
        }
        break;
      }
    }
    shape = out_shape;
    cur = &out;
  }
  return acts.out.back();
}

Tensor forward(const Classifier& net, const Tensor& batch) {
  Activations acts;
  return forward(net, batch, acts);
}

Gradients Gradients::zeros_like(const Classifier& net) {
  Gradients g;
  g.weight.reserve(net.layers.size());
  g.bias.reserve(net.layers.size());
  for (const Layer& layer : net.layers) {
    g.weight.push_back(Tensor::zeros(layer.weight.shape));
    g.bias.push_back(Tensor::zeros(layer.bias.shape));
  }
  return g;
}

Tensor backward(const Classifier& net, const Activations& acts, const Tensor& dlogits,
                Gradients& grads, bool want_input_grad) {
  if (grads.weight.size() != net.layers.size())
    throw std::invalid_argument("backward: gradient buffers do not match classifier");

  const int B = acts.input.dim(0);
  Tensor delta = dlogits;

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Tensor& in = (li == 0) ? acts.input : acts.out[li - 1];
    const bool need_dx = want_input_grad || li > 0;

    switch (layer.kind) {
      case LayerKind::Fc: {
        const int O = layer.weight.dim(0), I = layer.weight.dim(1);
        Tensor dx = need_dx ? Tensor::zeros(in.shape) : Tensor{};
        double* dW = grads.weight[li].data.data();
        double* db = grads.bias[li].data.data();
        for (int b = 0; b < B; ++b) {
          const double* x = in.data.data() + static_cast<std::ptrdiff_t>(b) * I;
          const double* dy = delta.data.data() + static_cast<std::ptrdiff_t>(b) * O;
          for (int o = 0; o < O; ++o) {
            const double g = dy[o];
            if (g != 0.0) axpy(dW + static_cast<std::ptrdiff_t>(o) * I, g, x, I);
            db[o] += g;
          }
          if (need_dx) {
            double* dxb = dx.data.data() + static_cast<std::ptrdiff_t>(b) * I;
            for (int o = 0; o < O; ++o)
              axpy(dxb, dy[o], layer.weight.data.data() + static_cast<std::ptrdiff_t>(o) * I, I);
          }
        }
        delta = std::move(dx);
        break;
      }
      case LayerKind::Flatten: {
        if (!need_dx) { delta = Tensor{}; break; }
        delta.shape = in.shape;
        break;
      }
      case LayerKind::MaxPool: {
        if (!need_dx) { delta = Tensor{}; break; }
        Tensor dx = Tensor::zeros(in.shape);
        const auto& idx = acts.pool_idx[li];
        const std::ptrdiff_t in_img = in.size() / B;
        const std::ptrdiff_t out_img = delta.size() / B;
        for (int b = 0; b < B; ++b) {
          double* dxb = dx.data.data() + b * in_img;
          const double* dyb = delta.data.data() + b * out_img;
          const std::int32_t* ib = idx.data() + b * out_img;
          for (std::ptrdiff_t i = 0; i < out_img; ++i) dxb[ib[i]] += dyb[i];
        }
        delta = std::move(dx);
        break;
      }
      case LayerKind::Relu: {
        if (!need_dx) { delta = Tensor{}; break; }
        const Tensor& out = acts.out[li];
        for (std::int64_t i = 0; i < delta.size(); ++i)
          if (out[i] <= 0.0) delta[i] = 0.0;
        break;
      }
      case LayerKind::Conv: {
        const int oc = layer.weight.dim(0), ic = layer.weight.dim(1);
        const int kh = layer.weight.dim(2), kw = layer.weight.dim(3);
        const int H = in.shape[2], W = in.shape[3], P = H * W, K = ic * kh * kw;
        const Tensor& col = acts.col[li];
        double* dW = grads.weight[li].data.data();
        double* db = grads.bias[li].data.data();
        Tensor dx = need_dx ? Tensor::zeros(in.shape) : Tensor{};
        Tensor dcol = need_dx ? Tensor::zeros({K, P}) : Tensor{};
        for (int b = 0; b < B; ++b) {
          const double* dy = delta.data.data() + static_cast<std::ptrdiff_t>(b) * oc * P;
          const double* colb = col.data.data() + static_cast<std::ptrdiff_t>(b) * K * P;
          gemm_nt(dW, dy, colb, oc, K, P);
          for (int o = 0; o < oc; ++o) {
            double s = 0.0;
            const double* row = dy + static_cast<std::ptrdiff_t>(o) * P;
            for (int p = 0; p < P; ++p) s += row[p];
            db[o] += s;
          }
          if (need_dx) {
            dcol.fill(0.0);
            gemm_tn(dcol.data.data(), layer.weight.data.data(), dy, oc, K, P);
            col2im(dcol.data.data(), ic, H, W, kh, kw,
                   dx.data.data() + static_cast<std::ptrdiff_t>(b) * ic * P);
          }
        }
        delta = std::move(dx);
        break;
      }
    }
  }
  return delta;
}

LossGrad cross_entropy(const Tensor& logits, const std::vector<int>& labels, double smoothing) {
  if (logits.shape.size() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size())
    throw std::invalid_argument("cross_entropy: logits/labels shape mismatch");
  if (smoothing < 0.0 || smoothing >= 1.0)
    throw std::invalid_argument("cross_entropy: smoothing must be in [0,1)");

  const int B = logits.dim(0), C = logits.dim(1);
  LossGrad result;
  result.dlogits = Tensor::zeros({B, C});
  const double uniform = smoothing / C;
  double total = 0.0;

  for (int b = 0; b < B; ++b) {
    const double* z = logits.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    double* dz = result.dlogits.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= C) throw std::invalid_argument("cross_entropy: label out of range");

    double m = z[0];
    for (int c = 1; c < C; ++c) m = std::max(m, z[c]);
    double sum = 0.0;
    for (int c = 0; c < C; ++c) sum += std::exp(z[c] - m);
    const double lse = m + std::log(sum);

    double loss_b = 0.0;
    for (int c = 0; c < C; ++c) {
      const double logp = z[c] - lse;
      const double target = uniform + (c == y ? 1.0 - smoothing : 0.0);
      loss_b -= target * logp;
      dz[c] = (std::exp(logp) - target) / B;
    }
    total += loss_b;
  }
  result.loss = total / B;
  return result;
}

Tensor softmax(const Tensor& logits) {
  const int B = logits.dim(0), C = logits.dim(1);
  Tensor out = Tensor::zeros({B, C});
  for (int b = 0; b < B; ++b) {
    const double* z = logits.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    double* p = out.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    double m = z[0];
    for (int c = 1; c < C; ++c) m = std::max(m, z[c]);
    double sum = 0.0;
    for (int c = 0; c < C; ++c) sum += (p[c] = std::exp(z[c] - m));
    for (int c = 0; c < C; ++c) p[c] /= sum;
  }
  return out;
}

double average_loss(const Classifier& net, const Tensor& batch, const std::vector<int>& labels,
                    const OutputNoise& noise) {
  if (labels.empty()) throw std::invalid_argument("average_loss: empty label set");
  const Tensor logits = forward(net, batch);
  if (noise.sigma2 <= 0.0) return cross_entropy(logits, labels).loss;

  // Perturb every confidence the way a noise-adding deployment would, then
  // read off the true class's (clamped) value.
  Tensor probs = softmax(logits);
  Rng rng(noise.seed);
  const double sigma = std::sqrt(noise.sigma2);
  for (auto& p : probs.data) p += sigma * rng.gaussian();
  const int B = probs.dim(0), C = probs.dim(1);
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    const double p = probs.data[static_cast<std::size_t>(b) * C + static_cast<std::size_t>(labels[static_cast<std::size_t>(b)])];
    total += -std::log(std::max(p, 1e-12));
  }
  return total / B;
}

double accuracy(const Classifier& net, const Tensor& batch, const std::vector<int>& labels) {
  const Tensor logits = forward(net, batch);
  const int B = logits.dim(0), C = logits.dim(1);
  int correct = 0;
  for (int b = 0; b < B; ++b) {
    const double* z = logits.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    int arg = 0;
    for (int c = 1; c < C; ++c)
      if (z[c] > z[arg]) arg = c;
    if (arg == labels[static_cast<std::size_t>(b)]) ++correct;
  }
  return static_cast<double>(correct) / B;
}

Classifier prune(const Classifier& net, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("prune: fraction must be in [0,1)");
  Classifier out = net;

  std::size_t total = 0;
  for (const Layer& layer : out.layers)
    if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::Fc)
      total += layer.weight.data.size();

  const std::size_t to_zero = static_cast<std::size_t>(fraction * static_cast<double>(total));
  if (to_zero == 0) return out;

  struct Entry {
    double mag;
    std::uint32_t layer;
    std::uint32_t elem;
  };
  std::vector<Entry> entries;
  entries.reserve(total);
  for (std::uint32_t li = 0; li < out.layers.size(); ++li) {
    const Layer& layer = out.layers[li];
    if (layer.kind != LayerKind::Conv && layer.kind != LayerKind::Fc) continue;
    for (std::uint32_t e = 0; e < layer.weight.data.size(); ++e)
      entries.push_back({std::abs(layer.weight.data[e]), li, e});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.mag != b.mag) return a.mag < b.mag;
    if (a.layer != b.layer) return a.layer < b.layer;
    return a.elem < b.elem;
  });
  for (std::size_t i = 0; i < to_zero; ++i)
    out.layers[entries[i].layer].weight.data[entries[i].elem] = 0.0;
  return out;
}

void save_checkpoint(const Classifier& net, const std::string& path) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(net.layers.size()));

  auto put_tensor = [&out](const Tensor& t) {
    detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data) detail::put_f32(out, static_cast<float>(v));
  };

  for (const Layer& layer : net.layers) {
    out.push_back(static_cast<std::uint8_t>(layer.kind));
    if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::Fc) {
      put_tensor(layer.weight);
      put_tensor(layer.bias);
    }
  }
  detail::spew(path, out);
}

Classifier load_checkpoint(const std::string& path, int expected_num_classes) {
  detail::ByteReader r(detail::slurp(path));

  const std::uint8_t* magic = r.raw(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("magic", "bad magic in " + path);
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError("version", "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t num_layers = r.u32("num_layers");
  if (num_layers == 0) throw FormatError("num_layers", "checkpoint with zero layers");

  auto read_tensor = [&r](const char* field, std::size_t expect_rank) {
    const std::uint32_t rank = r.u32(field);
    if (rank != expect_rank)
      throw FormatError("rank", std::string("unexpected rank for ") + field + ": " +
                                    std::to_string(rank));
    std::vector<int> shape(rank);
    std::int64_t n = 1;
    for (auto& d : shape) {
      const std::uint32_t v = r.u32(field);
      if (v == 0 || v > (1u << 24)) throw FormatError("dims", std::string("bad dimension in ") + field);
      d = static_cast<int>(v);
      n *= d;
    }
    Tensor t = Tensor::zeros(shape);
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(r.f32(field));
      if (!std::isfinite(v)) throw FormatError("weights", std::string("non-finite value in ") + field);
      t[i] = v;
    }
    return t;
  };

  Classifier net;
  for (std::uint32_t li = 0; li < num_layers; ++li) {
    const std::uint8_t kind_byte = r.u8("kind");
    if (kind_byte > 4) throw FormatError("kind", "unknown layer kind " + std::to_string(kind_byte));
    const LayerKind kind = static_cast<LayerKind>(kind_byte);
    Layer layer{kind, {}, {}};
    if (kind == LayerKind::Conv) {
      layer.weight = read_tensor("conv weight", 4);
      layer.bias = read_tensor("conv bias", 1);
      if (layer.bias.dim(0) != layer.weight.dim(0))
        throw FormatError("dims", "conv bias does not match output channels");
    } else if (kind == LayerKind::Fc) {
      layer.weight = read_tensor("fc weight", 2);
      layer.bias = read_tensor("fc bias", 1);
      if (layer.bias.dim(0) != layer.weight.dim(0))
        throw FormatError("dims", "fc bias does not match output dimension");
    }
    net.layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0)
    throw FormatError("size", std::to_string(r.remaining()) + " trailing bytes at offset " +
                                  std::to_string(r.offset()));

  // Reconstruct the input shape: channels from the first conv, spatial size
  // from the fc fan-in undone through the pooling stages. Square inputs only.
  int channels = 3;
  int pools = 0;
  int last_conv_oc = -1;
  const Layer* fc = nullptr;
  for (const Layer& layer : net.layers) {
    if (layer.kind == LayerKind::Conv && last_conv_oc < 0) channels = layer.weight.dim(1);
    if (layer.kind == LayerKind::Conv) last_conv_oc = layer.weight.dim(0);
    if (layer.kind == LayerKind::MaxPool) ++pools;
    if (layer.kind == LayerKind::Fc && !fc) fc = &layer;
  }
  if (!fc) throw FormatError("layers", "checkpoint has no fc layer");
  const int feature_channels = last_conv_oc > 0 ? last_conv_oc : channels;
  const int flat = fc->weight.dim(1);
  if (flat % feature_channels != 0)
    throw FormatError("input_shape", "fc fan-in incompatible with conv channels");
  const int hw = flat / feature_channels;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(hw))));
  if (side * side != hw)
    throw FormatError("input_shape", "cannot infer square input from fc fan-in");
  const int scale = 1 << pools;
  net.input_shape = {channels, side * scale, side * scale};
  net.num_classes = fc->weight.dim(0);

  if (expected_num_classes >= 0 && net.num_classes != expected_num_classes)
    throw FormatError("num_classes", "checkpoint declares " + std::to_string(net.num_classes) +
                                         " classes, expected " +
                                         std::to_string(expected_num_classes));

  // Validate the layer chain end to end.
  try {
    LayerShape shape{net.input_shape[0], net.input_shape[1], net.input_shape[2]};
    for (std::size_t li = 0; li < net.layers.size(); ++li)
      shape = infer_output_shape(net.layers[li], shape, li);
    if (shape.flat != net.num_classes) throw std::invalid_argument("network does not end in logits");
  } catch (const std::invalid_argument& e) {
    throw FormatError("layers", e.what());
  }

  return net;
}

}  // namespace anw
