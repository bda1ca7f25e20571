#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "anw/tensor.hpp"

namespace anw {

enum class LayerKind : std::uint8_t { Conv = 0, Relu = 1, MaxPool = 2, Flatten = 3, Fc = 4 };

struct Layer {
  LayerKind kind;
  Tensor weight;  // conv: (oc, ic, kh, kw); fc: (out, in); empty otherwise
  Tensor bias;    // conv/fc: (out); empty otherwise
};

// A small feed-forward image classifier. Parameters are held as doubles but
// always snapped to the float32 grid (init, SGD step, load), so computation
// runs at 64-bit while checkpoints round-trip bit-exactly.
struct Classifier {
  std::array<int, 3> input_shape{3, 0, 0};  // (C, H, W)
  int num_classes = 0;
  std::vector<Layer> layers;
};

// conv3x3(3->width) -> relu -> maxpool2 -> conv3x3(width->2*width) -> relu ->
// maxpool2 -> flatten -> fc. Weights uniform in +-sqrt(6/fan_in), biases zero.
Classifier build_tiny_cnn(const std::array<int, 3>& input_shape, int num_classes,
                          std::uint64_t seed, int width = 16);

// Per-layer state captured by the tracing forward pass, consumed by backward.
struct Activations {
  Tensor input;                                    // (B, C, H, W)
  std::vector<Tensor> out;                         // per-layer outputs
  std::vector<Tensor> col;                         // conv im2col buffers (B, K, P)
  std::vector<std::vector<std::int32_t>> pool_idx; // per-image flat argmax offsets
};

// Logits (B, num_classes).
Tensor forward(const Classifier& net, const Tensor& batch);
Tensor forward(const Classifier& net, const Tensor& batch, Activations& acts);

struct LossGrad {
  double loss = 0.0;
  Tensor dlogits;  // d(mean loss)/dlogits, (B, C)
};

// Numerically stabilized softmax cross-entropy averaged over the batch.
// smoothing blends the one-hot target with the uniform distribution.
LossGrad cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                       double smoothing = 0.0);

Tensor softmax(const Tensor& logits);

struct Gradients {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;

  static Gradients zeros_like(const Classifier& net);
};

// Reverse-mode gradients of the (already differentiated) loss. Accumulates
// into `grads`; returns d loss / d input when want_input_grad is set.
Tensor backward(const Classifier& net, const Activations& acts, const Tensor& dlogits,
                Gradients& grads, bool want_input_grad = false);

// Optional inference-time output perturbation: gaussian noise of variance
// sigma2 added to each softmax confidence before the loss is read off.
struct OutputNoise {
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
};

// Mean plain cross-entropy over the batch (no smoothing).
double average_loss(const Classifier& net, const Tensor& batch, const std::vector<int>& labels,
                    const OutputNoise& noise = {});

// Global magnitude pruning over conv/fc weights; biases untouched. Exactly
// floor(fraction * weight_count) entries are zeroed (ties broken by index).
Classifier prune(const Classifier& net, double fraction);

// Fraction of correct argmax predictions.
double accuracy(const Classifier& net, const Tensor& batch, const std::vector<int>& labels);

// Checkpoint container, little-endian:
//   magic "ANWM" | u32 version=1 | u32 num_layers | per layer: u8 kind,
//   then for conv/fc: weight (u32 rank, rank x u32 dims, f32 data) and bias
//   (same encoding). Parameterless layers carry only the kind byte.
void save_checkpoint(const Classifier& net, const std::string& path);
Classifier load_checkpoint(const std::string& path, int expected_num_classes = -1);

// Snap every parameter to its nearest float32 value (storage precision).
void quantize_parameters(Classifier& net);

}  // namespace anw
