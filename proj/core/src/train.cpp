#include "anw/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace anw {
namespace {

// Seed stream tags; child streams derive from these so that init, shuffling
// and augmentation stay independent and reproducible.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kFineTuneStream = 3;

struct Momentum {
  std::vector<Tensor> weight, bias;

  explicit Momentum(const Classifier& net) {
    for (const Layer& layer : net.layers) {
      weight.push_back(Tensor::zeros(layer.weight.shape));
      bias.push_back(Tensor::zeros(layer.bias.shape));
    }
  }
};

double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void sgd_step(Classifier& net, const Gradients& grads, Momentum& mom, double lr, double mu) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& layer = net.layers[li];
    for (std::size_t i = 0; i < layer.weight.data.size(); ++i) {
      double& v = mom.weight[li].data[i];
      v = mu * v + grads.weight[li].data[i];
      layer.weight.data[i] = snap_f32(layer.weight.data[i] - lr * v);
    }
    for (std::size_t i = 0; i < layer.bias.data.size(); ++i) {
      double& v = mom.bias[li].data[i];
      v = mu * v + grads.bias[li].data[i];
      layer.bias.data[i] = snap_f32(layer.bias.data[i] - lr * v);
    }
  }
}

void fill_batch_slot(Tensor& batch, int slot, const Image& image, const NormalizationSpec& spec) {
  const Tensor chw = normalize(image, spec);
  std::copy(chw.data.begin(), chw.data.end(),
            batch.data.begin() + static_cast<std::ptrdiff_t>(slot) * chw.size());
}

int batch_argmax_correct(const Tensor& logits, const std::vector<int>& labels) {
  const int B = logits.dim(0), C = logits.dim(1);
  int correct = 0;
  for (int b = 0; b < B; ++b) {
    const double* z = logits.data.data() + static_cast<std::ptrdiff_t>(b) * C;
    int arg = 0;
    for (int c = 1; c < C; ++c)
      if (z[c] > z[arg]) arg = c;
    if (arg == labels[static_cast<std::size_t>(b)]) ++correct;
  }
  return correct;
}

// One SGD pass over the dataset; shared by train() and fine_tune().
EpochStats run_epoch(Classifier& net, const LabeledDataset& data, const TrainConfig& config,
                     const AugmentationPipeline& pipeline, Momentum& mom, double lr, int epoch,
                     std::uint64_t epoch_shuffle_seed, std::uint64_t sample_seed_base) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(epoch_shuffle_seed);
  shuffle_rng.shuffle(order);

  const int H = data.images[0].height, W = data.images[0].width;
  Gradients grads = Gradients::zeros_like(net);
  Activations acts;

  double total_loss = 0.0;
  int total_correct = 0;

  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
    const int B = static_cast<int>(std::min<std::size_t>(config.batch_size, n - start));
    Tensor batch = Tensor::zeros({B, 3, H, W});
    std::vector<int> labels(static_cast<std::size_t>(B));
    std::vector<Image> augmented(static_cast<std::size_t>(B));

    for (int b = 0; b < B; ++b) {
      const std::size_t idx = order[start + static_cast<std::size_t>(b)];
      Rng sample_rng(Rng::derive(sample_seed_base, idx));
      augmented[static_cast<std::size_t>(b)] = pipeline.apply(data.images[idx], sample_rng);
      labels[static_cast<std::size_t>(b)] = data.labels[idx];
      fill_batch_slot(batch, b, augmented[static_cast<std::size_t>(b)], config.normalization);
    }

    if (config.fgsm_epsilon > 0.0) {
      // Adversarial training: one extra pass for input gradients, then the
      // update runs on the perturbed batch.
      Tensor logits = forward(net, batch, acts);
      LossGrad lg = cross_entropy(logits, labels, config.label_smoothing);
      Gradients scratch = Gradients::zeros_like(net);
      Tensor input_grad = backward(net, acts, lg.dlogits, scratch, /*want_input_grad=*/true);
      const std::int64_t per_image = static_cast<std::int64_t>(3) * H * W;
      for (int b = 0; b < B; ++b) {
        Image& img = augmented[static_cast<std::size_t>(b)];
        const double* g = input_grad.data.data() + per_image * b;
        for (int c = 0; c < 3; ++c)
          for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
              const double gv = g[(static_cast<std::int64_t>(c) * H + y) * W + x];
              double v = img.at(y, x, c) + config.fgsm_epsilon * (gv > 0.0 ? 1.0 : (gv < 0.0 ? -1.0 : 0.0));
              img.at(y, x, c) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            }
        fill_batch_slot(batch, b, img, config.normalization);
      }
    }

    Tensor logits = forward(net, batch, acts);
    LossGrad lg = cross_entropy(logits, labels, config.label_smoothing);
    for (auto& t : grads.weight) t.fill(0.0);
    for (auto& t : grads.bias) t.fill(0.0);
    backward(net, acts, lg.dlogits, grads, /*want_input_grad=*/false);
    sgd_step(net, grads, mom, lr, config.momentum);

    total_loss += lg.loss * B;
    total_correct += batch_argmax_correct(logits, labels);
  }

  EpochStats stats;
  stats.epoch = epoch;
  stats.lr = lr;
  stats.loss = total_loss / static_cast<double>(n);
  stats.accuracy = static_cast<double>(total_correct) / static_cast<double>(n);
  return stats;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
    throw std::invalid_argument("TrainConfig: lr_decay_factor must be in (0,1]");
  if (lr_decay_every < 1) throw std::invalid_argument("TrainConfig: lr_decay_every must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
}

LabeledDataset apply_assignments(const LabeledDataset& dataset,
                                 const std::vector<WatermarkAssignment>& assignments) {
  LabeledDataset out = dataset;
  for (const WatermarkAssignment& a : assignments) {
    for (std::size_t idx : a.partition.indices) {
      if (idx >= out.size()) throw std::invalid_argument("apply_assignments: index out of range");
      if (a.hue) out.images[idx] = watermark_image(out.images[idx], *a.hue);
      if (a.blue) out.images[idx] = blue_channel_watermark(out.images[idx], *a.blue);
    }
  }
  return out;
}

TrainResult train(const LabeledDataset& dataset,
                  const std::vector<WatermarkAssignment>& assignments, const TrainConfig& config) {
  config.validate();
  if (dataset.images.empty()) throw std::invalid_argument("train: empty dataset");

  const LabeledDataset working = apply_assignments(dataset, assignments);
  const int H = working.images[0].height, W = working.images[0].width;

  TrainResult result;
  result.model = build_tiny_cnn({3, H, W}, working.num_classes,
                                Rng::derive(config.seed, kInitStream), config.conv_width);

  AugmentationPipeline pipeline{config.crop_pad, config.horizontal_flip, config.cutout_size,
                                config.jitter, config.gaussian_sigma2};
  Momentum mom(result.model);
  const std::uint64_t shuffle_base = Rng::derive(config.seed, kShuffleStream);
  const std::uint64_t augment_base = Rng::derive(config.seed, kAugmentStream);

  for (int e = 0; e < config.epochs; ++e) {
    const double lr = config.base_lr * std::pow(config.lr_decay_factor, e / config.lr_decay_every);
    result.log.push_back(run_epoch(result.model, working, config, pipeline, mom, lr, e,
                                   Rng::derive(shuffle_base, static_cast<std::uint64_t>(e)),
                                   Rng::derive(augment_base, static_cast<std::uint64_t>(e))));
  }
  return result;
}

Classifier fine_tune(const Classifier& net, const LabeledDataset& dataset, int epochs, double lr,
                     const TrainConfig& config) {
  if (epochs < 1) throw std::invalid_argument("fine_tune: epochs must be >= 1");
  if (lr < 0.0) throw std::invalid_argument("fine_tune: lr must be non-negative");
  if (dataset.images.empty()) throw std::invalid_argument("fine_tune: empty dataset");

  Classifier tuned = net;
  AugmentationPipeline pipeline{config.crop_pad, config.horizontal_flip, config.cutout_size,
                                config.jitter, config.gaussian_sigma2};
  Momentum mom(tuned);
  const std::uint64_t base = Rng::derive(config.seed, kFineTuneStream);
  for (int e = 0; e < epochs; ++e) {
    run_epoch(tuned, dataset, config, pipeline, mom, lr, e,
              Rng::derive(base, 2 * static_cast<std::uint64_t>(e)),
              Rng::derive(base, 2 * static_cast<std::uint64_t>(e) + 1));
  }
  return tuned;
}

Image fgsm_perturb(const Classifier& net, const NormalizationSpec& spec, const Image& image,
                   int label, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("fgsm_perturb: epsilon must be non-negative");
  if (epsilon == 0.0) return image;

  Tensor batch = normalized_batch({image}, spec);
  Activations acts;
  Tensor logits = forward(net, batch, acts);
  LossGrad lg = cross_entropy(logits, {label});
  Gradients scratch = Gradients::zeros_like(net);
  Tensor grad = backward(net, acts, lg.dlogits, scratch, /*want_input_grad=*/true);

  const int H = image.height, W = image.width;
  Image out = image;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double g = grad.data[(static_cast<std::size_t>(c) * H + y) * W + x];
        double v = out.at(y, x, c) + epsilon * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
        out.at(y, x, c) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
  return out;
}

}  // namespace anw
