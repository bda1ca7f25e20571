#include "anw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anw/error.hpp"

namespace anw {
namespace {

double wrap_degrees(double k) {
  double r = std::fmod(k, 360.0);
  if (r < 0.0) r += 360.0;
  return r;
}

// Batch the candidate-watermarked images. Returns the normalized batch and
// fills `mask` with the per-channel-value saturation flags.
Tensor candidate_batch(const std::vector<Image>& clean, const ColorBasis& basis, double k,
                       const NormalizationSpec& norm, std::vector<std::vector<std::uint8_t>>* masks,
                       std::vector<Image>* marked_out) {
  const WatermarkKey key{basis, k};
  std::vector<Image> marked;
  marked.reserve(clean.size());
  if (masks) masks->resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    marked.push_back(watermark_image(clean[i], key, masks ? &(*masks)[i] : nullptr));
  }
  Tensor batch = normalized_batch(marked, norm);
  if (marked_out) *marked_out = std::move(marked);
  return batch;
}

}  // namespace

SignatureSpace SignatureSpace::make(int slots, double tau) {
  if (slots < 2) throw std::invalid_argument("SignatureSpace: need at least 2 slots");
  if (!(tau > 0.0)) throw std::invalid_argument("SignatureSpace: tau must be positive");
  if (std::abs(2.0 * tau * slots - 360.0) > 1e-9)
    throw std::invalid_argument("SignatureSpace: slots of width 2*tau must tile 360 degrees");
  return SignatureSpace{slots, tau};
}

std::vector<double> SignatureSpace::candidates() const {
  std::vector<double> out(static_cast<std::size_t>(slots));
  for (int i = 0; i < slots; ++i) out[static_cast<std::size_t>(i)] = i * (360.0 / slots);
  return out;
}

std::vector<double> SignatureSpace::watermark_candidates() const {
  std::vector<double> all = candidates();
  return {all.begin() + 1, all.end()};
}

double circular_distance(double a_degrees, double b_degrees) {
  const double d = std::abs(wrap_degrees(a_degrees) - wrap_degrees(b_degrees));
  return std::min(d, 360.0 - d);
}

bool is_match(double inferred, double claimed, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("is_match: tau must be positive");
  return circular_distance(inferred, claimed) < tau;
}

VerificationReport grid_search(const Classifier& net, const std::vector<Image>& clean_images,
                               const std::vector<int>& labels, const ColorBasis& basis,
                               const SignatureSpace& space, const EvalContext& eval) {
  if (clean_images.empty()) throw std::invalid_argument("grid_search: no images");
  if (clean_images.size() != labels.size())
    throw std::invalid_argument("grid_search: images/labels mismatch");
  const std::vector<double> cands = space.candidates();
  if (cands.empty()) throw std::invalid_argument("grid_search: empty candidate set");

  VerificationReport report;
  report.method = SearchMethod::Grid;
  report.tau = space.tau;
  report.metadata.image_count = static_cast<int>(clean_images.size());
  report.per_candidate_losses.reserve(cands.size());

  std::size_t best = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Tensor batch = candidate_batch(clean_images, basis, cands[i], eval.normalization,
                                         nullptr, nullptr);
    const double loss = average_loss(net, batch, labels, eval.noise);
    report.per_candidate_losses.push_back({cands[i], loss});
    if (i == 0) continue;
    const CandidateLoss& cur = report.per_candidate_losses[i];
    const CandidateLoss& win = report.per_candidate_losses[best];
    if (cur.loss < win.loss) {
      best = i;
    } else if (cur.loss == win.loss) {
      const double dc = circular_distance(cur.k, 0.0), dw = circular_distance(win.k, 0.0);
      if (dc < dw || (dc == dw && cur.k < win.k)) best = i;
    }
  }
  report.inferred = report.per_candidate_losses[best].k;
  return report;
}

double signature_loss(const Classifier& net, const std::vector<Image>& clean_images,
                      const std::vector<int>& labels, const ColorBasis& basis, double k_degrees,
                      const EvalContext& eval, double* dloss_dk) {
  std::vector<std::vector<std::uint8_t>> masks;
  const Tensor batch = candidate_batch(clean_images, basis, k_degrees, eval.normalization,
                                       dloss_dk ? &masks : nullptr, nullptr);
  if (!dloss_dk) return average_loss(net, batch, labels, eval.noise);

  Activations acts;
  const Tensor logits = forward(net, batch, acts);
  const LossGrad lg = cross_entropy(logits, labels);
  Gradients scratch = Gradients::zeros_like(net);
  const Tensor input_grad = backward(net, acts, lg.dlogits, scratch, /*want_input_grad=*/true);

  // Chain rule per pixel v: dL/dk = dL/dz * (1/std) * clip_mask * (dg_k/dk v).
  const WatermarkKey key{basis, k_degrees};
  const Mat3 dgdk = lct_derivative(key);
  const int H = clean_images[0].height, W = clean_images[0].width;
  const std::int64_t per_image = static_cast<std::int64_t>(3) * H * W;

  double acc = 0.0;
  for (std::size_t i = 0; i < clean_images.size(); ++i) {
    const Image& img = clean_images[i];
    const std::vector<std::uint8_t>& mask = masks[i];
    const double* g = input_grad.data.data() + per_image * static_cast<std::int64_t>(i);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Vec3 v{img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
        const Vec3 dv = mat3_apply(dgdk, v);
        const std::size_t mask_base = (static_cast<std::size_t>(y) * W + x) * 3;
        for (int c = 0; c < 3; ++c) {
          if (mask[mask_base + static_cast<std::size_t>(c)]) continue;  // saturated: zero grad
          const double dz = g[(static_cast<std::int64_t>(c) * H + y) * W + x];
          acc += dz / eval.normalization.std[static_cast<std::size_t>(c)] *
                 dv[static_cast<std::size_t>(c)];
        }
      }
    }
  }
  *dloss_dk = acc;
  return lg.loss;
}

VerificationReport gradient_search(const Classifier& net, const std::vector<Image>& clean_images,
                                   const std::vector<int>& labels, const ColorBasis& basis,
                                   const std::vector<double>& inits,
                                   const GradientSchedule& schedule, const EvalContext& eval) {
  if (clean_images.empty()) throw std::invalid_argument("gradient_search: no images");
  if (inits.empty()) throw std::invalid_argument("gradient_search: no initial signatures");

  VerificationReport report;
  report.method = SearchMethod::Gradient;
  report.metadata.image_count = static_cast<int>(clean_images.size());

  bool any_ok = false;
  double best_loss = 0.0;
  double best_k = 0.0;

  for (double init : inits) {
    double k = init;
    bool ok = true;
    for (int t = 0; t < schedule.iterations; ++t) {
      const double lr =
          schedule.base_lr * std::pow(schedule.decay, t / std::max(1, schedule.decay_every));
      double dldk = 0.0;
      const double loss = signature_loss(net, clean_images, labels, basis, k, eval, &dldk);
      if (!std::isfinite(loss) || !std::isfinite(dldk)) {
        ok = false;
        break;
      }
      k -= lr * dldk;
    }
    if (!ok) continue;
    const double terminal_loss = signature_loss(net, clean_images, labels, basis, k, eval);
    if (!std::isfinite(terminal_loss)) continue;
    const double terminal_k = wrap_degrees(k);
    report.per_candidate_losses.push_back({terminal_k, terminal_loss});
    if (!any_ok || terminal_loss < best_loss) {
      any_ok = true;
      best_loss = terminal_loss;
      best_k = terminal_k;
    }
  }
  if (!any_ok) throw NumericalError("gradient_search: every trajectory diverged");
  report.inferred = best_k;
  return report;
}

VerificationReport verify(const Classifier& net, const std::vector<Image>& clean_user_images,
                          const std::vector<int>& labels, const ColorBasis& basis,
                          const SignatureSpace& space, SearchMethod method,
                          std::optional<double> claimed_signature, const EvalContext& eval) {
  VerificationReport report;
  if (method == SearchMethod::Grid) {
    report = grid_search(net, clean_user_images, labels, basis, space, eval);
  } else {
    report = gradient_search(net, clean_user_images, labels, basis, space.candidates(), {}, eval);
    report.tau = space.tau;
  }
  if (claimed_signature) report.matched = is_match(report.inferred, *claimed_signature, space.tau);
  return report;
}

VerificationReport grid_search_alpha(const Classifier& net, const std::vector<Image>& clean_images,
                                     const std::vector<int>& labels,
                                     const std::vector<std::pair<int, int>>& positions,
                                     const std::vector<std::uint8_t>& bits,
                                     const std::vector<double>& alphas, double tau,
                                     const EvalContext& eval,
                                     std::optional<double> claimed_alpha) {
  if (clean_images.empty()) throw std::invalid_argument("grid_search_alpha: no images");
  if (alphas.empty()) throw std::invalid_argument("grid_search_alpha: empty candidate set");

  VerificationReport report;
  report.method = SearchMethod::Grid;
  report.domain = "blue_alpha";
  report.tau = tau;
  report.metadata.image_count = static_cast<int>(clean_images.size());

  std::size_t best = 0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    BlueChannelKey key{alphas[i], positions, bits};
    std::vector<Image> marked;
    marked.reserve(clean_images.size());
    for (const Image& img : clean_images) marked.push_back(blue_channel_watermark(img, key));
    const Tensor batch = normalized_batch(marked, eval.normalization);
    const double loss = average_loss(net, batch, labels, eval.noise);
    report.per_candidate_losses.push_back({alphas[i], loss});
    if (i > 0) {
      if (loss < report.per_candidate_losses[best].loss ||
          (loss == report.per_candidate_losses[best].loss &&
           alphas[i] < report.per_candidate_losses[best].k))
        best = i;
    }
  }
  report.inferred = report.per_candidate_losses[best].k;
  if (claimed_alpha) report.matched = std::abs(report.inferred - *claimed_alpha) < tau;
  return report;
}

}  // namespace anw
