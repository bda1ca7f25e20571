#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anw/classifier.hpp"
#include "anw/color.hpp"
#include "anw/image.hpp"

namespace anw {

// The circle of hue angles cut into `slots` equal slots of width 2*tau, slot
// centers {0, 360/N, 2*360/N, ...}. The center at 0 is the reserved
// "no watermarking" value.
struct SignatureSpace {
  int slots = 12;
  double tau = 15.0;

  // Throws unless 2*tau*slots == 360 (within 1e-9).
  static SignatureSpace make(int slots, double tau);

  std::vector<double> candidates() const;
  // Candidates excluding the reserved no-watermark slot.
  std::vector<double> watermark_candidates() const;
};

// min(|a-b| mod 360, 360 - |a-b| mod 360).
double circular_distance(double a_degrees, double b_degrees);

// circular_distance(inferred, claimed) < tau, strictly.
bool is_match(double inferred, double claimed, double tau);

enum class SearchMethod { Grid, Gradient };

struct CandidateLoss {
  double k = 0.0;
  double loss = 0.0;
};

struct ReportMetadata {
  std::string model_id;
  int user_id = -1;
  int image_count = 0;
};

struct VerificationReport {
  double inferred = 0.0;
  std::vector<CandidateLoss> per_candidate_losses;
  SearchMethod method = SearchMethod::Grid;
  double tau = 0.0;
  std::optional<bool> matched;  // present only when a claim was checked
  std::string domain = "hue_degrees";
  ReportMetadata metadata;
};

// How candidate losses are evaluated: images are watermarked, clipped,
// normalized, then scored; optional output noise models a noise-adding
// deployment.
struct EvalContext {
  NormalizationSpec normalization = NormalizationSpec::cifar();
  OutputNoise noise;
};

// Enumerate all slot centers, watermark the clean images with each candidate
// and return the loss minimizer. Ties break toward the candidate closest to
// 0 on the circle, then toward the smaller value.
VerificationReport grid_search(const Classifier& net, const std::vector<Image>& clean_images,
                               const std::vector<int>& labels, const ColorBasis& basis,
                               const SignatureSpace& space, const EvalContext& eval = {});

struct GradientSchedule {
  int iterations = 300;
  double base_lr = 0.1;
  double decay = 0.1;
  int decay_every = 100;
};

// Mean loss over the batch at hue angle k, and (optionally) its derivative
// d loss / dk. Saturated channel values contribute zero gradient
// (straight-through clipping); the normalization Jacobian is 1/std.
double signature_loss(const Classifier& net, const std::vector<Image>& clean_images,
                      const std::vector<int>& labels, const ColorBasis& basis, double k_degrees,
                      const EvalContext& eval, double* dloss_dk = nullptr);

// Multi-start descent on k. Each trajectory follows the step-decay schedule;
// trajectories hitting non-finite losses are abandoned. The terminal k of
// the lowest-loss trajectory wins, reduced into [0, 360).
VerificationReport gradient_search(const Classifier& net, const std::vector<Image>& clean_images,
                                   const std::vector<int>& labels, const ColorBasis& basis,
                                   const std::vector<double>& inits,
                                   const GradientSchedule& schedule = {},
                                   const EvalContext& eval = {});

// The arbitrator entry point. Runs the chosen search; the claimed signature
// (when given) is compared against the result afterwards and can never steer
// the search, which does not receive it.
VerificationReport verify(const Classifier& net, const std::vector<Image>& clean_user_images,
                          const std::vector<int>& labels, const ColorBasis& basis,
                          const SignatureSpace& space, SearchMethod method,
                          std::optional<double> claimed_signature = std::nullopt,
                          const EvalContext& eval = {});

// Linear grid over blue-channel intensities for the partial-pixel variant;
// the match rule is linear distance |a - a*| < tau.
VerificationReport grid_search_alpha(const Classifier& net, const std::vector<Image>& clean_images,
                                     const std::vector<int>& labels,
                                     const std::vector<std::pair<int, int>>& positions,
                                     const std::vector<std::uint8_t>& bits,
                                     const std::vector<double>& alphas, double tau,
                                     const EvalContext& eval = {},
                                     std::optional<double> claimed_alpha = std::nullopt);

}  // namespace anw
