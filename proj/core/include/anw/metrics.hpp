#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anw/image.hpp"
#include "anw/train.hpp"
#include "anw/verify.hpp"

namespace anw {

// M matches out of N trials against a random-guess success probability p.
struct BernoulliOutcome {
  int matches = 0;
  int trials = 0;
  double guess_probability = 0.0;

  void validate() const;
};

// (M - N*p) / N: the gap between empirical inference success and guessing.
// Membership advantage is the p = 0.5 special case.
double protection_advantage(const BernoulliOutcome& outcome);

struct MiaThreshold {
  enum class Source { Std, Pow };
  double epsilon = 0.0;
  Source source = Source::Std;
  // For Pow: classification accuracy achieved on the calibration losses.
  double calibration_accuracy = 0.0;
};

// Mean of known training losses.
MiaThreshold mia_std_threshold(const std::vector<double>& known_train_losses);

// Accuracy-maximizing threshold over midpoints of the pooled sorted losses,
// plus the two degenerate all-member / all-non-member choices. Ties break
// toward the smaller epsilon.
MiaThreshold mia_pow_threshold(const std::vector<double>& train_losses,
                               const std::vector<double>& heldout_losses);

// Predicted member iff loss < epsilon (strict).
bool mia_infer(double loss, const MiaThreshold& threshold);

// cos(theta_a - theta_b) with signatures as unit 2-vectors.
double signature_cosine(double inferred_degrees, double true_degrees);

struct MaeConfig {
  int num_models = 8;          // K, must be even; half include the user, half exclude
  double subset_fraction = 0.7;
  TrainConfig train;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct MaeResult {
  double estimate = 0.0;            // included minus excluded mean accuracy
  double included_accuracy = 0.0;   // on the user's (possibly watermarked) images
  double excluded_accuracy = 0.0;
};

// Memorization value estimate: train K models on random subsets, half forced
// to include the user's slice and half to exclude it, and difference the two
// groups' accuracy on the user data. The user slice (and its evaluation
// copies) carry the watermark when a key is given.
MaeResult memorization_estimate(const LabeledDataset& dataset, const UserPartition& user,
                                const std::optional<WatermarkKey>& key, const MaeConfig& config);

struct MultiuserConfig {
  int num_users = 20;
  double watermark_ratio = 1.0;
  bool shared_basis = true;  // everyone on T_YIQ vs per-user random bases
  SignatureSpace space = SignatureSpace{12, 15.0};
  TrainConfig train;
  std::uint64_t seed = 0;
  // Extra verifications per user with fresh random bases (the
  // arbitrary-basis attack); 0 disables.
  int arbitrary_bases_per_user = 0;
  int workers = 1;
};

struct MultiuserUserResult {
  int user_id = 0;
  double signature = 0.0;
  double inferred = 0.0;
  bool matched = false;
};

struct MultiuserSummary {
  std::vector<MultiuserUserResult> users;
  double match_rate = 0.0;
  int arbitrary_trials = 0;
  double arbitrary_match_rate = 0.0;
  std::string note;
};

// Partition the dataset across users, watermark a ratio of them with random
// signatures (shared or per-user bases), train one model, and verify every
// watermarking user with their own basis.
MultiuserSummary multiuser_experiment(const LabeledDataset& dataset, const MultiuserConfig& config);

}  // namespace anw
