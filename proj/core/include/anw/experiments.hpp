#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anw/metrics.hpp"
#include "anw/synthetic.hpp"
#include "anw/train.hpp"
#include "anw/verify.hpp"

namespace anw {

// Blue-channel watermark material for a desk run: positions and bits are
// derived from `seed`, alpha is the secret.
struct BlueSpec {
  double alpha = 0.3;
  int pixel_count = 512;
  std::uint64_t seed = 99;
};

// One watermark -> train -> verify cycle on a synthetic dataset. Everything
// below the master seed is derived from it: dataset, user slice, training,
// evaluation noise.
struct DeskRunConfig {
  int dataset_size = 5000;
  int eval_size = 1000;
  int height = 32;
  int width = 32;
  int num_classes = 10;

  double user_share = 0.01;
  std::optional<int> user_count;  // absolute override of user_share

  bool watermark_enabled = true;
  double signature = 60.0;
  std::optional<std::uint64_t> basis_seed;  // random user basis; T_YIQ when absent
  std::optional<BlueSpec> blue;             // blue-channel variant when set

  TrainConfig train;
  SignatureSpace space = SignatureSpace{12, 15.0};
  SearchMethod method = SearchMethod::Grid;

  std::uint64_t seed = 1;
};

struct DeskRunResult {
  VerificationReport report;
  bool matched = false;           // inferred vs the configured secret
  double inferred = 0.0;
  double heldout_accuracy = 0.0;  // on the generated evaluation split
  double watermark_loss = 0.0;    // model loss on the user's imprinted images
  double clean_loss = 0.0;        // model loss on the same images unwatermarked
  std::vector<EpochStats> log;
  Classifier model;
  ColorBasis basis;
  std::vector<std::size_t> user_indices;
};

DeskRunResult run_desk(const DeskRunConfig& config);

// Independent desk runs, scheduled across `workers` threads; results come
// back in input order.
std::vector<DeskRunResult> run_desk_many(const std::vector<DeskRunConfig>& configs, int workers);

struct SweepEntry {
  double parameter = 0.0;  // count or signature
  double inferred = 0.0;
  bool matched = false;
  double watermark_loss = 0.0;
  double clean_loss = 0.0;
  double heldout_accuracy = 0.0;
};

struct SweepSummary {
  std::string name;
  std::vector<SweepEntry> entries;
};

SweepSummary run_quantity_experiment(const DeskRunConfig& base, const std::vector<int>& counts,
                                     int workers);
SweepSummary run_signature_experiment(const DeskRunConfig& base,
                                      const std::vector<double>& signatures, int workers);

// Named augmentation variants: cutout, label_smoothing, gaussian_noise,
// fgsm, dp_noise, color_jitter. Unknown names throw std::invalid_argument.
struct AugmentationOutcome {
  std::string name;
  double inferred = 0.0;
  bool matched = false;
  // Loss at the antipodal signature minus loss at the true one; how much
  // headroom the verification signal has left.
  double loss_gap = 0.0;
  double heldout_accuracy = 0.0;
};

std::vector<AugmentationOutcome> run_augmentation_experiment(const DeskRunConfig& base,
                                                             const std::vector<std::string>& names,
                                                             int workers);

struct DefenseSummary {
  double base_inferred = 0.0;
  bool base_matched = false;
  double base_accuracy = 0.0;
  double pruned_inferred = 0.0;
  bool pruned_matched = false;
  double pruned_accuracy = 0.0;
  double finetuned_inferred = 0.0;
  bool finetuned_matched = false;
  double finetuned_accuracy = 0.0;
};

DefenseSummary run_defense_experiment(const DeskRunConfig& base, double prune_fraction,
                                      int finetune_epochs, double finetune_lr,
                                      double finetune_share);

struct HeldoutEntry {
  std::uint64_t seed = 0;
  double inferred = 0.0;
  double distance_from_zero = 0.0;
  bool innocent_confirmed = false;  // within tau of the no-watermark slot
};

std::vector<HeldoutEntry> run_heldout_experiment(const DeskRunConfig& base,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 int workers);

struct MiaExperimentConfig {
  int dataset_size = 3000;
  int heldout_pool = 200;
  int height = 32;
  int width = 32;
  int num_classes = 10;
  int num_users = 10;
  int user_size = 40;
  TrainConfig learner_train;
  TrainConfig shadow_train;  // per-user shadow models (tiny data)
  SignatureSpace space = SignatureSpace{12, 15.0};
  int pow_calibration = 5;  // member + heldout samples for the pow threshold
  std::uint64_t seed = 1;
  int workers = 1;
};

struct MiaSummary {
  int users = 0;
  double anw_match_rate = 0.0;
  double anw_advp = 0.0;
  double mia_std_accuracy = 0.0;
  double mia_std_advp = 0.0;
  double mia_pow_accuracy = 0.0;
  double mia_pow_advp = 0.0;
  double mean_shadow_threshold = 0.0;
  double mean_member_loss = 0.0;    // learner losses, user samples in training
  double mean_heldout_loss = 0.0;   // learner losses, held-out samples
  // Fraction of held-out samples the shadow thresholds classify as members
  // (the failure mode: thresholds sit above every learner loss).
  double heldout_classified_member_rate = 0.0;
};

MiaSummary run_mia_experiment(const MiaExperimentConfig& config);

struct MaeExperimentConfig {
  int dataset_size = 1200;
  int height = 32;
  int width = 32;
  int num_classes = 10;
  int user_size = 60;
  double signature = 60.0;
  MaeConfig mae;
  std::uint64_t seed = 1;
};

struct MaeExperimentSummary {
  MaeResult watermarked;
  MaeResult clean;
  bool direction_holds = false;  // MAE(watermarked) > MAE(clean)
};

MaeExperimentSummary run_mae_experiment(const MaeExperimentConfig& config);

struct MultiuserExperimentConfig {
  int dataset_size = 2400;
  int height = 32;
  int width = 32;
  int num_classes = 10;
  MultiuserConfig multiuser;
  std::uint64_t data_seed = 21;
};

struct MultiuserComparison {
  MultiuserSummary shared_basis;
  MultiuserSummary user_bases;
};

// Same dataset and per-user signatures, two basis regimes, plus the
// arbitrary-basis attack (configured inside `multiuser`).
MultiuserComparison run_multiuser_experiment(const MultiuserExperimentConfig& config);

}  // namespace anw
