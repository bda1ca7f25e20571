#include "anw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "anw/parallel.hpp"
#include "anw/rng.hpp"

namespace anw {
namespace {

// Seed stream tags for everything a desk run derives from its master seed.
constexpr std::uint64_t kDataStream = 4;
constexpr std::uint64_t kUserStream = 5;
constexpr std::uint64_t kTrainStream = 6;
constexpr std::uint64_t kNoiseStream = 7;

LabeledDataset slice_dataset(const LabeledDataset& ds, std::size_t begin, std::size_t end) {
  LabeledDataset out;
  out.num_classes = ds.num_classes;
  out.images.assign(ds.images.begin() + static_cast<std::ptrdiff_t>(begin),
                    ds.images.begin() + static_cast<std::ptrdiff_t>(end));
  out.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    ds.labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<std::size_t> pick_user_indices(std::size_t dataset_size, int count,
                                           std::uint64_t seed) {
  if (count < 1 || static_cast<std::size_t>(count) > dataset_size)
    throw std::invalid_argument("desk run: user slice size out of range");
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> indices(order.begin(), order.begin() + count);
  std::sort(indices.begin(), indices.end());
  return indices;
}

BlueChannelKey make_blue_key(const BlueSpec& spec, int height, int width) {
  BlueChannelKey key;
  key.alpha = spec.alpha;
  key.positions = random_positions(height, width, spec.pixel_count, spec.seed);
  Rng bit_rng(Rng::derive(spec.seed, 1));
  key.bits.resize(key.positions.size());
  for (auto& b : key.bits) b = static_cast<std::uint8_t>(bit_rng.below(2));
  return key;
}

std::vector<double> default_alpha_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

double loss_at(const VerificationReport& report, double k) {
  for (const auto& cl : report.per_candidate_losses)
    if (circular_distance(cl.k, k) < 1e-9) return cl.loss;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

DeskRunResult run_desk(const DeskRunConfig& config) {
  config.train.validate();
  const std::uint64_t data_seed = Rng::derive(config.seed, kDataStream);
  const std::uint64_t user_seed = Rng::derive(config.seed, kUserStream);
  const std::uint64_t train_seed = Rng::derive(config.seed, kTrainStream);
  const std::uint64_t noise_seed = Rng::derive(config.seed, kNoiseStream);

  const LabeledDataset full =
      generate_synthetic(config.dataset_size + config.eval_size, config.height, config.width,
                         config.num_classes, data_seed);
  const LabeledDataset train_ds = slice_dataset(full, 0, static_cast<std::size_t>(config.dataset_size));

  const int user_count =
      config.user_count ? *config.user_count
                        : std::max(1, static_cast<int>(std::lround(config.user_share *
                                                                   config.dataset_size)));
  DeskRunResult result;
  result.user_indices = pick_user_indices(train_ds.size(), user_count, user_seed);
  result.basis = config.basis_seed
                     ? [&] { Rng rng(*config.basis_seed); return random_user_basis(rng); }()
                     : yiq_matrix();

  UserPartition user{0, result.user_indices};
  std::optional<WatermarkKey> hue_key;
  std::optional<BlueChannelKey> blue_key;
  std::vector<WatermarkAssignment> assignments;
  if (config.watermark_enabled) {
    if (config.blue) {
      blue_key = make_blue_key(*config.blue, config.height, config.width);
      assignments.push_back({user, std::nullopt, blue_key});
    } else {
      hue_key = WatermarkKey{result.basis, config.signature};
      assignments.push_back({user, hue_key, std::nullopt});
    }
  }

  TrainConfig tc = config.train;
  tc.seed = train_seed;
  TrainResult trained = train(train_ds, assignments, tc);
  result.log = std::move(trained.log);
  result.model = std::move(trained.model);

  std::vector<Image> clean;
  std::vector<int> labels;
  for (std::size_t idx : result.user_indices) {
    clean.push_back(train_ds.images[idx]);
    labels.push_back(train_ds.labels[idx]);
  }

  EvalContext eval;
  eval.normalization = tc.normalization;
  eval.noise = OutputNoise{tc.dp_sigma2, noise_seed};

  if (config.blue) {
    const BlueChannelKey key = blue_key ? *blue_key : make_blue_key(*config.blue, config.height,
                                                                    config.width);
    result.report = grid_search_alpha(result.model, clean, labels, key.positions, key.bits,
                                      default_alpha_grid(), 0.1, eval,
                                      config.watermark_enabled ? std::optional<double>(key.alpha)
                                                               : std::nullopt);
    result.matched = result.report.matched.value_or(false);
  } else {
    const double claimed = config.watermark_enabled ? config.signature : 0.0;
    result.report = verify(result.model, clean, labels, result.basis, config.space, config.method,
                           claimed, eval);
    result.matched = result.report.matched.value_or(false);
  }
  result.report.metadata.model_id = "desk-" + std::to_string(config.seed);
  result.report.metadata.user_id = 0;
  result.inferred = result.report.inferred;

  // Diagnostics: the loss gap the verifier exploits and eval-set accuracy.
  std::vector<Image> marked;
  marked.reserve(clean.size());
  for (const Image& img : clean) {
    if (config.blue)
      marked.push_back(blue_channel_watermark(img, blue_key ? *blue_key
                                                            : make_blue_key(*config.blue,
                                                                            config.height,
                                                                            config.width)));
    else
      marked.push_back(watermark_image(img, WatermarkKey{result.basis, config.signature}));
  }
  result.watermark_loss =
      average_loss(result.model, normalized_batch(marked, tc.normalization), labels);
  result.clean_loss = average_loss(result.model, normalized_batch(clean, tc.normalization), labels);

  if (config.eval_size > 0) {
    const LabeledDataset eval_ds =
        slice_dataset(full, static_cast<std::size_t>(config.dataset_size), full.size());
    result.heldout_accuracy = accuracy(
        result.model, normalized_batch(eval_ds.images, tc.normalization), eval_ds.labels);
  }
  return result;
}

std::vector<DeskRunResult> run_desk_many(const std::vector<DeskRunConfig>& configs, int workers) {
  std::vector<DeskRunResult> results(configs.size());
  parallel_for_index(configs.size(), workers,
                     [&](std::size_t i) { results[i] = run_desk(configs[i]); });
  return results;
}

SweepSummary run_quantity_experiment(const DeskRunConfig& base, const std::vector<int>& counts,
                                     int workers) {
  std::vector<DeskRunConfig> configs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    DeskRunConfig c = base;
    c.user_count = counts[i];
    c.seed = Rng::derive(base.seed, 100 + i);
    configs.push_back(c);
  }
  const std::vector<DeskRunResult> results = run_desk_many(configs, workers);

  SweepSummary summary;
  summary.name = "quantity";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const DeskRunResult& r = results[i];
    summary.entries.push_back({static_cast<double>(counts[i]), r.inferred, r.matched,
                               r.watermark_loss, r.clean_loss, r.heldout_accuracy});
  }
  return summary;
}

SweepSummary run_signature_experiment(const DeskRunConfig& base,
                                      const std::vector<double>& signatures, int workers) {
  std::vector<DeskRunConfig> configs;
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    DeskRunConfig c = base;
    c.signature = signatures[i];
    c.seed = Rng::derive(base.seed, 200 + i);
    configs.push_back(c);
  }
  const std::vector<DeskRunResult> results = run_desk_many(configs, workers);

  SweepSummary summary;
  summary.name = "signatures";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const DeskRunResult& r = results[i];
    summary.entries.push_back({signatures[i], r.inferred, r.matched, r.watermark_loss,
                               r.clean_loss, r.heldout_accuracy});
  }
  return summary;
}

std::vector<AugmentationOutcome> run_augmentation_experiment(const DeskRunConfig& base,
                                                             const std::vector<std::string>& names,
                                                             int workers) {
  std::vector<DeskRunConfig> configs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    DeskRunConfig c = base;
    c.seed = Rng::derive(base.seed, 300 + i);
    const std::string& name = names[i];
    if (name == "cutout") {
      c.train.cutout_size = 8;
    } else if (name == "label_smoothing") {
      c.train.label_smoothing = 0.1;
    } else if (name == "gaussian_noise") {
      c.train.gaussian_sigma2 = 0.1;
    } else if (name == "fgsm") {
      c.train.fgsm_epsilon = 0.01;
    } else if (name == "dp_noise") {
      c.train.dp_sigma2 = 0.1;
    } else if (name == "color_jitter") {
      c.train.jitter = ColorJitterRanges{0.2, 0.2, 0.2, 288.0};
    } else {
      throw std::invalid_argument("unknown augmentation variant: " + name);
    }
    configs.push_back(c);
  }
  const std::vector<DeskRunResult> results = run_desk_many(configs, workers);

  std::vector<AugmentationOutcome> outcomes;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const DeskRunResult& r = results[i];
    AugmentationOutcome o;
    o.name = names[i];
    o.inferred = r.inferred;
    o.matched = r.matched;
    o.heldout_accuracy = r.heldout_accuracy;
    const double at_truth = loss_at(r.report, configs[i].signature);
    const double at_antipode = loss_at(r.report, configs[i].signature + 180.0);
    o.loss_gap = at_antipode - at_truth;
    outcomes.push_back(o);
  }
  return outcomes;
}

DefenseSummary run_defense_experiment(const DeskRunConfig& base, double prune_fraction,
                                      int finetune_epochs, double finetune_lr,
                                      double finetune_share) {
  const DeskRunResult run = run_desk(base);

  DefenseSummary summary;
  summary.base_inferred = run.inferred;
  summary.base_matched = run.matched;
  summary.base_accuracy = run.heldout_accuracy;

  // Rebuild the evaluation material the desk run derived from its seed.
  const LabeledDataset full =
      generate_synthetic(base.dataset_size + base.eval_size, base.height, base.width,
                         base.num_classes, Rng::derive(base.seed, kDataStream));
  const LabeledDataset train_ds = slice_dataset(full, 0, static_cast<std::size_t>(base.dataset_size));
  const LabeledDataset eval_ds =
      slice_dataset(full, static_cast<std::size_t>(base.dataset_size), full.size());

  std::vector<Image> clean;
  std::vector<int> labels;
  for (std::size_t idx : run.user_indices) {
    clean.push_back(train_ds.images[idx]);
    labels.push_back(train_ds.labels[idx]);
  }
  EvalContext eval;
  eval.normalization = base.train.normalization;
  const Tensor eval_batch = normalized_batch(eval_ds.images, base.train.normalization);

  const Classifier pruned = prune(run.model, prune_fraction);
  const VerificationReport prune_report =
      verify(pruned, clean, labels, run.basis, base.space, SearchMethod::Grid, base.signature, eval);
  summary.pruned_inferred = prune_report.inferred;
  summary.pruned_matched = prune_report.matched.value_or(false);
  summary.pruned_accuracy = accuracy(pruned, eval_batch, eval_ds.labels);

  // Fine-tune on a clean slice of the training data (no watermarks).
  const int ft_count = std::max(1, static_cast<int>(std::lround(finetune_share * train_ds.size())));
  const std::vector<std::size_t> ft_indices =
      pick_user_indices(train_ds.size(), ft_count, Rng::derive(base.seed, 8));
  LabeledDataset ft_ds;
  ft_ds.num_classes = train_ds.num_classes;
  for (std::size_t idx : ft_indices) {
    ft_ds.images.push_back(train_ds.images[idx]);
    ft_ds.labels.push_back(train_ds.labels[idx]);
  }
  TrainConfig ft_config = base.train;
  ft_config.seed = Rng::derive(base.seed, 9);
  const Classifier tuned = fine_tune(run.model, ft_ds, finetune_epochs, finetune_lr, ft_config);
  const VerificationReport ft_report =
      verify(tuned, clean, labels, run.basis, base.space, SearchMethod::Grid, base.signature, eval);
  summary.finetuned_inferred = ft_report.inferred;
  summary.finetuned_matched = ft_report.matched.value_or(false);
  summary.finetuned_accuracy = accuracy(tuned, eval_batch, eval_ds.labels);
  return summary;
}

std::vector<HeldoutEntry> run_heldout_experiment(const DeskRunConfig& base,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 int workers) {
  std::vector<DeskRunConfig> configs;
  for (std::uint64_t s : seeds) {
    DeskRunConfig c = base;
    c.watermark_enabled = false;
    c.seed = s;
    configs.push_back(c);
  }
  const std::vector<DeskRunResult> results = run_desk_many(configs, workers);

  std::vector<HeldoutEntry> entries;
  for (std::size_t i = 0; i < results.size(); ++i) {
    HeldoutEntry e;
    e.seed = seeds[i];
    e.inferred = results[i].inferred;
    e.distance_from_zero = circular_distance(results[i].inferred, 0.0);
    e.innocent_confirmed = e.distance_from_zero < base.space.tau;
    entries.push_back(e);
  }
  return entries;
}

MiaSummary run_mia_experiment(const MiaExperimentConfig& config) {
  if (config.num_users < 2) throw std::invalid_argument("mia experiment: need at least 2 users");
  const int pool = config.num_users * config.user_size;
  const LabeledDataset full =
      generate_synthetic(config.dataset_size + pool, config.height, config.width,
                         config.num_classes, Rng::derive(config.seed, 40));
  const LabeledDataset train_ds = slice_dataset(full, 0, static_cast<std::size_t>(config.dataset_size));

  // Carve member users out of the training set, held-out users out of the pool.
  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng carve_rng(Rng::derive(config.seed, 41));
  carve_rng.shuffle(order);

  const std::vector<double> valid = config.space.watermark_candidates();
  const ColorBasis basis = yiq_matrix();

  std::vector<UserPartition> users(static_cast<std::size_t>(config.num_users));
  std::vector<double> signatures(static_cast<std::size_t>(config.num_users));
  std::vector<WatermarkAssignment> assignments;
  for (int u = 0; u < config.num_users; ++u) {
    auto& part = users[static_cast<std::size_t>(u)];
    part.user_id = u;
    part.indices.assign(
        order.begin() + static_cast<std::ptrdiff_t>(u * config.user_size),
        order.begin() + static_cast<std::ptrdiff_t>((u + 1) * config.user_size));
    signatures[static_cast<std::size_t>(u)] = valid[static_cast<std::size_t>(u) % valid.size()];
    assignments.push_back(
        {part, WatermarkKey{basis, signatures[static_cast<std::size_t>(u)]}, std::nullopt});
  }

  TrainConfig learner_tc = config.learner_train;
  learner_tc.seed = Rng::derive(config.seed, 42);
  const TrainResult learner = train(train_ds, assignments, learner_tc);

  MiaSummary summary;
  summary.users = config.num_users;
  const EvalContext eval{learner_tc.normalization, OutputNoise{}};

  // ANW arm: verify every member user against their own signature.
  std::vector<int> anw_matches(static_cast<std::size_t>(config.num_users), 0);
  parallel_for_index(static_cast<std::size_t>(config.num_users), config.workers,
                     [&](std::size_t u) {
    std::vector<Image> clean;
    std::vector<int> labels;
    for (std::size_t idx : users[u].indices) {
      clean.push_back(train_ds.images[idx]);
      labels.push_back(train_ds.labels[idx]);
    }
    const VerificationReport rep =
        grid_search(learner.model, clean, labels, basis, config.space, eval);
    anw_matches[u] = is_match(rep.inferred, signatures[u], config.space.tau) ? 1 : 0;
  });
  const int anw_total = std::accumulate(anw_matches.begin(), anw_matches.end(), 0);
  summary.anw_match_rate = static_cast<double>(anw_total) / config.num_users;
  summary.anw_advp = protection_advantage(
      {anw_total, config.num_users, 1.0 / static_cast<double>(config.space.slots)});

  // Per-user average learner loss on member data (as trained: watermarked).
  std::vector<double> member_losses(static_cast<std::size_t>(config.num_users));
  for (int u = 0; u < config.num_users; ++u) {
    std::vector<Image> marked;
    std::vector<int> labels;
    for (std::size_t idx : users[static_cast<std::size_t>(u)].indices) {
      marked.push_back(watermark_image(train_ds.images[idx],
                                       WatermarkKey{basis, signatures[static_cast<std::size_t>(u)]}));
      labels.push_back(train_ds.labels[idx]);
    }
    member_losses[static_cast<std::size_t>(u)] =
        average_loss(learner.model, normalized_batch(marked, learner_tc.normalization), labels);
  }

  // Held-out users: clean slices of the generated pool, never trained on.
  std::vector<double> heldout_losses(static_cast<std::size_t>(config.num_users));
  for (int u = 0; u < config.num_users; ++u) {
    const std::size_t begin = static_cast<std::size_t>(config.dataset_size + u * config.user_size);
    std::vector<Image> images(full.images.begin() + static_cast<std::ptrdiff_t>(begin),
                              full.images.begin() + static_cast<std::ptrdiff_t>(begin + static_cast<std::size_t>(config.user_size)));
    std::vector<int> labels(full.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                            full.labels.begin() + static_cast<std::ptrdiff_t>(begin + static_cast<std::size_t>(config.user_size)));
    heldout_losses[static_cast<std::size_t>(u)] =
        average_loss(learner.model, normalized_batch(images, learner_tc.normalization), labels);
  }
  summary.mean_member_loss =
      std::accumulate(member_losses.begin(), member_losses.end(), 0.0) / config.num_users;
  summary.mean_heldout_loss =
      std::accumulate(heldout_losses.begin(), heldout_losses.end(), 0.0) / config.num_users;

  // Shadow models: each user trains on their own published (watermarked)
  // images and takes the mean per-sample training loss as the threshold.
  std::vector<double> thresholds(static_cast<std::size_t>(config.num_users));
  parallel_for_index(static_cast<std::size_t>(config.num_users), config.workers,
                     [&](std::size_t u) {
    LabeledDataset own;
    own.num_classes = train_ds.num_classes;
    std::vector<Image> marked;
    for (std::size_t idx : users[u].indices) {
      own.images.push_back(
          watermark_image(train_ds.images[idx], WatermarkKey{basis, signatures[u]}));
      own.labels.push_back(train_ds.labels[idx]);
    }
    TrainConfig shadow_tc = config.shadow_train;
    shadow_tc.seed = Rng::derive(Rng::derive(config.seed, 43), u);
    const TrainResult shadow = train(own, {}, shadow_tc);
    std::vector<double> losses;
    for (std::size_t i = 0; i < own.size(); ++i) {
      losses.push_back(average_loss(shadow.model,
                                    normalized_batch({own.images[i]}, shadow_tc.normalization),
                                    {own.labels[i]}));
    }
    thresholds[u] = mia_std_threshold(losses).epsilon;
  });
  summary.mean_shadow_threshold =
      std::accumulate(thresholds.begin(), thresholds.end(), 0.0) / config.num_users;
  const MiaThreshold shared_std{summary.mean_shadow_threshold, MiaThreshold::Source::Std, 0.0};

  int std_correct = 0;
  int heldout_in = 0;
  for (int u = 0; u < config.num_users; ++u) {
    if (mia_infer(member_losses[static_cast<std::size_t>(u)], shared_std)) ++std_correct;
    if (mia_infer(heldout_losses[static_cast<std::size_t>(u)], shared_std))
      ++heldout_in;  // misclassified as member
    else
      ++std_correct;
  }
  const int total_units = 2 * config.num_users;
  summary.mia_std_accuracy = static_cast<double>(std_correct) / total_units;
  summary.mia_std_advp = protection_advantage({std_correct, total_units, 0.5});
  summary.heldout_classified_member_rate = static_cast<double>(heldout_in) / config.num_users;

  // MIA-pow: calibrate on the first few member / held-out users, judge the rest.
  const int cal = std::min(config.pow_calibration, config.num_users - 1);
  std::vector<double> cal_member(member_losses.begin(), member_losses.begin() + cal);
  std::vector<double> cal_heldout(heldout_losses.begin(), heldout_losses.begin() + cal);
  const MiaThreshold pow = mia_pow_threshold(cal_member, cal_heldout);
  int pow_correct = 0;
  int pow_units = 0;
  for (int u = cal; u < config.num_users; ++u) {
    if (mia_infer(member_losses[static_cast<std::size_t>(u)], pow)) ++pow_correct;
    if (!mia_infer(heldout_losses[static_cast<std::size_t>(u)], pow)) ++pow_correct;
    pow_units += 2;
  }
  summary.mia_pow_accuracy = pow_units ? static_cast<double>(pow_correct) / pow_units : 0.0;
  summary.mia_pow_advp =
      pow_units ? protection_advantage({pow_correct, pow_units, 0.5}) : 0.0;
  return summary;
}

MaeExperimentSummary run_mae_experiment(const MaeExperimentConfig& config) {
  const LabeledDataset ds = generate_synthetic(config.dataset_size, config.height, config.width,
                                               config.num_classes, Rng::derive(config.seed, 50));
  const std::vector<std::size_t> indices =
      pick_user_indices(ds.size(), config.user_size, Rng::derive(config.seed, 51));
  UserPartition user{0, indices};

  MaeConfig mae = config.mae;
  mae.seed = Rng::derive(config.seed, 52);

  MaeExperimentSummary summary;
  const WatermarkKey key{yiq_matrix(), config.signature};
  summary.watermarked = memorization_estimate(ds, user, key, mae);
  summary.clean = memorization_estimate(ds, user, std::nullopt, mae);
  summary.direction_holds = summary.watermarked.estimate > summary.clean.estimate;
  return summary;
}

MultiuserComparison run_multiuser_experiment(const MultiuserExperimentConfig& config) {
  const LabeledDataset ds = generate_synthetic(config.dataset_size, config.height, config.width,
                                               config.num_classes, config.data_seed);
  MultiuserComparison cmp;
  MultiuserConfig shared = config.multiuser;
  shared.shared_basis = true;
  cmp.shared_basis = multiuser_experiment(ds, shared);

  MultiuserConfig specific = config.multiuser;
  specific.shared_basis = false;
  cmp.user_bases = multiuser_experiment(ds, specific);
  return cmp;
}

}  // namespace anw
