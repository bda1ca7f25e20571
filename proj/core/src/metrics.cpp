#include "anw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "anw/parallel.hpp"
#include "anw/rng.hpp"

namespace anw {
namespace {

constexpr double kPi = 3.14159265358979323846;

LabeledDataset subset_dataset(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
  LabeledDataset out;
  out.num_classes = ds.num_classes;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    out.images.push_back(ds.images[idx]);
    out.labels.push_back(ds.labels[idx]);
  }
  return out;
}

double accuracy_on_images(const Classifier& net, const std::vector<Image>& images,
                          const std::vector<int>& labels, const NormalizationSpec& norm) {
  return accuracy(net, normalized_batch(images, norm), labels);
}

}  // namespace

void BernoulliOutcome::validate() const {
  if (trials < 1) throw std::invalid_argument("BernoulliOutcome: trials must be >= 1");
  if (matches < 0 || matches > trials)
    throw std::invalid_argument("BernoulliOutcome: matches must be in [0, trials]");
  if (!(guess_probability > 0.0 && guess_probability < 1.0))
    throw std::invalid_argument("BernoulliOutcome: guess probability must be in (0,1)");
}

double protection_advantage(const BernoulliOutcome& outcome) {
  outcome.validate();
  return (outcome.matches - outcome.trials * outcome.guess_probability) / outcome.trials;
}

MiaThreshold mia_std_threshold(const std::vector<double>& known_train_losses) {
  if (known_train_losses.empty())
    throw std::invalid_argument("mia_std_threshold: empty loss list");
  const double sum = std::accumulate(known_train_losses.begin(), known_train_losses.end(), 0.0);
  return {sum / static_cast<double>(known_train_losses.size()), MiaThreshold::Source::Std, 0.0};
}

MiaThreshold mia_pow_threshold(const std::vector<double>& train_losses,
                               const std::vector<double>& heldout_losses) {
  if (train_losses.empty() || heldout_losses.empty())
    throw std::invalid_argument("mia_pow_threshold: both loss lists must be non-empty");

  std::vector<double> pooled = train_losses;
  pooled.insert(pooled.end(), heldout_losses.begin(), heldout_losses.end());
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> candidates;
  candidates.reserve(pooled.size() + 1);
  candidates.push_back(pooled.front() - 1.0);  // nobody is a member
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
    if (pooled[i] != pooled[i + 1]) candidates.push_back(0.5 * (pooled[i] + pooled[i + 1]));
  candidates.push_back(pooled.back() + 1.0);  // everyone is a member

  const double n = static_cast<double>(train_losses.size() + heldout_losses.size());
  double best_eps = candidates.front();
  double best_acc = -1.0;
  for (double eps : candidates) {
    int correct = 0;
    for (double l : train_losses) correct += (l < eps) ? 1 : 0;
    for (double l : heldout_losses) correct += (l >= eps) ? 1 : 0;
    const double acc = correct / n;
    if (acc > best_acc) {
      best_acc = acc;
      best_eps = eps;
    }
  }
  return {best_eps, MiaThreshold::Source::Pow, best_acc};
}

bool mia_infer(double loss, const MiaThreshold& threshold) { return loss < threshold.epsilon; }

double signature_cosine(double inferred_degrees, double true_degrees) {
  return std::cos((inferred_degrees - true_degrees) * kPi / 180.0);
}

MaeResult memorization_estimate(const LabeledDataset& dataset, const UserPartition& user,
                                const std::optional<WatermarkKey>& key, const MaeConfig& config) {
  if (config.num_models < 2) throw std::invalid_argument("memorization_estimate: need K >= 2");
  if (config.num_models % 2 != 0)
    throw std::invalid_argument("memorization_estimate: K must be even");
  if (!(config.subset_fraction > 0.0 && config.subset_fraction <= 1.0))
    throw std::invalid_argument("memorization_estimate: subset_fraction must be in (0,1]");
  if (user.indices.empty()) throw std::invalid_argument("memorization_estimate: empty user slice");

  std::vector<char> is_user(dataset.size(), 0);
  for (std::size_t idx : user.indices) {
    if (idx >= dataset.size())
      throw std::invalid_argument("memorization_estimate: user index out of range");
    is_user[idx] = 1;
  }
  std::vector<std::size_t> rest;
  rest.reserve(dataset.size() - user.indices.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (!is_user[i]) rest.push_back(i);

  // The user's images as the trained models see them.
  std::vector<Image> eval_images;
  std::vector<int> eval_labels;
  for (std::size_t idx : user.indices) {
    eval_images.push_back(key ? watermark_image(dataset.images[idx], *key) : dataset.images[idx]);
    eval_labels.push_back(dataset.labels[idx]);
  }

  const int K = config.num_models;
  std::vector<double> acc(static_cast<std::size_t>(K), 0.0);

  parallel_for_index(static_cast<std::size_t>(K), config.workers, [&](std::size_t j) {
    const bool include_user = j < static_cast<std::size_t>(K / 2);
    Rng rng(Rng::derive(Rng::derive(config.seed, 10), j));
    std::vector<std::size_t> pool = rest;
    rng.shuffle(pool);
    const std::size_t take =
        static_cast<std::size_t>(config.subset_fraction * static_cast<double>(pool.size()));
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));

    std::vector<WatermarkAssignment> assignments;
    if (include_user) {
      UserPartition local;
      local.user_id = user.user_id;
      for (std::size_t t = 0; t < user.indices.size(); ++t)
        local.indices.push_back(chosen.size() + t);
      chosen.insert(chosen.end(), user.indices.begin(), user.indices.end());
      if (key) assignments.push_back({local, *key, std::nullopt});
    }

    TrainConfig tc = config.train;
    tc.seed = Rng::derive(Rng::derive(config.seed, 20), j);
    const TrainResult run = train(subset_dataset(dataset, chosen), assignments, tc);
    acc[j] = accuracy_on_images(run.model, eval_images, eval_labels, tc.normalization);
  });

  MaeResult result;
  for (int j = 0; j < K / 2; ++j) result.included_accuracy += acc[static_cast<std::size_t>(j)];
  for (int j = K / 2; j < K; ++j) result.excluded_accuracy += acc[static_cast<std::size_t>(j)];
  result.included_accuracy /= K / 2;
  result.excluded_accuracy /= K / 2;
  result.estimate = result.included_accuracy - result.excluded_accuracy;
  return result;
}

MultiuserSummary multiuser_experiment(const LabeledDataset& dataset,
                                      const MultiuserConfig& config) {
  if (!(config.watermark_ratio >= 0.0 && config.watermark_ratio <= 1.0))
    throw std::invalid_argument("multiuser_experiment: ratio must be in [0,1]");
  if (config.num_users < 1)
    throw std::invalid_argument("multiuser_experiment: need at least one user");

  const std::vector<UserPartition> partitions =
      split_users(dataset.size(), config.num_users, Rng::derive(config.seed, 1));
  const int num_watermarking =
      static_cast<int>(std::lround(config.watermark_ratio * config.num_users));
  if (num_watermarking == 0) {
    MultiuserSummary empty;
    empty.note = "watermark ratio is 0: no watermarking users to verify";
    return empty;
  }

  // Per-user keys drawn sequentially so worker count never changes them.
  const std::vector<double> valid = config.space.watermark_candidates();
  std::vector<WatermarkKey> keys;
  std::vector<WatermarkAssignment> assignments;
  for (int u = 0; u < num_watermarking; ++u) {
    Rng rng(Rng::derive(Rng::derive(config.seed, 2), static_cast<std::uint64_t>(u)));
    const double signature = valid[static_cast<std::size_t>(rng.below(valid.size()))];
    const ColorBasis basis = config.shared_basis ? yiq_matrix() : random_user_basis(rng);
    keys.push_back({basis, signature});
    assignments.push_back({partitions[static_cast<std::size_t>(u)], keys.back(), std::nullopt});
  }

  TrainConfig tc = config.train;
  tc.seed = Rng::derive(config.seed, 3);
  const TrainResult run = train(dataset, assignments, tc);

  MultiuserSummary summary;
  summary.users.resize(static_cast<std::size_t>(num_watermarking));
  std::vector<int> arb_matches(static_cast<std::size_t>(num_watermarking), 0);

  parallel_for_index(static_cast<std::size_t>(num_watermarking), config.workers,
                     [&](std::size_t u) {
    const UserPartition& part = partitions[u];
    std::vector<Image> clean;
    std::vector<int> labels;
    for (std::size_t idx : part.indices) {
      clean.push_back(dataset.images[idx]);
      labels.push_back(dataset.labels[idx]);
    }
    EvalContext eval;
    eval.normalization = tc.normalization;
    const VerificationReport rep =
        grid_search(run.model, clean, labels, keys[u].basis, config.space, eval);
    MultiuserUserResult& res = summary.users[u];
    res.user_id = part.user_id;
    res.signature = keys[u].signature_degrees;
    res.inferred = rep.inferred;
    res.matched = is_match(rep.inferred, keys[u].signature_degrees, config.space.tau);

    for (int t = 0; t < config.arbitrary_bases_per_user; ++t) {
      Rng arb_rng(Rng::derive(Rng::derive(Rng::derive(config.seed, 4), u),
                              static_cast<std::uint64_t>(t)));
      const ColorBasis attacker = random_user_basis(arb_rng);
      const VerificationReport arep =
          grid_search(run.model, clean, labels, attacker, config.space, eval);
      if (is_match(arep.inferred, keys[u].signature_degrees, config.space.tau)) ++arb_matches[u];
    }
  });

  int matched = 0;
  for (const auto& res : summary.users) matched += res.matched ? 1 : 0;
  summary.match_rate = static_cast<double>(matched) / num_watermarking;
  summary.arbitrary_trials = num_watermarking * config.arbitrary_bases_per_user;
  if (summary.arbitrary_trials > 0) {
    const int total = std::accumulate(arb_matches.begin(), arb_matches.end(), 0);
    summary.arbitrary_match_rate = static_cast<double>(total) / summary.arbitrary_trials;
  }
  return summary;
}

}  // namespace anw
