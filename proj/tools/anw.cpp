// anw: anti-neuron watermarking toolkit.
//
// Subcommands: synth, watermark, train, verify, metrics, experiment.
// Every subcommand accepts --config <file.json>; explicit flags override
// config values, and each command echoes its fully resolved configuration
// into its JSON output so a run can be replayed exactly.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anw/dataset_io.hpp"
#include "anw/error.hpp"
#include "anw/experiments.hpp"
#include "anw/metrics.hpp"
#include "anw/parallel.hpp"
#include "anw/rng.hpp"
#include "anw/serialize.hpp"
#include "anw/synthetic.hpp"
#include "anw/train.hpp"
#include "anw/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumerical = 3;

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(anw::read_text_file(path));
  } catch (const json::exception& e) {
    throw anw::FormatError("config", std::string("config is not valid JSON: ") + e.what());
  }
}

// Flag wins when the user typed it; otherwise the config value, else the
// built-in default already stored in `value`.
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const json& config,
           const std::string& key, T& value) {
  if (app.count(flag) > 0) return;
  if (config.contains(key)) value = config.at(key).get<T>();
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

json train_config_to_json(const anw::TrainConfig& tc) {
  return json{{"epochs", tc.epochs},
              {"base_lr", tc.base_lr},
              {"lr_decay_factor", tc.lr_decay_factor},
              {"lr_decay_every", tc.lr_decay_every},
              {"momentum", tc.momentum},
              {"batch_size", tc.batch_size},
              {"seed", tc.seed},
              {"crop_pad", tc.crop_pad},
              {"horizontal_flip", tc.horizontal_flip},
              {"cutout_size", tc.cutout_size},
              {"label_smoothing", tc.label_smoothing},
              {"gaussian_sigma2", tc.gaussian_sigma2},
              {"fgsm_epsilon", tc.fgsm_epsilon},
              {"jitter",
               {{"brightness", tc.jitter.brightness},
                {"contrast", tc.jitter.contrast},
                {"saturation", tc.jitter.saturation},
                {"hue_degrees", tc.jitter.hue_degrees}}},
              {"dp_sigma2", tc.dp_sigma2},
              {"normalization",
               {{"mean", tc.normalization.mean}, {"std", tc.normalization.std}}},
              {"conv_width", tc.conv_width}};
}

void merge_train_config(const CLI::App& app, const json& config, anw::TrainConfig& tc) {
  const json sub = config.contains("train") ? config.at("train") : json::object();
  merge(app, "--epochs", sub, "epochs", tc.epochs);
  merge(app, "--lr", sub, "base_lr", tc.base_lr);
  merge(app, "--lr-decay", sub, "lr_decay_factor", tc.lr_decay_factor);
  merge(app, "--lr-decay-every", sub, "lr_decay_every", tc.lr_decay_every);
  merge(app, "--momentum", sub, "momentum", tc.momentum);
  merge(app, "--batch", sub, "batch_size", tc.batch_size);
  merge(app, "--train-seed", sub, "seed", tc.seed);
  merge(app, "--crop-pad", sub, "crop_pad", tc.crop_pad);
  merge(app, "--flip", sub, "horizontal_flip", tc.horizontal_flip);
  merge(app, "--cutout", sub, "cutout_size", tc.cutout_size);
  merge(app, "--label-smoothing", sub, "label_smoothing", tc.label_smoothing);
  merge(app, "--gaussian-sigma2", sub, "gaussian_sigma2", tc.gaussian_sigma2);
  merge(app, "--fgsm-epsilon", sub, "fgsm_epsilon", tc.fgsm_epsilon);
  merge(app, "--dp-sigma2", sub, "dp_sigma2", tc.dp_sigma2);
  merge(app, "--width", sub, "conv_width", tc.conv_width);
  merge(app, "--jitter-brightness", sub, "jitter_brightness", tc.jitter.brightness);
  merge(app, "--jitter-contrast", sub, "jitter_contrast", tc.jitter.contrast);
  merge(app, "--jitter-saturation", sub, "jitter_saturation", tc.jitter.saturation);
  merge(app, "--jitter-hue", sub, "jitter_hue", tc.jitter.hue_degrees);
  if (sub.contains("normalization")) {
    tc.normalization.mean = sub.at("normalization").at("mean").get<std::array<double, 3>>();
    tc.normalization.std = sub.at("normalization").at("std").get<std::array<double, 3>>();
  }
}

void add_train_flags(CLI::App* cmd, anw::TrainConfig& tc) {
  cmd->add_option("--epochs", tc.epochs, "Training epochs");
  cmd->add_option("--lr", tc.base_lr, "Initial learning rate");
  cmd->add_option("--lr-decay", tc.lr_decay_factor, "Step decay factor");
  cmd->add_option("--lr-decay-every", tc.lr_decay_every, "Epochs between decays");
  cmd->add_option("--momentum", tc.momentum, "SGD momentum");
  cmd->add_option("--batch", tc.batch_size, "Batch size");
  cmd->add_option("--train-seed", tc.seed, "Training seed");
  cmd->add_option("--crop-pad", tc.crop_pad, "Random-crop padding");
  cmd->add_option("--flip", tc.horizontal_flip, "Random horizontal flip (0/1)");
  cmd->add_option("--cutout", tc.cutout_size, "Cutout window size");
  cmd->add_option("--label-smoothing", tc.label_smoothing, "Label smoothing alpha");
  cmd->add_option("--gaussian-sigma2", tc.gaussian_sigma2, "Input gaussian noise variance");
  cmd->add_option("--fgsm-epsilon", tc.fgsm_epsilon, "FGSM adversarial-training epsilon");
  cmd->add_option("--dp-sigma2", tc.dp_sigma2, "Output-confidence noise variance");
  cmd->add_option("--width", tc.conv_width, "First conv width (capacity knob)");
  cmd->add_option("--jitter-brightness", tc.jitter.brightness, "Color-jitter brightness range");
  cmd->add_option("--jitter-contrast", tc.jitter.contrast, "Color-jitter contrast range");
  cmd->add_option("--jitter-saturation", tc.jitter.saturation, "Color-jitter saturation range");
  cmd->add_option("--jitter-hue", tc.jitter.hue_degrees, "Color-jitter hue range (degrees)");
}

struct KeyFlags {
  std::string key_path;
  std::string basis = "yiq";
  std::uint64_t basis_seed = 0;
  double signature = 60.0;
  double blue_alpha = 0.0;
  int blue_count = 512;
  std::uint64_t blue_seed = 99;
};

void add_key_flags(CLI::App* cmd, KeyFlags& kf) {
  cmd->add_option("--key", kf.key_path, "Key file (JSON)");
  cmd->add_option("--basis", kf.basis, "Basis: yiq | random");
  cmd->add_option("--basis-seed", kf.basis_seed, "Seed for a random basis");
  cmd->add_option("--signature", kf.signature, "Hue signature in degrees");
  cmd->add_option("--blue-alpha", kf.blue_alpha, "Blue-channel intensity (enables blue mode)");
  cmd->add_option("--blue-count", kf.blue_count, "Blue-channel pixel count");
  cmd->add_option("--blue-seed", kf.blue_seed, "Blue-channel position/bit seed");
}

// Resolve key flags into a key file structure (with secrets).
anw::KeyFile resolve_key(const KeyFlags& kf, int height, int width) {
  if (!kf.key_path.empty()) return anw::key_from_json_text(anw::read_text_file(kf.key_path));
  if (kf.blue_alpha > 0.0) {
    anw::BlueChannelKey key;
    key.alpha = kf.blue_alpha;
    key.positions = anw::random_positions(height, width, kf.blue_count, kf.blue_seed);
    anw::Rng bit_rng(anw::Rng::derive(kf.blue_seed, 1));
    key.bits.resize(key.positions.size());
    for (auto& b : key.bits) b = static_cast<std::uint8_t>(bit_rng.below(2));
    return anw::KeyFile::blue(key);
  }
  anw::ColorBasis basis;
  if (kf.basis == "yiq") {
    basis = anw::yiq_matrix();
  } else if (kf.basis == "random") {
    anw::Rng rng(kf.basis_seed);
    basis = anw::random_user_basis(rng);
  } else {
    throw CLI::ValidationError("--basis must be yiq or random");
  }
  return anw::KeyFile::hue({basis, kf.signature});
}

json key_summary(const anw::KeyFile& key, bool redact_secret) {
  json j = json::parse(anw::key_to_json(key));
  if (redact_secret) {
    j.erase("signature");
    j.erase("alpha");
  }
  return j;
}

std::vector<std::size_t> resolve_user_indices(const CLI::App& cmd, const json& config,
                                              const std::string& indices_flag,
                                              const std::string& indices_file, double user_share,
                                              std::uint64_t user_seed, std::size_t dataset_size) {
  std::string text = indices_flag;
  if (text.empty() && config.contains("user") && config.at("user").contains("indices")) {
    const auto list = config.at("user").at("indices").get<std::vector<std::size_t>>();
    return list;
  }
  if (!indices_file.empty()) text = anw::read_text_file(indices_file);
  if (!text.empty()) return parse_index_list(text);

  const int count =
      std::max(1, static_cast<int>(std::lround(user_share * static_cast<double>(dataset_size))));
  std::vector<std::size_t> order(dataset_size);
  for (std::size_t i = 0; i < dataset_size; ++i) order[i] = i;
  anw::Rng rng(user_seed);
  rng.shuffle(order);
  std::vector<std::size_t> indices(order.begin(), order.begin() + count);
  std::sort(indices.begin(), indices.end());
  (void)cmd;
  return indices;
}

void ensure_dir(const std::string& path) {
  if (!path.empty()) fs::create_directories(path);
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(CLI::App& app, const std::string& config_path, std::string out, int count,
              int height, int width, int classes, std::uint64_t seed) {
  const json config = load_config_file(config_path);
  const json sub = config.contains("dataset") ? config.at("dataset") : json::object();
  merge(app, "--out", config, "out", out);
  merge(app, "--count", sub, "count", count);
  merge(app, "--height", sub, "height", height);
  merge(app, "--width", sub, "width", width);
  merge(app, "--classes", sub, "num_classes", classes);
  merge(app, "--seed", sub, "seed", seed);
  if (out.empty()) throw CLI::ValidationError("synth requires --out");

  const anw::LabeledDataset ds = anw::generate_synthetic(count, height, width, classes, seed);
  anw::write_dataset(ds, out);

  json echo{{"command", "synth"},
            {"out", out},
            {"dataset",
             {{"count", count}, {"height", height}, {"width", width}, {"num_classes", classes},
              {"seed", seed}}}};
  std::vector<int> per_class(static_cast<std::size_t>(classes), 0);
  for (int label : ds.labels) per_class[static_cast<std::size_t>(label)]++;
  echo["per_class_counts"] = per_class;
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// watermark

int cmd_watermark(CLI::App& app, const std::string& config_path, std::string in, std::string out,
                  KeyFlags& kf, std::string indices, std::string indices_file, double user_share,
                  std::uint64_t user_seed, bool split_secret, std::string key_out,
                  std::string manifest_out) {
  const json config = load_config_file(config_path);
  merge(app, "--in", config, "in", in);
  merge(app, "--out", config, "out", out);
  if (in.empty() || out.empty()) throw CLI::ValidationError("watermark requires --in and --out");

  const anw::LabeledDataset ds = anw::read_dataset(in);
  const int h = ds.images[0].height, w = ds.images[0].width;
  const anw::KeyFile key = resolve_key(kf, h, w);
  const std::vector<std::size_t> user =
      resolve_user_indices(app, config, indices, indices_file, user_share, user_seed, ds.size());

  anw::LabeledDataset marked = ds;
  for (std::size_t idx : user) {
    if (idx >= ds.size()) throw std::invalid_argument("watermark: index out of range");
    if (key.type == "hue")
      marked.images[idx] = anw::watermark_image(ds.images[idx], key.to_watermark_key());
    else
      marked.images[idx] = anw::blue_channel_watermark(ds.images[idx], key.to_blue_key());
  }
  anw::write_dataset(marked, out);

  if (key_out.empty()) key_out = out + ".key.json";
  anw::KeyFile stored = key;
  if (split_secret) {
    stored.signature_degrees.reset();
    stored.alpha.reset();
  }
  anw::write_text_file(key_out, anw::key_to_json(stored));

  if (manifest_out.empty()) manifest_out = out + ".manifest.json";
  json manifest{{"input", in}, {"output", out}, {"indices", user}, {"count", user.size()}};
  anw::write_text_file(manifest_out, manifest.dump(2) + "\n");

  json echo{{"command", "watermark"}, {"in", in},   {"out", out},
            {"key_out", key_out},     {"manifest_out", manifest_out},
            {"split_secret", split_secret}, {"watermarked_count", user.size()},
            {"key", key_summary(key, split_secret)}};
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(CLI::App& app, const std::string& config_path, std::string data, std::string out,
              std::string log_path, KeyFlags& kf, std::string indices, std::string indices_file,
              double user_share, std::uint64_t user_seed, anw::TrainConfig& tc,
              bool apply_watermark) {
  const json config = load_config_file(config_path);
  merge(app, "--data", config, "data", data);
  merge(app, "--out", config, "out", out);
  merge(app, "--log", config, "log", log_path);
  merge_train_config(app, config, tc);
  if (data.empty() || out.empty()) throw CLI::ValidationError("train requires --data and --out");

  const anw::LabeledDataset ds = anw::read_dataset(data);
  std::vector<anw::WatermarkAssignment> assignments;
  json key_echo = nullptr;
  if (apply_watermark) {
    const anw::KeyFile key = resolve_key(kf, ds.images[0].height, ds.images[0].width);
    anw::UserPartition user{0, resolve_user_indices(app, config, indices, indices_file, user_share,
                                                    user_seed, ds.size())};
    if (key.type == "hue")
      assignments.push_back({user, key.to_watermark_key(), std::nullopt});
    else
      assignments.push_back({user, std::nullopt, key.to_blue_key()});
    key_echo = key_summary(key, false);
    key_echo["user_count"] = user.indices.size();
  }

  const anw::TrainResult result = anw::train(ds, assignments, tc);
  anw::save_checkpoint(result.model, out);
  if (!log_path.empty()) anw::write_train_log_csv(log_path, result.log);

  json echo{{"command", "train"},
            {"data", data},
            {"out", out},
            {"log", log_path},
            {"train", train_config_to_json(tc)},
            {"final_loss", result.log.back().loss},
            {"final_train_accuracy", result.log.back().accuracy}};
  if (!key_echo.is_null()) echo["watermark"] = key_echo;
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(CLI::App& app, const std::string& config_path, std::string model_path,
               std::string data, KeyFlags& kf, int slots, double tau, std::string method,
               double claimed, bool has_claimed, std::string report_path, std::string curve_path,
               double dp_sigma2, std::uint64_t noise_seed, std::string alphas_flag) {
  const json config = load_config_file(config_path);
  merge(app, "--model", config, "model", model_path);
  merge(app, "--data", config, "data", data);
  merge(app, "--slots", config, "slots", slots);
  merge(app, "--tau", config, "tau", tau);
  merge(app, "--method", config, "method", method);
  if (model_path.empty() || data.empty())
    throw CLI::ValidationError("verify requires --model and --data");

  const anw::Classifier model = anw::load_checkpoint(model_path);
  const anw::LabeledDataset ds = anw::read_dataset(data);

  anw::EvalContext eval;
  eval.noise = anw::OutputNoise{dp_sigma2, noise_seed};
  if (config.contains("normalization")) {
    eval.normalization.mean = config.at("normalization").at("mean").get<std::array<double, 3>>();
    eval.normalization.std = config.at("normalization").at("std").get<std::array<double, 3>>();
  }

  const anw::KeyFile key = resolve_key(kf, ds.images[0].height, ds.images[0].width);
  std::optional<double> claim;
  if (has_claimed) claim = claimed;

  anw::VerificationReport report;
  if (key.type == "blue") {
    std::vector<double> alphas;
    if (!alphas_flag.empty()) {
      std::stringstream ss(alphas_flag);
      std::string item;
      while (std::getline(ss, item, ',')) alphas.push_back(std::stod(item));
    } else {
      for (int i = 1; i <= 9; ++i) alphas.push_back(0.1 * i);
    }
    report = anw::grid_search_alpha(model, ds.images, ds.labels, key.positions, key.bits, alphas,
                                    0.1, eval, claim);
  } else {
    const anw::SignatureSpace space = anw::SignatureSpace::make(slots, tau);
    const anw::SearchMethod m =
        method == "gradient" ? anw::SearchMethod::Gradient : anw::SearchMethod::Grid;
    if (method != "grid" && method != "gradient")
      throw CLI::ValidationError("--method must be grid or gradient");
    report = anw::verify(model, ds.images, ds.labels, key.basis.value(), space, m, claim, eval);
  }
  report.metadata.model_id = fs::path(model_path).filename().string();

  const std::string report_json = anw::report_to_json(report);
  if (!report_path.empty()) anw::write_text_file(report_path, report_json);
  if (!curve_path.empty()) anw::write_loss_curve_csv(curve_path, report);

  json echo{{"command", "verify"}, {"model", model_path}, {"data", data},
            {"method", method},    {"slots", slots},      {"tau", tau},
            {"report", json::parse(report_json)}};
  if (has_claimed) echo["claimed"] = claimed;
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics

int cmd_metrics_advp(int matches, int trials, double guess_p) {
  const double adv = anw::protection_advantage({matches, trials, guess_p});
  json echo{{"command", "metrics advp"}, {"matches", matches}, {"trials", trials},
            {"guess_probability", guess_p}, {"protection_advantage", adv}};
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

int cmd_metrics_cosine(double inferred, double truth) {
  json echo{{"command", "metrics cosine"},
            {"inferred", inferred},
            {"true", truth},
            {"cosine", anw::signature_cosine(inferred, truth)}};
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_metrics_mia(const std::string& kind, const std::string& train_losses,
                    const std::string& heldout_losses) {
  const std::vector<double> train = parse_double_list(train_losses);
  json echo{{"command", "metrics mia"}, {"kind", kind}};
  if (kind == "std") {
    const anw::MiaThreshold t = anw::mia_std_threshold(train);
    echo["epsilon"] = t.epsilon;
  } else if (kind == "pow") {
    const anw::MiaThreshold t = anw::mia_pow_threshold(train, parse_double_list(heldout_losses));
    echo["epsilon"] = t.epsilon;
    echo["calibration_accuracy"] = t.calibration_accuracy;
  } else {
    throw CLI::ValidationError("--kind must be std or pow");
  }
  std::cout << echo.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

json sweep_to_json(const anw::SweepSummary& sweep) {
  json entries = json::array();
  for (const auto& e : sweep.entries) {
    entries.push_back({{"parameter", e.parameter},
                       {"inferred", e.inferred},
                       {"matched", e.matched},
                       {"watermark_loss", e.watermark_loss},
                       {"clean_loss", e.clean_loss},
                       {"heldout_accuracy", e.heldout_accuracy}});
  }
  return json{{"name", sweep.name}, {"entries", entries}};
}

json desk_config_to_json(const anw::DeskRunConfig& c) {
  json j{{"dataset_size", c.dataset_size},
         {"eval_size", c.eval_size},
         {"height", c.height},
         {"width", c.width},
         {"num_classes", c.num_classes},
         {"user_share", c.user_share},
         {"watermark_enabled", c.watermark_enabled},
         {"signature", c.signature},
         {"space", {{"slots", c.space.slots}, {"tau", c.space.tau}}},
         {"method", c.method == anw::SearchMethod::Grid ? "grid" : "gradient"},
         {"seed", c.seed},
         {"train", train_config_to_json(c.train)}};
  if (c.user_count) j["user_count"] = *c.user_count;
  if (c.basis_seed) j["basis_seed"] = *c.basis_seed;
  if (c.blue)
    j["blue"] = {{"alpha", c.blue->alpha}, {"pixel_count", c.blue->pixel_count},
                 {"seed", c.blue->seed}};
  return j;
}

void apply_desk_config(const json& config, anw::DeskRunConfig& desk) {
  if (config.contains("desk")) {
    const json& d = config.at("desk");
    if (d.contains("dataset_size")) desk.dataset_size = d.at("dataset_size").get<int>();
    if (d.contains("eval_size")) desk.eval_size = d.at("eval_size").get<int>();
    if (d.contains("height")) desk.height = d.at("height").get<int>();
    if (d.contains("width")) desk.width = d.at("width").get<int>();
    if (d.contains("num_classes")) desk.num_classes = d.at("num_classes").get<int>();
    if (d.contains("user_share")) desk.user_share = d.at("user_share").get<double>();
    if (d.contains("user_count")) desk.user_count = d.at("user_count").get<int>();
    if (d.contains("signature")) desk.signature = d.at("signature").get<double>();
    if (d.contains("basis_seed")) desk.basis_seed = d.at("basis_seed").get<std::uint64_t>();
    if (d.contains("seed")) desk.seed = d.at("seed").get<std::uint64_t>();
    if (d.contains("space")) {
      desk.space = anw::SignatureSpace::make(d.at("space").at("slots").get<int>(),
                                             d.at("space").at("tau").get<double>());
    }
    if (d.contains("method"))
      desk.method = d.at("method").get<std::string>() == "gradient" ? anw::SearchMethod::Gradient
                                                                    : anw::SearchMethod::Grid;
    if (d.contains("blue")) {
      anw::BlueSpec blue;
      blue.alpha = d.at("blue").value("alpha", 0.3);
      blue.pixel_count = d.at("blue").value("pixel_count", 512);
      blue.seed = d.at("blue").value("seed", std::uint64_t{99});
      desk.blue = blue;
    }
  }
  if (config.contains("train")) {
    const json& t = config.at("train");
    anw::TrainConfig& tc = desk.train;
    if (t.contains("epochs")) tc.epochs = t.at("epochs").get<int>();
    if (t.contains("base_lr")) tc.base_lr = t.at("base_lr").get<double>();
    if (t.contains("lr_decay_factor")) tc.lr_decay_factor = t.at("lr_decay_factor").get<double>();
    if (t.contains("lr_decay_every")) tc.lr_decay_every = t.at("lr_decay_every").get<int>();
    if (t.contains("momentum")) tc.momentum = t.at("momentum").get<double>();
    if (t.contains("batch_size")) tc.batch_size = t.at("batch_size").get<int>();
    if (t.contains("crop_pad")) tc.crop_pad = t.at("crop_pad").get<int>();
    if (t.contains("conv_width")) tc.conv_width = t.at("conv_width").get<int>();
  }
}

int cmd_experiment(const std::string& config_path, const std::string& name, std::string outdir,
                   int workers, std::uint64_t seed_flag, bool seed_given) {
  const json config = load_config_file(config_path);
  if (outdir.empty() && config.contains("output_dir"))
    outdir = config.at("output_dir").get<std::string>();
  ensure_dir(outdir);

  anw::DeskRunConfig desk;
  desk.train.epochs = 30;
  apply_desk_config(config, desk);
  if (seed_given) desk.seed = seed_flag;

  json summary{{"command", "experiment"}, {"name", name}, {"workers", workers},
               {"desk", desk_config_to_json(desk)}};

  if (name == "quantity") {
    std::vector<int> counts{1, 5, 10, 50, 100};
    if (config.contains("counts")) counts = config.at("counts").get<std::vector<int>>();
    summary["result"] = sweep_to_json(anw::run_quantity_experiment(desk, counts, workers));
  } else if (name == "signatures") {
    std::vector<double> signatures = desk.space.watermark_candidates();
    if (config.contains("signatures"))
      signatures = config.at("signatures").get<std::vector<double>>();
    summary["result"] = sweep_to_json(anw::run_signature_experiment(desk, signatures, workers));
  } else if (name == "augmentations") {
    std::vector<std::string> names{"cutout", "label_smoothing", "gaussian_noise",
                                   "fgsm",   "dp_noise",        "color_jitter"};
    if (config.contains("augmentations"))
      names = config.at("augmentations").get<std::vector<std::string>>();
    json entries = json::array();
    for (const auto& o : anw::run_augmentation_experiment(desk, names, workers)) {
      entries.push_back({{"name", o.name},
                         {"inferred", o.inferred},
                         {"matched", o.matched},
                         {"loss_gap", o.loss_gap},
                         {"heldout_accuracy", o.heldout_accuracy}});
    }
    summary["result"] = entries;
  } else if (name == "defenses") {
    const double prune_fraction = config.value("prune_fraction", 0.3);
    const int ft_epochs = config.value("finetune_epochs", 5);
    const double ft_lr = config.value("finetune_lr", 0.001);
    const double ft_share = config.value("finetune_share", 0.1);
    const anw::DefenseSummary d =
        anw::run_defense_experiment(desk, prune_fraction, ft_epochs, ft_lr, ft_share);
    summary["result"] = {{"base",
                          {{"inferred", d.base_inferred},
                           {"matched", d.base_matched},
                           {"accuracy", d.base_accuracy}}},
                         {"pruned",
                          {{"inferred", d.pruned_inferred},
                           {"matched", d.pruned_matched},
                           {"accuracy", d.pruned_accuracy}}},
                         {"finetuned",
                          {{"inferred", d.finetuned_inferred},
                           {"matched", d.finetuned_matched},
                           {"accuracy", d.finetuned_accuracy}}}};
  } else if (name == "heldout") {
    std::vector<std::uint64_t> seeds;
    const int num_seeds = config.value("num_seeds", 5);
    for (int i = 0; i < num_seeds; ++i)
      seeds.push_back(anw::Rng::derive(desk.seed, 700 + static_cast<std::uint64_t>(i)));
    json entries = json::array();
    for (const auto& e : anw::run_heldout_experiment(desk, seeds, workers)) {
      entries.push_back({{"seed", e.seed},
                         {"inferred", e.inferred},
                         {"distance_from_zero", e.distance_from_zero},
                         {"innocent_confirmed", e.innocent_confirmed}});
    }
    summary["result"] = entries;
  } else if (name == "multiuser") {
    anw::MultiuserExperimentConfig mc;
    mc.multiuser.train = desk.train;
    mc.multiuser.space = desk.space;
    mc.multiuser.seed = desk.seed;
    mc.multiuser.workers = workers;
    if (config.contains("multiuser")) {
      const json& m = config.at("multiuser");
      mc.dataset_size = m.value("dataset_size", mc.dataset_size);
      mc.multiuser.num_users = m.value("num_users", mc.multiuser.num_users);
      mc.multiuser.watermark_ratio = m.value("watermark_ratio", mc.multiuser.watermark_ratio);
      mc.multiuser.arbitrary_bases_per_user =
          m.value("arbitrary_bases_per_user", mc.multiuser.arbitrary_bases_per_user);
    }
    const anw::MultiuserComparison cmp = anw::run_multiuser_experiment(mc);
    auto to_json = [](const anw::MultiuserSummary& s) {
      json users = json::array();
      for (const auto& u : s.users)
        users.push_back({{"user", u.user_id},
                         {"signature", u.signature},
                         {"inferred", u.inferred},
                         {"matched", u.matched}});
      return json{{"match_rate", s.match_rate},
                  {"arbitrary_match_rate", s.arbitrary_match_rate},
                  {"arbitrary_trials", s.arbitrary_trials},
                  {"users", users},
                  {"note", s.note}};
    };
    summary["result"] = {{"shared_basis", to_json(cmp.shared_basis)},
                         {"user_bases", to_json(cmp.user_bases)}};
  } else if (name == "mia") {
    anw::MiaExperimentConfig mc;
    mc.seed = desk.seed;
    mc.workers = workers;
    mc.learner_train = desk.train;
    mc.shadow_train = desk.train;
    mc.shadow_train.epochs = config.value("shadow_epochs", 6);
    if (config.contains("mia")) {
      const json& m = config.at("mia");
      mc.dataset_size = m.value("dataset_size", mc.dataset_size);
      mc.num_users = m.value("num_users", mc.num_users);
      mc.user_size = m.value("user_size", mc.user_size);
    }
    const anw::MiaSummary s = anw::run_mia_experiment(mc);
    summary["result"] = {{"users", s.users},
                         {"anw_match_rate", s.anw_match_rate},
                         {"anw_advp", s.anw_advp},
                         {"mia_std_accuracy", s.mia_std_accuracy},
                         {"mia_std_advp", s.mia_std_advp},
                         {"mia_pow_accuracy", s.mia_pow_accuracy},
                         {"mia_pow_advp", s.mia_pow_advp},
                         {"mean_shadow_threshold", s.mean_shadow_threshold},
                         {"mean_member_loss", s.mean_member_loss},
                         {"mean_heldout_loss", s.mean_heldout_loss},
                         {"heldout_classified_member_rate", s.heldout_classified_member_rate}};
  } else if (name == "mae") {
    anw::MaeExperimentConfig mc;
    mc.seed = desk.seed;
    mc.mae.train = desk.train;
    mc.mae.workers = workers;
    if (config.contains("mae")) {
      const json& m = config.at("mae");
      mc.dataset_size = m.value("dataset_size", mc.dataset_size);
      mc.user_size = m.value("user_size", mc.user_size);
      mc.mae.num_models = m.value("num_models", mc.mae.num_models);
      mc.mae.subset_fraction = m.value("subset_fraction", mc.mae.subset_fraction);
    }
    const anw::MaeExperimentSummary s = anw::run_mae_experiment(mc);
    summary["result"] = {{"watermarked",
                          {{"estimate", s.watermarked.estimate},
                           {"included_accuracy", s.watermarked.included_accuracy},
                           {"excluded_accuracy", s.watermarked.excluded_accuracy}}},
                         {"clean",
                          {{"estimate", s.clean.estimate},
                           {"included_accuracy", s.clean.included_accuracy},
                           {"excluded_accuracy", s.clean.excluded_accuracy}}},
                         {"direction_holds", s.direction_holds}};
  } else {
    std::cerr << "unknown experiment name: " << name << "\n";
    return kExitUsage;
  }

  if (!outdir.empty())
    anw::write_text_file((fs::path(outdir) / (name + "_summary.json")).string(),
                         summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anti-neuron watermarking toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values")
      ->expected(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset file");
  std::string synth_out;
  int synth_count = 5000, synth_h = 32, synth_w = 32, synth_classes = 10;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Output dataset path");
  synth->add_option("--count", synth_count, "Image count");
  synth->add_option("--height", synth_h, "Image height");
  synth->add_option("--width", synth_w, "Image width");
  synth->add_option("--classes", synth_classes, "Class count");
  synth->add_option("--seed", synth_seed, "Generator seed");

  // watermark
  auto* watermark = app.add_subcommand("watermark", "Watermark a slice of a dataset");
  std::string wm_in, wm_out, wm_indices, wm_indices_file, wm_key_out, wm_manifest_out;
  double wm_share = 0.01;
  std::uint64_t wm_user_seed = 5;
  bool wm_split_secret = false;
  KeyFlags wm_key;
  watermark->add_option("--in", wm_in, "Input dataset");
  watermark->add_option("--out", wm_out, "Output dataset");
  watermark->add_option("--indices", wm_indices, "Comma-separated user indices");
  watermark->add_option("--indices-file", wm_indices_file, "File with comma-separated indices");
  watermark->add_option("--user-share", wm_share, "User share of the dataset");
  watermark->add_option("--user-seed", wm_user_seed, "Seed for user-slice selection");
  watermark->add_flag("--split-secret", wm_split_secret,
                      "Write the key file without the private signature");
  watermark->add_option("--key-out", wm_key_out, "Key file output path");
  watermark->add_option("--manifest-out", wm_manifest_out, "User manifest output path");
  add_key_flags(watermark, wm_key);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the tiny CNN on a dataset");
  std::string tr_data, tr_out, tr_log, tr_indices, tr_indices_file;
  double tr_share = 0.01;
  std::uint64_t tr_user_seed = 5;
  bool tr_watermark = false;
  anw::TrainConfig tr_config;
  KeyFlags tr_key;
  train_cmd->add_option("--data", tr_data, "Training dataset");
  train_cmd->add_option("--out", tr_out, "Checkpoint output path");
  train_cmd->add_option("--log", tr_log, "Per-epoch CSV log path");
  train_cmd->add_flag("--watermark", tr_watermark, "Watermark a user slice before training");
  train_cmd->add_option("--indices", tr_indices, "User indices (with --watermark)");
  train_cmd->add_option("--indices-file", tr_indices_file, "User indices file");
  train_cmd->add_option("--user-share", tr_share, "User share (with --watermark)");
  train_cmd->add_option("--user-seed", tr_user_seed, "User-slice seed");
  add_key_flags(train_cmd, tr_key);
  add_train_flags(train_cmd, tr_config);

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Infer a signature from a model");
  std::string vf_model, vf_data, vf_method = "grid", vf_report, vf_curve, vf_alphas;
  int vf_slots = 12;
  double vf_tau = 15.0, vf_claimed = 0.0, vf_dp_sigma2 = 0.0;
  std::uint64_t vf_noise_seed = 0;
  KeyFlags vf_key;
  verify_cmd->add_option("--model", vf_model, "Checkpoint path");
  verify_cmd->add_option("--data", vf_data, "Clean user dataset");
  verify_cmd->add_option("--slots", vf_slots, "Signature slots N");
  verify_cmd->add_option("--tau", vf_tau, "Slot half-width tau");
  verify_cmd->add_option("--method", vf_method, "grid | gradient");
  auto* claimed_opt = verify_cmd->add_option("--claimed", vf_claimed,
                                             "Claimed signature for the match decision only");
  verify_cmd->add_option("--report", vf_report, "Report JSON output");
  verify_cmd->add_option("--curve", vf_curve, "Loss-curve CSV output");
  verify_cmd->add_option("--dp-sigma2", vf_dp_sigma2, "Output noise applied by the model owner");
  verify_cmd->add_option("--noise-seed", vf_noise_seed, "Output noise seed");
  verify_cmd->add_option("--alphas", vf_alphas, "Blue-channel candidate alphas (comma list)");
  add_key_flags(verify_cmd, vf_key);

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Protection metrics");
  auto* advp = metrics->add_subcommand("advp", "Protection advantage (M - Np)/N");
  int advp_matches = 0, advp_trials = 1;
  double advp_p = 0.5;
  advp->add_option("--matches", advp_matches)->required();
  advp->add_option("--trials", advp_trials)->required();
  advp->add_option("--guess-p", advp_p)->required();
  auto* cosine = metrics->add_subcommand("cosine", "Signature cosine similarity");
  double cos_inferred = 0.0, cos_true = 0.0;
  cosine->add_option("--inferred", cos_inferred)->required();
  cosine->add_option("--true", cos_true)->required();
  auto* mia = metrics->add_subcommand("mia", "Threshold MIA baselines");
  std::string mia_kind = "std", mia_train, mia_heldout;
  mia->add_option("--kind", mia_kind, "std | pow");
  mia->add_option("--train-losses", mia_train, "Comma-separated training losses");
  mia->add_option("--heldout-losses", mia_heldout, "Comma-separated held-out losses");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Multi-run experiment harness");
  std::string exp_name, exp_out;
  int exp_workers = 2;
  std::uint64_t exp_seed = 1;
  experiment->add_option("--name", exp_name,
                         "quantity | signatures | augmentations | defenses | multiuser | mia | "
                         "mae | heldout")
      ->required();
  experiment->add_option("--out", exp_out, "Output directory");
  experiment->add_option("--jobs", exp_workers, "Parallel runs");
  auto* exp_seed_opt = experiment->add_option("--seed", exp_seed, "Master seed");

  try {
    app.parse(argc, argv);

    if (*synth)
      return cmd_synth(*synth, config_path, synth_out, synth_count, synth_h, synth_w,
                       synth_classes, synth_seed);
    if (*watermark)
      return cmd_watermark(*watermark, config_path, wm_in, wm_out, wm_key, wm_indices,
                           wm_indices_file, wm_share, wm_user_seed, wm_split_secret, wm_key_out,
                           wm_manifest_out);
    if (*train_cmd)
      return cmd_train(*train_cmd, config_path, tr_data, tr_out, tr_log, tr_key, tr_indices,
                       tr_indices_file, tr_share, tr_user_seed, tr_config,
                       tr_watermark || train_cmd->count("--key") > 0 ||
                           train_cmd->count("--indices") > 0);
    if (*verify_cmd)
      return cmd_verify(*verify_cmd, config_path, vf_model, vf_data, vf_key, vf_slots, vf_tau,
                        vf_method, vf_claimed, claimed_opt->count() > 0, vf_report, vf_curve,
                        vf_dp_sigma2, vf_noise_seed, vf_alphas);
    if (*metrics) {
      if (*advp) return cmd_metrics_advp(advp_matches, advp_trials, advp_p);
      if (*cosine) return cmd_metrics_cosine(cos_inferred, cos_true);
      if (*mia) return cmd_metrics_mia(mia_kind, mia_train, mia_heldout);
      std::cerr << "metrics requires a subcommand (advp | cosine | mia)\n";
      return kExitUsage;
    }
    if (*experiment)
      return cmd_experiment(config_path, exp_name, exp_out, exp_workers, exp_seed,
                            exp_seed_opt->count() > 0);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const anw::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const anw::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitFormat;
  }
}
