#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anw/color.hpp"
#include "anw/train.hpp"
#include "anw/verify.hpp"

namespace anw {

// On-disk form of a user's key. A "hue" key is the basis plus the private
// signature; the signature (or alpha for "blue") is omitted when the secret
// is split away from the material handed to the arbitrator.
struct KeyFile {
  std::string type = "hue";  // "hue" | "blue"
  std::optional<ColorBasis> basis;
  std::optional<double> signature_degrees;
  std::optional<double> alpha;
  std::vector<std::pair<int, int>> positions;
  std::vector<std::uint8_t> bits;

  static KeyFile hue(const WatermarkKey& key, bool include_secret = true);
  static KeyFile blue(const BlueChannelKey& key, bool include_secret = true);

  WatermarkKey to_watermark_key() const;   // throws if secretless
  BlueChannelKey to_blue_key() const;      // throws if secretless
};

std::string key_to_json(const KeyFile& key);
KeyFile key_from_json_text(const std::string& text);  // FormatError on bad input

std::string report_to_json(const VerificationReport& report);

// One row per candidate: k,loss. Plot-ready.
void write_loss_curve_csv(const std::string& path, const VerificationReport& report);

// One row per epoch: epoch,lr,loss,accuracy.
void write_train_log_csv(const std::string& path, const std::vector<EpochStats>& log);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace anw
