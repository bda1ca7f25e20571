#include "anw/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anw/error.hpp"

namespace anw {

using nlohmann::json;

KeyFile KeyFile::hue(const WatermarkKey& key, bool include_secret) {
  KeyFile f;
  f.type = "hue";
  f.basis = key.basis;
  if (include_secret) f.signature_degrees = key.signature_degrees;
  return f;
}

KeyFile KeyFile::blue(const BlueChannelKey& key, bool include_secret) {
  KeyFile f;
  f.type = "blue";
  f.positions = key.positions;
  f.bits = key.bits;
  if (include_secret) f.alpha = key.alpha;
  return f;
}

WatermarkKey KeyFile::to_watermark_key() const {
  if (type != "hue" || !basis) throw FormatError("type", "key file is not a hue key");
  if (!signature_degrees)
    throw FormatError("signature", "key file carries no signature (secret was split)");
  return {*basis, *signature_degrees};
}

BlueChannelKey KeyFile::to_blue_key() const {
  if (type != "blue") throw FormatError("type", "key file is not a blue-channel key");
  if (!alpha) throw FormatError("alpha", "key file carries no alpha (secret was split)");
  return {*alpha, positions, bits};
}

std::string key_to_json(const KeyFile& key) {
  json j;
  j["type"] = key.type;
  if (key.basis) {
    j["basis"] = std::vector<double>(key.basis->matrix.begin(), key.basis->matrix.end());
  }
  if (key.signature_degrees) j["signature"] = *key.signature_degrees;
  if (key.alpha) j["alpha"] = *key.alpha;
  if (!key.positions.empty()) {
    json pos = json::array();
    for (const auto& [r, c] : key.positions) pos.push_back({r, c});
    j["positions"] = pos;
    json bits = json::array();
    for (auto b : key.bits) bits.push_back(static_cast<int>(b));
    j["bits"] = bits;
  }
  return j.dump(2) + "\n";
}

KeyFile key_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError("json", std::string("key file is not valid JSON: ") + e.what());
  }
  KeyFile key;
  try {
    key.type = j.at("type").get<std::string>();
    if (key.type == "hue") {
      const auto values = j.at("basis").get<std::vector<double>>();
      if (values.size() != 9) throw FormatError("basis", "basis must hold 9 reals");
      Mat3 m;
      std::copy(values.begin(), values.end(), m.begin());
      key.basis = ColorBasis::from_matrix(m);
      if (j.contains("signature")) key.signature_degrees = j.at("signature").get<double>();
    } else if (key.type == "blue") {
      for (const auto& pos : j.at("positions")) {
        key.positions.emplace_back(pos.at(0).get<int>(), pos.at(1).get<int>());
      }
      for (const auto& bit : j.at("bits")) {
        const int b = bit.get<int>();
        if (b != 0 && b != 1) throw FormatError("bits", "bits must be 0 or 1");
        key.bits.push_back(static_cast<std::uint8_t>(b));
      }
      if (key.positions.size() != key.bits.size())
        throw FormatError("bits", "positions and bits differ in length");
      if (j.contains("alpha")) key.alpha = j.at("alpha").get<double>();
    } else {
      throw FormatError("type", "unknown key type " + key.type);
    }
  } catch (const json::exception& e) {
    throw FormatError("json", std::string("malformed key file: ") + e.what());
  }
  return key;
}

std::string report_to_json(const VerificationReport& report) {
  json j;
  j["method"] = report.method == SearchMethod::Grid ? "grid" : "gradient";
  j["domain"] = report.domain;
  j["inferred"] = report.inferred;
  j["tau"] = report.tau;
  json curve = json::array();
  for (const auto& cl : report.per_candidate_losses) curve.push_back({{"k", cl.k}, {"loss", cl.loss}});
  j["candidates"] = curve;
  if (report.matched) j["matched"] = *report.matched;
  j["metadata"] = {{"model_id", report.metadata.model_id},
                   {"user_id", report.metadata.user_id},
                   {"image_count", report.metadata.image_count}};
  return j.dump(2) + "\n";
}

void write_loss_curve_csv(const std::string& path, const VerificationReport& report) {
  std::ostringstream out;
  out << "k,loss\n";
  out.precision(17);
  for (const auto& cl : report.per_candidate_losses) out << cl.k << "," << cl.loss << "\n";
  write_text_file(path, out.str());
}

void write_train_log_csv(const std::string& path, const std::vector<EpochStats>& log) {
  std::ostringstream out;
  out << "epoch,lr,loss,accuracy\n";
  out.precision(17);
  for (const auto& e : log) out << e.epoch << "," << e.lr << "," << e.loss << "," << e.accuracy << "\n";
  write_text_file(path, out.str());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("file", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("file", "cannot open " + path + " for writing");
  out << text;
  if (!out) throw FormatError("file", "short write to " + path);
}

}  // namespace anw
