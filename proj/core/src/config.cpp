#include "poesup/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poesup/errors.hpp"

namespace poesup {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw InputError("config field '" + std::string(key) + "': invalid value '" + std::string(value) +
                   "' (expected " + std::string(expected) + ")");
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
  return out;
}

std::string format_double(double v) {
  // Shortest text that parses back to the same double.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string json_scalar_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_float()) return format_double(value.get<double>());
  if (value.is_array()) {
    std::string out;
    for (const auto& item : value) {
      if (!out.empty()) out += ",";
      out += json_scalar_text(item);
    }
    return out;
  }
  throw InputError("config: unsupported JSON value " + value.dump());
}

}  // namespace

std::string_view to_string(Fusion fusion) { return fusion == Fusion::PoE ? "poe" : "concat"; }

std::string_view to_string(StratifyBy key) {
  return key == StratifyBy::Label ? "label" : "label_and_language";
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"k_folds", "number of stratified cross-validation folds (>= 2)", false},
      {"lr", "Adam learning rate", false},
      {"batch_size", "mini-batch size", false},
      {"epochs", "training epochs per fold", false},
      {"l2", "L2 penalty", false},
      {"lambda", "weight of the contrastive term in the total loss", false},
      {"tau", "contrastive temperature", false},
      {"fusion", "concat | poe", false},
      {"use_cl", "train with the supervised contrastive term", true},
      {"use_image", "include image embeddings", true},
      {"modalities", "comma-separated subset of speech,acoustic,text,image", false},
      {"supcon_variant", "standard | literal contrastive denominator", false},
      {"include_joint_expert", "PoE: add the concatenation head as an extra expert", true},
      {"stratify_by", "label | label_and_language", false},
      {"group_by_participant", "keep all samples of a participant in one fold", true},
      {"seed", "64-bit seed for splits, initialization and shuffling", false},
      {"hidden", "hidden width of every feed-forward head", false},
      {"projection_dim", "width of the contrastive projection", false},
      {"decoupled_l2", "apply L2 as decoupled weight decay instead of a gradient term", true},
      {"aux_modality_ce", "PoE: add per-expert cross-entropy to the fused loss", true},
      {"pooled_metrics", "aggregate folds from pooled confusion counts", true},
      {"bias_flipped_validation", "validate on bias-flipped embeddings when present", true},
  };
  return fields;
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw InputError("invalid experiment config: " + msg); };
  if (cfg.k_folds < 2) fail("k_folds must be >= 2");
  if (!(cfg.lr > 0.0)) fail("lr must be positive");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.use_cl && cfg.batch_size < 2) fail("batch_size must be >= 2 when use_cl is set");
  if (cfg.epochs < 0) fail("epochs must be >= 0");
  if (!(cfg.l2 >= 0.0)) fail("l2 must be >= 0");
  if (!(cfg.lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(cfg.tau > 0.0)) fail("tau must be positive");
  if (cfg.hidden < 1) fail("hidden must be >= 1");
  if (cfg.projection_dim < 1) fail("projection_dim must be >= 1");
  if (effective_modalities(cfg).empty()) fail("at least one modality must be selected");
}

std::vector<Modality> effective_modalities(const ExperimentConfig& cfg) {
  std::vector<Modality> out;
  for (Modality m : kAllModalities) {
    const bool listed = std::find(cfg.modalities.begin(), cfg.modalities.end(), m) != cfg.modalities.end();
    if (m == Modality::Image ? cfg.use_image : listed) out.push_back(m);
  }
  return out;
}

void set_config_field(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "k_folds") cfg.k_folds = parse_integer<int>(key, value);
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_integer<int>(key, value);
  else if (key == "epochs") cfg.epochs = parse_integer<int>(key, value);
  else if (key == "l2") cfg.l2 = parse_double(key, value);
  else if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "tau") cfg.tau = parse_double(key, value);
  else if (key == "fusion") {
    if (value == "poe") cfg.fusion = Fusion::PoE;
    else if (value == "concat") cfg.fusion = Fusion::Concat;
    else bad_value(key, value, "concat or poe");
  } else if (key == "use_cl") cfg.use_cl = parse_bool(key, value);
  else if (key == "use_image") cfg.use_image = parse_bool(key, value);
  else if (key == "modalities") {
    cfg.modalities.clear();
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!trim(item).empty()) cfg.modalities.push_back(parse_modality(trim(item)));
    }
  } else if (key == "supcon_variant") cfg.supcon_variant = parse_supcon_variant(value);
  else if (key == "include_joint_expert") cfg.include_joint_expert = parse_bool(key, value);
  else if (key == "stratify_by") {
    if (value == "label") cfg.stratify_by = StratifyBy::Label;
    else if (value == "label_and_language") cfg.stratify_by = StratifyBy::LabelAndLanguage;
    else bad_value(key, value, "label or label_and_language");
  } else if (key == "group_by_participant") cfg.group_by_participant = parse_bool(key, value);
  else if (key == "seed") cfg.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "hidden") cfg.hidden = parse_integer<int>(key, value);
  else if (key == "projection_dim") cfg.projection_dim = parse_integer<int>(key, value);
  else if (key == "decoupled_l2") cfg.decoupled_l2 = parse_bool(key, value);
  else if (key == "aux_modality_ce") cfg.aux_modality_ce = parse_bool(key, value);
  else if (key == "pooled_metrics") cfg.pooled_metrics = parse_bool(key, value);
  else if (key == "bias_flipped_validation") cfg.bias_flipped_validation = parse_bool(key, value);
  else throw InputError("unknown config field '" + std::string(key) + "'");
}

std::string get_config_field(const ExperimentConfig& cfg, std::string_view key) {
  const json doc = json::parse(config_to_json(cfg));
  const std::string k(key);
  if (!doc.contains(k)) throw InputError("unknown config field '" + k + "'");
  return json_scalar_text(doc.at(k));
}

ExperimentConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("experiment config: invalid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) throw InputError("experiment config: expected a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) set_config_field(cfg, key, json_scalar_text(value));
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json modalities = json::array();
  for (Modality m : cfg.modalities) modalities.push_back(std::string(to_string(m)));
  json doc = json::object();
  doc["k_folds"] = cfg.k_folds;
  doc["lr"] = cfg.lr;
  doc["batch_size"] = cfg.batch_size;
  doc["epochs"] = cfg.epochs;
  doc["l2"] = cfg.l2;
  doc["lambda"] = cfg.lambda;
  doc["tau"] = cfg.tau;
  doc["fusion"] = std::string(to_string(cfg.fusion));
  doc["use_cl"] = cfg.use_cl;
  doc["use_image"] = cfg.use_image;
  doc["modalities"] = modalities;
  doc["supcon_variant"] = std::string(to_string(cfg.supcon_variant));
  doc["include_joint_expert"] = cfg.include_joint_expert;
  doc["stratify_by"] = std::string(to_string(cfg.stratify_by));
  doc["group_by_participant"] = cfg.group_by_participant;
  doc["seed"] = cfg.seed;
  doc["hidden"] = cfg.hidden;
  doc["projection_dim"] = cfg.projection_dim;
  doc["decoupled_l2"] = cfg.decoupled_l2;
  doc["aux_modality_ce"] = cfg.aux_modality_ce;
  doc["pooled_metrics"] = cfg.pooled_metrics;
  doc["bias_flipped_validation"] = cfg.bias_flipped_validation;
  return doc.dump(2);
}

ExperimentConfig config_from_toml(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "TOML line " + std::to_string(line_no);
    // Strip comments outside of strings.
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    const std::string content = trim(line);
    if (content.empty()) continue;
    if (content.front() == '[') throw InputError(where + ": tables are not supported in experiment configs");
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw InputError(where + ": expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      std::string joined;
      std::istringstream items(value.substr(1, value.size() - 2));
      std::string item;
      while (std::getline(items, item, ',')) {
        std::string t = trim(item);
        if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
        if (t.empty()) continue;
        if (!joined.empty()) joined += ",";
        joined += t;
      }
      value = joined;
    } else if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    try {
      set_config_field(cfg, key, value);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return path.extension() == ".toml" ? config_from_toml(ss.str()) : config_from_json(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace poesup
