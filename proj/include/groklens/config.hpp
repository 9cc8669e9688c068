#pragma once

// Flat JSON run configuration: one object of scalars and numeric arrays.
// Unknown keys are rejected; every error names the offending key.

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "groklens/error.hpp"
#include "groklens/experiments.hpp"

namespace groklens {

using Json = nlohmann::ordered_json;

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "family",         "n",
      "nonuniform",     "test_points",
      "proportion",     "parity_m",
      "parity_indices", "subset_size",
      "test_size",      "mnist_dir",
      "train_images",   "train_labels",
      "test_images",    "test_labels",
      "hidden_widths",  "activation",
      "alpha",          "optimizer",
      "lr",             "beta1",
      "beta2",          "adam_eps",
      "epochs",         "batch_size",
      "eval_every",     "snapshot_epochs",
      "grid_points",    "trials",
      "seed_data",      "seed_init",
      "seed_shuffle",   "eps_train",
      "test_loss_threshold", "train_accuracy_threshold",
      "test_accuracy_threshold",
  };
  return keys;
}

inline std::string type_name(const Json& v) { return v.type_name(); }

template <typename T>
T read_integer(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("type mismatch for '" + key + "': expected integer, got " + type_name(v));
  if constexpr (std::is_unsigned_v<T>) {
    if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
    if (v.get<std::int64_t>() < 0) throw ConfigError("type mismatch for '" + key + "': expected non-negative integer");
  }
  return static_cast<T>(v.get<std::int64_t>());
}

inline double read_number(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("type mismatch for '" + key + "': expected number, got " + type_name(v));
  return v.get<double>();
}

inline bool read_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("type mismatch for '" + key + "': expected boolean, got " + type_name(v));
  return v.get<bool>();
}

inline std::string read_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("type mismatch for '" + key + "': expected string, got " + type_name(v));
  return v.get<std::string>();
}

template <typename T>
std::vector<T> read_int_array(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("type mismatch for '" + key + "': expected array, got " + type_name(v));
  std::vector<T> out;
  for (const auto& e : v) out.push_back(read_integer<T>(e, key));
  return out;
}

}  // namespace detail

/// Resolves a parsed JSON object into a full config: family defaults first
/// (which depend on activation and alpha when given), then explicit keys.
inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!detail::known_config_keys().contains(key)) throw ConfigError("unknown key '" + key + "'");
    if (value.is_object()) throw ConfigError("type mismatch for '" + key + "': nested objects are not allowed");
  }
  if (!j.contains("family")) throw ConfigError("missing required key 'family'");
  const Family family = parse_family(detail::read_string(j.at("family"), "family"));
  std::optional<Activation> activation;
  if (j.contains("activation")) {
    const auto name = detail::read_string(j.at("activation"), "activation");
    try {
      activation = parse_activation(name);
    } catch (const ConfigError&) {
      throw ConfigError("invalid value for 'activation': " + name);
    }
  }
  std::optional<double> alpha;
  if (j.contains("alpha")) alpha = detail::read_number(j.at("alpha"), "alpha");

  ExperimentConfig c = default_config(family, activation, alpha);
  for (const auto& [key, v] : j.items()) {
    if (key == "family" || key == "activation" || key == "alpha") continue;
    if (key == "n") c.n = detail::read_integer<int>(v, key);
    else if (key == "nonuniform") c.nonuniform = detail::read_bool(v, key);
    else if (key == "test_points") c.test_points = detail::read_integer<int>(v, key);
    else if (key == "proportion") c.proportion = detail::read_number(v, key);
    else if (key == "parity_m") c.parity_m = detail::read_integer<int>(v, key);
    else if (key == "parity_indices") c.parity_indices = detail::read_int_array<int>(v, key);
    else if (key == "subset_size") c.subset_size = detail::read_integer<int>(v, key);
    else if (key == "test_size") c.test_size = detail::read_integer<int>(v, key);
    else if (key == "mnist_dir") c.mnist_dir = detail::read_string(v, key);
    else if (key == "train_images") c.train_images = detail::read_string(v, key);
    else if (key == "train_labels") c.train_labels = detail::read_string(v, key);
    else if (key == "test_images") c.test_images = detail::read_string(v, key);
    else if (key == "test_labels") c.test_labels = detail::read_string(v, key);
    else if (key == "hidden_widths") c.hidden_widths = detail::read_int_array<int>(v, key);
    else if (key == "optimizer") {
      const auto name = detail::read_string(v, key);
      try {
        c.optimizer = parse_optimizer(name);
      } catch (const ConfigError&) {
        throw ConfigError("invalid value for 'optimizer': " + name);
      }
    }
    else if (key == "lr") c.lr = detail::read_number(v, key);
    else if (key == "beta1") c.beta1 = detail::read_number(v, key);
    else if (key == "beta2") c.beta2 = detail::read_number(v, key);
    else if (key == "adam_eps") c.adam_eps = detail::read_number(v, key);
    else if (key == "epochs") c.epochs = detail::read_integer<long>(v, key);
    else if (key == "batch_size") c.batch_size = detail::read_integer<int>(v, key);
    else if (key == "eval_every") c.eval_every = detail::read_integer<int>(v, key);
    else if (key == "snapshot_epochs") c.snapshot_epochs = detail::read_int_array<long>(v, key);
    else if (key == "grid_points") c.grid_points = detail::read_integer<int>(v, key);
    else if (key == "trials") c.trials = detail::read_integer<int>(v, key);
    else if (key == "seed_data") c.seed_data = detail::read_integer<std::uint64_t>(v, key);
    else if (key == "seed_init") c.seed_init = detail::read_integer<std::uint64_t>(v, key);
    else if (key == "seed_shuffle") c.seed_shuffle = detail::read_integer<std::uint64_t>(v, key);
    else if (key == "eps_train") c.eps_train = detail::read_number(v, key);
    else if (key == "test_loss_threshold") c.test_loss_threshold = detail::read_number(v, key);
    else if (key == "train_accuracy_threshold") c.train_accuracy_threshold = detail::read_number(v, key);
    else if (key == "test_accuracy_threshold") c.test_accuracy_threshold = detail::read_number(v, key);
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Every field, in a fixed key order.
inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["family"] = std::string(to_string(c.family));
  j["n"] = c.n;
  j["nonuniform"] = c.nonuniform;
  j["test_points"] = c.test_points;
  j["proportion"] = c.proportion;
  j["parity_m"] = c.parity_m;
  j["parity_indices"] = c.parity_indices;
  j["subset_size"] = c.subset_size;
  j["test_size"] = c.test_size;
  j["mnist_dir"] = c.mnist_dir;
  j["train_images"] = c.train_images;
  j["train_labels"] = c.train_labels;
  j["test_images"] = c.test_images;
  j["test_labels"] = c.test_labels;
  j["hidden_widths"] = c.hidden_widths;
  j["activation"] = std::string(to_string(c.activation));
  j["alpha"] = c.alpha;
  j["optimizer"] = std::string(to_string(c.optimizer));
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["eval_every"] = c.eval_every;
  j["snapshot_epochs"] = c.snapshot_epochs;
  j["grid_points"] = c.grid_points;
  j["trials"] = c.trials;
  j["seed_data"] = c.seed_data;
  j["seed_init"] = c.seed_init;
  j["seed_shuffle"] = c.seed_shuffle;
  j["eps_train"] = c.eps_train;
  j["test_loss_threshold"] = c.test_loss_threshold;
  j["train_accuracy_threshold"] = c.train_accuracy_threshold;
  j["test_accuracy_threshold"] = c.test_accuracy_threshold;
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace groklens
