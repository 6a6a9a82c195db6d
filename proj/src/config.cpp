#include "r2cnet/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>

#include "r2cnet/error.hpp"

namespace r2c {
namespace {

using json = nlohmann::json;

bool to_switch(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "on" || s == "true") return true;
    if (s == "off" || s == "false") return false;
  }
  throw Error(Errc::Config, key + " must be on/off");
}

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw Error(Errc::Config, key + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(Errc::Config, key + " must be true/false");
      return v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw Error(Errc::Config, key + " must be a number");
      return v.get<T>();
    } else {
      if (!v.is_number_integer()) throw Error(Errc::Config, key + " must be an integer");
      return v.get<T>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Config, key + ": " + e.what());
  }
}

struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

#define R2C_FIELD(key, member, type)                                            \
  {                                                                             \
    key, Field {                                                                \
      [](const RunConfig& c) { return json(c.member); },                       \
          [](RunConfig& c, const json& v) { c.member = as<type>(v, key); }      \
    }                                                                           \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      R2C_FIELD("data.root", data_root, std::string),
      R2C_FIELD("data.image_size", image_size, int),
      R2C_FIELD("data.k", k, int),
      R2C_FIELD("model.c_d", c_d, int64_t),
      R2C_FIELD("model.encoder", encoder, std::string),
      R2C_FIELD("reference.provider", provider, std::string),
      R2C_FIELD("loss.weighted", weighted_loss, bool),
      R2C_FIELD("train.steps", steps, int64_t),
      R2C_FIELD("train.batch_size", batch_size, int),
      R2C_FIELD("train.lr", lr, double),
      R2C_FIELD("train.lr_floor", lr_floor, double),
      R2C_FIELD("train.seed", seed, std::uint64_t),
      {"rfe.cross_scale_path",
       Field{[](const RunConfig& c) { return json(c.cross_scale_path ? "on" : "off"); },
             [](RunConfig& c, const json& v) { c.cross_scale_path = to_switch(v, "rfe.cross_scale_path"); }}},
      R2C_FIELD("rmg.kernel_from_e", kernel_from_e, std::string),
      R2C_FIELD("rmg.lstm_kernel", lstm_kernel, int64_t),
      R2C_FIELD("eval.repeats", eval_repeats, int),
      R2C_FIELD("output.dir", output_dir, std::string),
  };
  return table;
}

#undef R2C_FIELD

}  // namespace

void RunConfig::validate() const {
  if (image_size <= 0 || image_size % 32 != 0) {
    throw Error(Errc::Config, "data.image_size must be a positive multiple of 32 (got " + std::to_string(image_size) + ")");
  }
  if (k < 0) throw Error(Errc::Config, "data.k must be >= 0");
  static const std::vector<int64_t> widths = {16, 32, 64, 128, 256};
  if (std::find(widths.begin(), widths.end(), c_d) == widths.end()) {
    throw Error(Errc::Config, "model.c_d must be one of 16, 32, 64, 128, 256");
  }
  if (steps <= 0) throw Error(Errc::Config, "train.steps must be positive");
  if (batch_size <= 0) throw Error(Errc::Config, "train.batch_size must be positive");
  if (!(lr > 0.0) || lr_floor < 0.0 || lr_floor > lr) throw Error(Errc::Config, "need 0 <= train.lr_floor <= train.lr, lr > 0");
  if (kernel_from_e != "linear" && kernel_from_e != "identity") {
    throw Error(Errc::Config, "rmg.kernel_from_e must be linear or identity");
  }
  if (lstm_kernel <= 0 || lstm_kernel % 2 == 0) throw Error(Errc::Config, "rmg.lstm_kernel must be odd and positive");
  if (eval_repeats <= 0) throw Error(Errc::Config, "eval.repeats must be positive");
  if (provider != "gt" && provider != "constant" && provider.rfind("model:", 0) != 0) {
    throw Error(Errc::Config, "reference.provider must be gt, constant or model:<path>");
  }
  if (encoder != "toy" && encoder.rfind("resnet50", 0) != 0) {
    throw Error(Errc::Config, "model.encoder must be toy or resnet50:<weights-path>");
  }
  if (output_dir.empty()) throw Error(Errc::Config, "output.dir must not be empty");
}

ModelOptions RunConfig::model_options() const {
  ModelOptions o;
  o.c_d = c_d;
  o.encoder = encoder;
  o.kernel_mode = kernel_from_e == "identity" ? KernelMode::Identity : KernelMode::Linear;
  o.lstm_kernel = lstm_kernel;
  o.cross_scale_path = cross_scale_path;
  return o;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.total_steps = steps;
  o.lr = lr;
  o.lr_floor = lr_floor;
  o.weighted_loss = weighted_loss;
  return o;
}

nlohmann::json config_to_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& [key, field] : fields()) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = field.get(config);
  }
  return j;
}

RunConfig apply_json(RunConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::Config, "config must be a JSON object");
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw Error(Errc::Config, "config section '" + section + "' must be an object");
    for (const auto& [name, value] : body.items()) {
      const auto key = section + "." + name;
      auto it = fields().find(key);
      if (it == fields().end()) throw Error(Errc::Config, "unknown config key '" + key + "'");
      it->second.set(base, value);
    }
  }
  return base;
}

RunConfig apply_override(RunConfig base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(Errc::Config, "override '" + assignment + "' is not key=value");
  const auto key = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  auto it = fields().find(key);
  if (it == fields().end()) throw Error(Errc::Config, "unknown config key '" + key + "'");
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded() || (value.is_string() == false && it->second.get(base).is_string())) value = raw;
  it->second.set(base, value);
  return base;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Config, "cannot open config file " + path);
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw Error(Errc::Config, "config file " + path + " is not valid JSON");
    config = apply_json(config, j);
  }
  for (const auto& o : overrides) config = apply_override(config, o);
  config.validate();
  return config;
}

}  // namespace r2c
