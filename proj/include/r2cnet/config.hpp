#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "r2cnet/model.hpp"
#include "r2cnet/trainer.hpp"

namespace r2c {

/// Everything a CLI run needs. Layering: defaults <- JSON file <- `key=value` overrides.
struct RunConfig {
  std::string data_root;
  int image_size = 352;
  int k = 5;
  int64_t c_d = 64;
  std::string encoder = "toy";
  std::string provider = "gt";
  bool weighted_loss = false;
  int64_t steps = 2000;
  int batch_size = 32;
  double lr = 5e-4;
  double lr_floor = 0.0;
  std::uint64_t seed = 0;
  bool cross_scale_path = true;
  std::string kernel_from_e = "linear";
  int64_t lstm_kernel = 3;
  int eval_repeats = 1;
  std::string output_dir = "out";

  /// Throws Errc::Config on the first violated constraint.
  void validate() const;

  ModelOptions model_options() const;
  TrainOptions train_options() const;
};

/// Dotted-key JSON view ({"data": {"root": ...}, ...}).
nlohmann::json config_to_json(const RunConfig& config);

/// Applies a (possibly partial) nested JSON object on top of `base`.
RunConfig apply_json(RunConfig base, const nlohmann::json& j);

/// Applies one `section.key=value` override.
RunConfig apply_override(RunConfig base, const std::string& assignment);

/// defaults <- file (when non-empty) <- overrides, then validate().
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace r2c
