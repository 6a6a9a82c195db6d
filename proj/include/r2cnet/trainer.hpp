#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "r2cnet/dataset.hpp"
#include "r2cnet/head_loss.hpp"
#include "r2cnet/model.hpp"
#include "r2cnet/reference_encoder.hpp"

namespace r2c {

/// Cosine annealing from `base` at step 0 to `floor` at step `total`.
double cosine_lr(int64_t step, int64_t total, double base, double floor = 0.0);

/// Stacked episodes. `refs` is B x K x 3 x H x W (K may be 0); `ref_masks`
/// is B x K x 1 x H x W or undefined when any episode lacks masks.
struct Batch {
  torch::Tensor camo;
  torch::Tensor gt;
  torch::Tensor refs;
  torch::Tensor ref_masks;
};

Batch collate(const std::vector<Episode>& episodes);

/// Provider maps for a batch, shaped like `ref_masks`. Never tracks gradients.
torch::Tensor reference_maps(const ForegroundProvider& provider, const Batch& batch);

struct TrainOptions {
  int64_t total_steps = 2000;
  double lr = 5e-4;
  double lr_floor = 0.0;
  bool weighted_loss = false;
};

/// Owns the optimizer; the model is the only thing it writes to.
class Trainer {
 public:
  Trainer(R2CNet model, const ForegroundProvider& provider, TrainOptions options);

  /// Forward, structure loss, one Adam update at the scheduled learning rate.
  /// Throws Errc::NonFiniteLoss before touching the parameters if the loss is not finite.
  LossReport step(const Batch& batch);

  int64_t step_count() const { return step_; }
  double learning_rate() const { return cosine_lr(step_, options_.total_steps, options_.lr, options_.lr_floor); }

  const TrainOptions& options() const { return options_; }
  R2CNet& model() { return model_; }
  torch::optim::Adam& optimizer() { return optimizer_; }

  void save(const std::filesystem::path& checkpoint, const nlohmann::json& config) const;
  void load(const std::filesystem::path& checkpoint);

 private:
  R2CNet model_;
  const ForegroundProvider& provider_;
  TrainOptions options_;
  torch::optim::Adam optimizer_;
  int64_t step_ = 0;
};

struct FitOptions {
  int k = 5;
  int batch_size = 32;
  int image_size = 352;
  std::uint64_t seed = 0;
};

using StepCallback = std::function<void(int64_t step, double lr, const LossReport& loss)>;

/// Runs the trainer to its scheduled total. Records are visited in shuffled
/// epochs of `index.camo`; every episode draws its own references.
void fit(Trainer& trainer, const DatasetIndex& index, const FitOptions& options, const StepCallback& on_step = {});

/// Writes `checkpoint` plus `checkpoint.manifest.json` beside it. Parameters
/// are keyed `model/<module path>`, buffers `buffer/<module path>`.
void save_checkpoint(const std::filesystem::path& checkpoint, R2CNetImpl& model, const torch::optim::Optimizer* optimizer,
                     int64_t step, const nlohmann::json& config);

/// Config snapshot stored in a checkpoint (Errc::ReadFailure if missing).
nlohmann::json read_checkpoint_config(const std::filesystem::path& checkpoint);

/// Restores model weights; returns the stored step counter.
int64_t load_checkpoint(const std::filesystem::path& checkpoint, R2CNetImpl& model,
                        torch::optim::Optimizer* optimizer = nullptr);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace r2c
