#pragma once

#include <memory>
#include <string>

#include <torch/torch.h>

#include "r2cnet/backbone.hpp"
#include "r2cnet/head_loss.hpp"
#include "r2cnet/reference_encoder.hpp"
#include "r2cnet/rfe.hpp"
#include "r2cnet/rmg.hpp"

namespace r2c {

struct ModelOptions {
  int64_t c_d = 64;
  std::string encoder = "toy";
  KernelMode kernel_mode = KernelMode::Linear;
  int64_t lstm_kernel = 3;
  bool cross_scale_path = true;
};

/// Everything a forward pass produces, intermediates included.
struct ForwardOutput {
  FeaturePyramid pyramid;
  torch::Tensor common;  // B x c_d
  RmgOutput rmg;
  RfeOutput rfe;
  PredictionSet predictions;
};

/// Reference branch + segmentation branch. The encoder is shared: its
/// deepest stage also provides the referring-image features.
class R2CNetImpl : public torch::nn::Module {
 public:
  explicit R2CNetImpl(const ModelOptions& options);

  /// refs: B x K x 3 x H x W, maps: B x K x 1 x H x W. With K = 0 (or
  /// undefined refs) the learned baseline embedding stands in for E.
  torch::Tensor common_representation(const torch::Tensor& refs, const torch::Tensor& maps);

  /// camo: B x 3 x H x W.
  ForwardOutput forward(const torch::Tensor& camo, const torch::Tensor& refs, const torch::Tensor& maps);

  /// Forward from a precomputed common representation (B x c_d).
  ForwardOutput forward_with_common(const torch::Tensor& camo, const torch::Tensor& common);

  const ModelOptions& options() const { return options_; }

  std::shared_ptr<EncoderImpl> encoder;
  PyramidProjection projection{nullptr};
  ReferenceEncoder reference{nullptr};
  Rmg rmg{nullptr};
  Rfe rfe{nullptr};
  SegDecoder decoder{nullptr};
  torch::Tensor baseline_embedding;

 private:
  ModelOptions options_;
};
TORCH_MODULE(R2CNet);

int64_t parameter_count(const torch::nn::Module& module);

}  // namespace r2c
