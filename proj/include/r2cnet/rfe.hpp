#pragma once

#include <array>

#include <torch/torch.h>

namespace r2c {

/// Two 3x3 convolutions, ReLU after each.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(int64_t in_channels, int64_t out_channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(ConvBlock);

struct ScaleFeatures {
  torch::Tensor s2;  // B x c_d x H/8 x W/8
  torch::Tensor s3;  // B x c_d x H/16 x W/16
  torch::Tensor s4;  // B x c_d x H/32 x W/32
};

struct RfeOutput {
  torch::Tensor enriched;  // B x c_d x H/8 x W/8
  ScaleFeatures scales;
};

/// Referring feature enrichment.
///
/// Level j works at 1/2^(j-2) of the fused feature's resolution. Its Conv
/// Block sees [resize(fused) || resize(sigmoid(heatmap))], and for j = 3, 4
/// also the finest scale feature resized to that level (the cross-scale
/// path). With the path switched off those channels are fed zeros, so both
/// wirings share one parameter set. The three scale features are brought
/// back to stride 8, concatenated and reduced by 1x1 conv + ReLU.
class RfeImpl : public torch::nn::Module {
 public:
  explicit RfeImpl(int64_t c_d, bool cross_scale_path = true);

  /// One level's Conv Block output; `finer` is the stride-8 scale feature
  /// (ignored for j = 2, zero-filled when undefined for j = 3, 4).
  torch::Tensor enrich_at_scale(const torch::Tensor& fused, const torch::Tensor& heatmap, int level,
                                const torch::Tensor& finer = {});

  RfeOutput forward(const torch::Tensor& fused, const torch::Tensor& heatmap);

  /// Per-level 1x1 conv to one channel, bilinear upsampling to out_h x out_w, sigmoid.
  std::array<torch::Tensor, 3> scale_predictions(const ScaleFeatures& scales, int64_t out_h, int64_t out_w);

  void set_cross_scale_path(bool on) { cross_scale_path_ = on; }
  bool cross_scale_path() const { return cross_scale_path_; }

  ConvBlock block2{nullptr}, block3{nullptr}, block4{nullptr};
  torch::nn::Conv2d reduce{nullptr};
  torch::nn::Conv2d head2{nullptr}, head3{nullptr}, head4{nullptr};

 private:
  int64_t c_d_;
  bool cross_scale_path_;
};
TORCH_MODULE(Rfe);

}  // namespace r2c
