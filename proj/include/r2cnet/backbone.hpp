#pragma once

#include <array>
#include <memory>
#include <string>

#include <torch/torch.h>

namespace r2c {

/// Encoder outputs at strides 8, 16 and 32 with native channel counts.
struct RawPyramid {
  torch::Tensor c2;
  torch::Tensor c3;
  torch::Tensor c4;
};

/// Projected pyramid: every level has c_d channels.
struct FeaturePyramid {
  torch::Tensor f2;  // B x c_d x H/8 x W/8
  torch::Tensor f3;  // B x c_d x H/16 x W/16
  torch::Tensor f4;  // B x c_d x H/32 x W/32
};

/// Any network exposing stride-8/16/32 stages.
class EncoderImpl : public torch::nn::Module {
 public:
  virtual RawPyramid forward(const torch::Tensor& images) = 0;
  virtual std::array<int64_t, 3> channels() const = 0;
};

/// Desk-scale encoder: a stride-4 stem followed by three stride-2 stages,
/// each two 3x3 conv + GroupNorm + ReLU.
class ToyEncoderImpl : public EncoderImpl {
 public:
  explicit ToyEncoderImpl(std::array<int64_t, 4> widths = {16, 32, 64, 128});

  RawPyramid forward(const torch::Tensor& images) override;
  std::array<int64_t, 3> channels() const override { return {widths_[1], widths_[2], widths_[3]}; }

 private:
  std::array<int64_t, 4> widths_;
  torch::nn::Sequential stem_{nullptr}, stage2_{nullptr}, stage3_{nullptr}, stage4_{nullptr};
};

/// ResNet-50 trunk (layer2..layer4 outputs). Weights, if any, are read with
/// torch::load from a file written by torch::save of this module.
class ResNet50EncoderImpl : public EncoderImpl {
 public:
  explicit ResNet50EncoderImpl(const std::string& weights_path = "");

  RawPyramid forward(const torch::Tensor& images) override;
  std::array<int64_t, 3> channels() const override { return {512, 1024, 2048}; }

 private:
  torch::nn::Sequential stem_{nullptr}, layer1_{nullptr}, layer2_{nullptr}, layer3_{nullptr}, layer4_{nullptr};
};

/// "toy" or "resnet50:<weights-path>" (path may be empty for random init).
std::shared_ptr<EncoderImpl> make_encoder(const std::string& spec);

/// Runs the encoder after checking that H and W are multiples of 32
/// (Errc::BadShape otherwise). Accepts 3xHxW or Bx3xHxW input.
RawPyramid extract_pyramid(const torch::Tensor& image, EncoderImpl& encoder);

/// One learned 1x1 convolution (with bias) per level, mapping to c_d channels.
class PyramidProjectionImpl : public torch::nn::Module {
 public:
  PyramidProjectionImpl(std::array<int64_t, 3> in_channels, int64_t c_d);

  FeaturePyramid forward(const RawPyramid& raw);

  torch::nn::Conv2d& level(int j);  // j in {2,3,4}

 private:
  torch::nn::Conv2d proj2_{nullptr}, proj3_{nullptr}, proj4_{nullptr};
};
TORCH_MODULE(PyramidProjection);

}  // namespace r2c
