#pragma once

#include <torch/torch.h>

#include "r2cnet/backbone.hpp"

namespace r2c {

// Referring mask generation: coordinate embedding + affine modulation by the
// common representation, coarse-to-fine ConvLSTM fusion, and target matching
// with a dynamic 1x1 kernel formed from the common representation.

constexpr int64_t kCoordChannels = 8;

/// 8 x h x w grid features. For cell (i, j):
/// [cx, cy, x0, y0, x1, y1, 1/w, 1/h] with cx = 2(j+0.5)/w - 1,
/// cy = 2(i+0.5)/h - 1, (x0, y0) the cell's min corner and (x1, y1) its max
/// corner in the same [-1, 1] frame.
torch::Tensor coord_embedding(int64_t h, int64_t w, const torch::TensorOptions& options = {});

/// B x C x h x w -> B x (C+8) x h x w.
torch::Tensor append_coord_embedding(const torch::Tensor& x);

struct CoordAugmentedFeatures {
  torch::Tensor x2, x3, x4;
};
CoordAugmentedFeatures append_coord_embedding(const FeaturePyramid& pyramid);

struct ModulationParams {
  torch::Tensor gamma;  // B x (c_d+8)
  torch::Tensor beta;   // B x (c_d+8)
};

/// y = ReLU(Conv3x3(ReLU(gamma * x + beta))), gamma and beta linear in E.
class AffineModulationImpl : public torch::nn::Module {
 public:
  explicit AffineModulationImpl(int64_t c_d);

  /// x: B x (c_d+8) x h x w; e: B x c_d. Returns B x c_d x h x w.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& e);
  ModulationParams params(const torch::Tensor& e);

  torch::nn::Linear gamma{nullptr}, beta{nullptr};
  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(AffineModulation);

struct LstmState {
  torch::Tensor h;
  torch::Tensor c;
};

/// Convolutional LSTM cell; all four gates come from one convolution over
/// [input || h], ordered input, forget, output, candidate.
class ConvLstmCellImpl : public torch::nn::Module {
 public:
  ConvLstmCellImpl(int64_t input_channels, int64_t hidden_channels, int64_t kernel_size = 3);

  LstmState forward(const torch::Tensor& input, const LstmState& state);

  torch::nn::Conv2d gates{nullptr};

 private:
  int64_t hidden_;
};
TORCH_MODULE(ConvLstmCell);

/// h4 = c4 = y4, then one shared cell at stride 16 and stride 8 with the
/// state bilinearly upsampled in between. Returns h2.
torch::Tensor multiscale_fuse(ConvLstmCellImpl& cell, const torch::Tensor& y2, const torch::Tensor& y3,
                              const torch::Tensor& y4);

enum class KernelMode { Linear, Identity };

/// Dynamic 1x1 convolution without bias: heatmap(p) = <kernel(E), fused(:, p)>.
class TargetMatchImpl : public torch::nn::Module {
 public:
  TargetMatchImpl(int64_t c_d, KernelMode mode);

  torch::Tensor kernel(const torch::Tensor& e);
  /// fused: B x c_d x h x w; e: B x c_d. Returns B x 1 x h x w.
  torch::Tensor forward(const torch::Tensor& fused, const torch::Tensor& e);

  KernelMode mode() const { return mode_; }

  torch::nn::Linear kernel_map{nullptr};

 private:
  KernelMode mode_;
};
TORCH_MODULE(TargetMatch);

struct RmgOutput {
  torch::Tensor y2, y3, y4;
  torch::Tensor fused;    // B x c_d x H/8 x W/8
  torch::Tensor heatmap;  // B x 1 x H/8 x W/8
};

class RmgImpl : public torch::nn::Module {
 public:
  RmgImpl(int64_t c_d, KernelMode mode = KernelMode::Linear, int64_t lstm_kernel = 3);

  RmgOutput forward(const FeaturePyramid& pyramid, const torch::Tensor& e);

  AffineModulation mod2{nullptr}, mod3{nullptr}, mod4{nullptr};
  ConvLstmCell cell{nullptr};
  TargetMatch match{nullptr};
};
TORCH_MODULE(Rmg);

}  // namespace r2c
