#pragma once

#include <array>
#include <utility>

#include <torch/torch.h>

namespace r2c {

/// 3x3 conv (c_d -> c_d) + ReLU, 1x1 conv (c_d -> 1), bilinear upsample, sigmoid.
class SegDecoderImpl : public torch::nn::Module {
 public:
  explicit SegDecoderImpl(int64_t c_d);

  torch::Tensor forward(const torch::Tensor& enriched, int64_t out_h, int64_t out_w);

  torch::nn::Conv2d conv3{nullptr}, conv1{nullptr};
};
TORCH_MODULE(SegDecoder);

/// The four supervised maps, each B x 1 x H x W in (0,1).
struct PredictionSet {
  torch::Tensor m_scale_2, m_scale_3, m_scale_4, m_seg;

  std::array<torch::Tensor, 4> maps() const { return {m_scale_2, m_scale_3, m_scale_4, m_seg}; }
};

constexpr double kBceEps = 1e-7;
constexpr double kIouSmooth = 1.0;

/// Mean over all pixels of -[g log p + (1-g) log(1-p)], p clamped to [1e-7, 1-1e-7].
torch::Tensor bce_loss(const torch::Tensor& p, const torch::Tensor& g);

/// 1 - (sum pg + 1) / (sum p + sum g - sum pg + 1), per image, averaged over a batch.
torch::Tensor iou_loss(const torch::Tensor& p, const torch::Tensor& g);

/// Pixel-weighted BCE and IoU with weights 1 + 5 |avgpool31(g) - g|.
torch::Tensor weighted_bce_loss(const torch::Tensor& p, const torch::Tensor& g);
torch::Tensor weighted_iou_loss(const torch::Tensor& p, const torch::Tensor& g);

struct LossReport {
  double total = 0.0;
  std::array<std::pair<double, double>, 4> per_term{};  // (bce, iou) per map
};

struct StructureLoss {
  torch::Tensor total;  // differentiable
  LossReport report;
};

/// Sum over the four maps of BCE + IoU against g.
StructureLoss structure_loss(const PredictionSet& pred, const torch::Tensor& g, bool weighted = false);

}  // namespace r2c
