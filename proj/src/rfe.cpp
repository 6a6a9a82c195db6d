#include "r2cnet/rfe.hpp"

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"

namespace nn = torch::nn;

namespace r2c {

ConvBlockImpl::ConvBlockImpl(int64_t in_channels, int64_t out_channels) {
  conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)));
  conv2 = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).padding(1)));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) { return torch::relu(conv2(torch::relu(conv1(x)))); }

RfeImpl::RfeImpl(int64_t c_d, bool cross_scale_path) : c_d_(c_d), cross_scale_path_(cross_scale_path) {
  block2 = register_module("block2", ConvBlock(c_d + 1, c_d));
  block3 = register_module("block3", ConvBlock(2 * c_d + 1, c_d));
  block4 = register_module("block4", ConvBlock(2 * c_d + 1, c_d));
  reduce = register_module("reduce", nn::Conv2d(nn::Conv2dOptions(3 * c_d, c_d, 1)));
  head2 = register_module("head2", nn::Conv2d(nn::Conv2dOptions(c_d, 1, 1)));
  head3 = register_module("head3", nn::Conv2d(nn::Conv2dOptions(c_d, 1, 1)));
  head4 = register_module("head4", nn::Conv2d(nn::Conv2dOptions(c_d, 1, 1)));
}

torch::Tensor RfeImpl::enrich_at_scale(const torch::Tensor& fused, const torch::Tensor& heatmap, int level,
                                       const torch::Tensor& finer) {
  if (level < 2 || level > 4) throw Error(Errc::Config, "RFE level must be 2, 3 or 4");
  const int64_t factor = int64_t{1} << (level - 2);
  const int64_t h = fused.size(2) / factor;
  const int64_t w = fused.size(3) / factor;
  auto f = resize_bilinear(fused, h, w);
  auto m = resize_bilinear(torch::sigmoid(heatmap), h, w);
  if (level == 2) return block2(torch::cat({f, m}, 1));

  torch::Tensor cross;
  if (cross_scale_path_ && finer.defined()) {
    cross = resize_bilinear(finer, h, w);
  } else {
    cross = torch::zeros({fused.size(0), c_d_, h, w}, fused.options());
  }
  auto input = torch::cat({f, m, cross}, 1);
  return level == 3 ? block3(input) : block4(input);
}

RfeOutput RfeImpl::forward(const torch::Tensor& fused, const torch::Tensor& heatmap) {
  RfeOutput out;
  out.scales.s2 = enrich_at_scale(fused, heatmap, 2);
  out.scales.s3 = enrich_at_scale(fused, heatmap, 3, out.scales.s2);
  out.scales.s4 = enrich_at_scale(fused, heatmap, 4, out.scales.s2);
  const auto h = fused.size(2);
  const auto w = fused.size(3);
  auto stacked = torch::cat({out.scales.s2, resize_bilinear(out.scales.s3, h, w), resize_bilinear(out.scales.s4, h, w)}, 1);
  out.enriched = torch::relu(reduce(stacked));
  return out;
}

std::array<torch::Tensor, 3> RfeImpl::scale_predictions(const ScaleFeatures& scales, int64_t out_h, int64_t out_w) {
  return {torch::sigmoid(resize_bilinear(head2(scales.s2), out_h, out_w)),
          torch::sigmoid(resize_bilinear(head3(scales.s3), out_h, out_w)),
          torch::sigmoid(resize_bilinear(head4(scales.s4), out_h, out_w))};
}

}  // namespace r2c
