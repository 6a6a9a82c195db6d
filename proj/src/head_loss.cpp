#include "r2cnet/head_loss.hpp"

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace r2c {

SegDecoderImpl::SegDecoderImpl(int64_t c_d) {
  conv3 = register_module("conv3", nn::Conv2d(nn::Conv2dOptions(c_d, c_d, 3).padding(1)));
  conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(c_d, 1, 1)));
}

torch::Tensor SegDecoderImpl::forward(const torch::Tensor& enriched, int64_t out_h, int64_t out_w) {
  auto logits = conv1(torch::relu(conv3(enriched)));
  return torch::sigmoid(resize_bilinear(logits, out_h, out_w));
}

namespace {

void check_shapes(const torch::Tensor& p, const torch::Tensor& g) {
  if (p.sizes() != g.sizes()) throw Error(Errc::ShapeMismatch, "prediction and ground truth shapes differ");
}

// Sums over everything but the leading batch axis; unbatched maps count as one image.
torch::Tensor per_image_sum(const torch::Tensor& x) {
  if (x.dim() <= 3) return x.sum().unsqueeze(0);
  return x.flatten(1).sum(1);
}

torch::Tensor structure_weights(const torch::Tensor& g) {
  auto g4 = g.dim() == 4 ? g : g.reshape({1, 1, g.size(-2), g.size(-1)});
  auto pooled = F::avg_pool2d(g4, F::AvgPool2dFuncOptions(31).stride(1).padding(15));
  return (1.0 + 5.0 * (pooled - g4).abs()).reshape(g.sizes());
}

}  // namespace

torch::Tensor bce_loss(const torch::Tensor& p, const torch::Tensor& g) {
  check_shapes(p, g);
  auto pc = p.clamp(kBceEps, 1.0 - kBceEps);
  return -(g * torch::log(pc) + (1.0 - g) * torch::log(1.0 - pc)).mean();
}

torch::Tensor iou_loss(const torch::Tensor& p, const torch::Tensor& g) {
  check_shapes(p, g);
  auto inter = per_image_sum(p * g);
  auto uni = per_image_sum(p) + per_image_sum(g) - inter;
  return (1.0 - (inter + kIouSmooth) / (uni + kIouSmooth)).mean();
}

torch::Tensor weighted_bce_loss(const torch::Tensor& p, const torch::Tensor& g) {
  check_shapes(p, g);
  auto w = structure_weights(g);
  auto pc = p.clamp(kBceEps, 1.0 - kBceEps);
  auto bce = -(g * torch::log(pc) + (1.0 - g) * torch::log(1.0 - pc));
  return (per_image_sum(w * bce) / per_image_sum(w)).mean();
}

torch::Tensor weighted_iou_loss(const torch::Tensor& p, const torch::Tensor& g) {
  check_shapes(p, g);
  auto w = structure_weights(g);
  auto inter = per_image_sum(w * p * g);
  auto uni = per_image_sum(w * (p + g));
  return (1.0 - (inter + kIouSmooth) / (uni - inter + kIouSmooth)).mean();
}

StructureLoss structure_loss(const PredictionSet& pred, const torch::Tensor& g, bool weighted) {
  StructureLoss out;
  auto maps = pred.maps();
  std::vector<torch::Tensor> terms;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    auto bce = weighted ? weighted_bce_loss(maps[i], g) : bce_loss(maps[i], g);
    auto iou = weighted ? weighted_iou_loss(maps[i], g) : iou_loss(maps[i], g);
    out.report.per_term[i] = {bce.item<double>(), iou.item<double>()};
    terms.push_back(bce + iou);
  }
  out.total = torch::stack(terms).sum();
  out.report.total = out.total.item<double>();
  return out;
}

}  // namespace r2c
