#include "r2cnet/reference_encoder.hpp"

#include <filesystem>

#include "r2cnet/error.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace r2c {

torch::Tensor ConstantProvider::maps(const torch::Tensor& images, const torch::Tensor&) const {
  return torch::ones({images.size(0), 1, images.size(2), images.size(3)}, images.options());
}

torch::Tensor GtMaskProvider::maps(const torch::Tensor& images, const torch::Tensor& masks) const {
  if (!masks.defined() || masks.numel() == 0) {
    throw Error(Errc::ProviderUnavailable, "gt provider needs referring masks, none were loaded");
  }
  if (masks.size(0) != images.size(0) || masks.size(2) != images.size(2) || masks.size(3) != images.size(3)) {
    throw Error(Errc::ShapeMismatch, "referring masks do not match referring images");
  }
  return masks;
}

SaliencyNetImpl::SaliencyNetImpl() {
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 8, 3).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(8, 8, 3).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(8, 1, 1))));
}

torch::Tensor SaliencyNetImpl::forward(const torch::Tensor& images) { return torch::sigmoid(body_->forward(images)); }

ModelProvider::ModelProvider(const std::string& weights_path) : path_(weights_path) {
  if (weights_path.empty() || !std::filesystem::exists(weights_path)) {
    throw Error(Errc::ProviderUnavailable, "saliency weights not found: '" + weights_path + "'");
  }
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(weights_path);
    net_->load(archive);
  } catch (const c10::Error& e) {
    throw Error(Errc::ProviderUnavailable, "cannot load saliency weights '" + weights_path + "': " + e.msg());
  }
  net_->eval();
  for (auto& p : net_->parameters()) p.set_requires_grad(false);
}

torch::Tensor ModelProvider::maps(const torch::Tensor& images, const torch::Tensor&) const {
  torch::NoGradGuard no_grad;
  auto& net = const_cast<SaliencyNetImpl&>(*net_);
  return net.forward(images.to(net.parameters().front().dtype())).to(images.dtype());
}

std::vector<torch::Tensor> ModelProvider::parameters() const { return net_->parameters(); }

std::unique_ptr<ForegroundProvider> make_provider(const std::string& spec) {
  if (spec == "gt") return std::make_unique<GtMaskProvider>();
  if (spec == "constant") return std::make_unique<ConstantProvider>();
  if (spec.rfind("model:", 0) == 0) return std::make_unique<ModelProvider>(spec.substr(6));
  if (spec == "model") throw Error(Errc::ProviderUnavailable, "model provider configured without weights");
  throw Error(Errc::Config, "unknown reference.provider '" + spec + "'");
}

std::vector<torch::Tensor> foreground_maps(const ForegroundProvider& provider,
                                           const std::vector<torch::Tensor>& ref_images,
                                           const std::vector<torch::Tensor>& ref_masks) {
  if (ref_images.empty()) return {};
  torch::NoGradGuard no_grad;
  auto images = torch::stack(ref_images);
  torch::Tensor masks;
  if (!ref_masks.empty()) masks = torch::stack(ref_masks);
  auto maps = provider.maps(images, masks);
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < maps.size(0); ++i) out.push_back(maps[i]);
  return out;
}

torch::Tensor masked_average_pool(const torch::Tensor& feature, const torch::Tensor& map) {
  const bool single = feature.dim() == 3;
  auto f = single ? feature.unsqueeze(0) : feature;
  auto m = single ? map.unsqueeze(0) : map;
  if (f.dim() != 4 || m.dim() != 4 || m.size(1) != 1 || f.size(0) != m.size(0)) {
    throw Error(Errc::ShapeMismatch, "masked_average_pool expects CxHxW features and a 1xHxW map");
  }
  m = m.to(f.dtype());
  if (m.size(2) != f.size(2) || m.size(3) != f.size(3)) {
    m = F::interpolate(m, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{f.size(2), f.size(3)})
                              .mode(torch::kBilinear)
                              .align_corners(false)
                              .antialias(true));
  }
  auto denom = m.sum({2, 3});  // N x 1
  if ((denom <= 1e-6).any().item<bool>()) {
    throw Error(Errc::EmptyMask, "foreground map is empty after downsampling");
  }
  auto pooled = (f * m).sum({2, 3}) / denom;
  return single ? pooled.squeeze(0) : pooled;
}

ReferenceEncoderImpl::ReferenceEncoderImpl(int64_t feature_channels, int64_t c_d) {
  proj_ = register_module("proj", nn::Conv2d(nn::Conv2dOptions(feature_channels, c_d, 1)));
}

torch::Tensor ReferenceEncoderImpl::forward(const torch::Tensor& features, const torch::Tensor& maps) {
  auto pooled = masked_average_pool(features, maps);  // N x c_b
  return proj_(pooled.unsqueeze(-1).unsqueeze(-1)).flatten(1);
}

CommonRepresentation aggregate_common_representation(const std::vector<torch::Tensor>& objects) {
  if (objects.empty()) throw Error(Errc::EmptyList, "no object representations to aggregate");
  for (const auto& o : objects) {
    if (o.sizes() != objects.front().sizes()) throw Error(Errc::ShapeMismatch, "object representations differ in size");
  }
  return {torch::stack(objects).mean(0), static_cast<int64_t>(objects.size())};
}

torch::Tensor aggregate_common_representation(const torch::Tensor& objects) {
  if (objects.dim() != 3) throw Error(Errc::ShapeMismatch, "expected B x K x c_d object representations");
  if (objects.size(1) == 0) throw Error(Errc::EmptyList, "no object representations to aggregate");
  return objects.mean(1);
}

}  // namespace r2c
