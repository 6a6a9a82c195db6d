#include "r2cnet/model.hpp"

#include <cmath>

#include "r2cnet/error.hpp"

namespace r2c {

namespace {

// Foreground prior for the prediction heads' initial bias.
constexpr double kForegroundPrior = 0.05;

void initialize(R2CNetImpl& model) {
  torch::NoGradGuard no_grad;
  const double logit = std::log(kForegroundPrior / (1.0 - kForegroundPrior));
  for (auto* head : {&model.rfe->head2, &model.rfe->head3, &model.rfe->head4, &model.decoder->conv1}) {
    (*head)->bias.fill_(logit);
  }
}

}  // namespace

R2CNetImpl::R2CNetImpl(const ModelOptions& options) : options_(options) {
  encoder = register_module("encoder", make_encoder(options.encoder));
  const auto channels = encoder->channels();
  projection = register_module("projection", PyramidProjection(channels, options.c_d));
  reference = register_module("reference", ReferenceEncoder(channels[2], options.c_d));
  rmg = register_module("rmg", Rmg(options.c_d, options.kernel_mode, options.lstm_kernel));
  rfe = register_module("rfe", Rfe(options.c_d, options.cross_scale_path));
  decoder = register_module("decoder", SegDecoder(options.c_d));
  baseline_embedding = register_parameter("baseline_embedding", torch::randn({options.c_d}) * 0.1);
  initialize(*this);
}

torch::Tensor R2CNetImpl::common_representation(const torch::Tensor& refs, const torch::Tensor& maps) {
  if (!refs.defined() || refs.size(1) == 0) {
    throw Error(Errc::EmptyList, "common_representation needs at least one reference");
  }
  const auto b = refs.size(0);
  const auto k = refs.size(1);
  auto flat = refs.flatten(0, 1);
  auto raw = extract_pyramid(flat, *encoder);
  auto objects = reference(raw.c4, maps.flatten(0, 1));
  return aggregate_common_representation(objects.view({b, k, -1}));
}

ForwardOutput R2CNetImpl::forward_with_common(const torch::Tensor& camo, const torch::Tensor& common) {
  ForwardOutput out;
  out.common = common;
  out.pyramid = projection(extract_pyramid(camo, *encoder));
  out.rmg = rmg(out.pyramid, common);
  out.rfe = rfe(out.rmg.fused, out.rmg.heatmap);
  const auto h = camo.size(-2);
  const auto w = camo.size(-1);
  auto scales = rfe->scale_predictions(out.rfe.scales, h, w);
  out.predictions = {scales[0], scales[1], scales[2], decoder(out.rfe.enriched, h, w)};
  return out;
}

ForwardOutput R2CNetImpl::forward(const torch::Tensor& camo, const torch::Tensor& refs, const torch::Tensor& maps) {
  torch::Tensor common;
  if (!refs.defined() || refs.numel() == 0 || refs.size(1) == 0) {
    common = baseline_embedding.unsqueeze(0).expand({camo.size(0), -1});
  } else {
    common = common_representation(refs, maps);
  }
  return forward_with_common(camo, common);
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace r2c
