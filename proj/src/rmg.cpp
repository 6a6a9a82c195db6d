#include "r2cnet/rmg.hpp"

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"

namespace nn = torch::nn;

namespace r2c {

torch::Tensor coord_embedding(int64_t h, int64_t w, const torch::TensorOptions& options) {
  const auto opts = options.has_dtype() ? options : options.dtype(torch::kFloat32);
  const double hd = static_cast<double>(h);
  const double wd = static_cast<double>(w);
  auto col = torch::arange(w, opts).view({1, w}).expand({h, w});
  auto row = torch::arange(h, opts).view({h, 1}).expand({h, w});
  auto cx = (col + 0.5) * (2.0 / wd) - 1.0;
  auto cy = (row + 0.5) * (2.0 / hd) - 1.0;
  auto x0 = col * (2.0 / wd) - 1.0;
  auto y0 = row * (2.0 / hd) - 1.0;
  auto x1 = (col + 1.0) * (2.0 / wd) - 1.0;
  auto y1 = (row + 1.0) * (2.0 / hd) - 1.0;
  auto inv_w = torch::full({h, w}, 1.0 / wd, opts);
  auto inv_h = torch::full({h, w}, 1.0 / hd, opts);
  return torch::stack({cx, cy, x0, y0, x1, y1, inv_w, inv_h});
}

torch::Tensor append_coord_embedding(const torch::Tensor& x) {
  if (x.dim() != 4) throw Error(Errc::ShapeMismatch, "append_coord_embedding expects B x C x h x w");
  auto coords = coord_embedding(x.size(2), x.size(3), x.options()).unsqueeze(0).expand({x.size(0), -1, -1, -1});
  return torch::cat({x, coords}, 1);
}

CoordAugmentedFeatures append_coord_embedding(const FeaturePyramid& pyramid) {
  return {append_coord_embedding(pyramid.f2), append_coord_embedding(pyramid.f3),
          append_coord_embedding(pyramid.f4)};
}

AffineModulationImpl::AffineModulationImpl(int64_t c_d) {
  gamma = register_module("gamma", nn::Linear(c_d, c_d + kCoordChannels));
  beta = register_module("beta", nn::Linear(c_d, c_d + kCoordChannels));
  conv = register_module("conv", nn::Conv2d(nn::Conv2dOptions(c_d + kCoordChannels, c_d, 3).padding(1)));
}

ModulationParams AffineModulationImpl::params(const torch::Tensor& e) { return {gamma(e), beta(e)}; }

torch::Tensor AffineModulationImpl::forward(const torch::Tensor& x, const torch::Tensor& e) {
  auto p = params(e);
  auto g = p.gamma.unsqueeze(-1).unsqueeze(-1);
  auto b = p.beta.unsqueeze(-1).unsqueeze(-1);
  return torch::relu(conv(torch::relu(g * x + b)));
}

ConvLstmCellImpl::ConvLstmCellImpl(int64_t input_channels, int64_t hidden_channels, int64_t kernel_size)
    : hidden_(hidden_channels) {
  gates = register_module("gates", nn::Conv2d(nn::Conv2dOptions(input_channels + hidden_channels,
                                                                4 * hidden_channels, kernel_size)
                                                  .padding(kernel_size / 2)));
}

LstmState ConvLstmCellImpl::forward(const torch::Tensor& input, const LstmState& state) {
  if (input.size(2) != state.h.size(2) || input.size(3) != state.h.size(3) || state.h.sizes() != state.c.sizes()) {
    throw Error(Errc::ShapeMismatch, "ConvLSTM input and state are not spatially aligned");
  }
  auto z = gates(torch::cat({input, state.h}, 1));
  auto parts = z.chunk(4, 1);
  auto i = torch::sigmoid(parts[0]);
  auto f = torch::sigmoid(parts[1]);
  auto o = torch::sigmoid(parts[2]);
  auto g = torch::tanh(parts[3]);
  auto c = f * state.c + i * g;
  return {o * torch::tanh(c), c};
}

torch::Tensor multiscale_fuse(ConvLstmCellImpl& cell, const torch::Tensor& y2, const torch::Tensor& y3,
                              const torch::Tensor& y4) {
  LstmState state{y4, y4};
  for (const auto* y : {&y3, &y2}) {
    const auto h = y->size(2);
    const auto w = y->size(3);
    state = cell.forward(*y, {resize_bilinear(state.h, h, w), resize_bilinear(state.c, h, w)});
  }
  return state.h;
}

TargetMatchImpl::TargetMatchImpl(int64_t c_d, KernelMode mode) : mode_(mode) {
  if (mode_ == KernelMode::Linear) kernel_map = register_module("kernel_map", nn::Linear(c_d, c_d));
}

torch::Tensor TargetMatchImpl::kernel(const torch::Tensor& e) {
  return mode_ == KernelMode::Linear ? kernel_map(e) : e;
}

torch::Tensor TargetMatchImpl::forward(const torch::Tensor& fused, const torch::Tensor& e) {
  auto k = kernel(e);
  if (k.size(-1) != fused.size(1)) {
    throw Error(Errc::ShapeMismatch, "dynamic kernel length does not match fused channels");
  }
  return (fused * k.unsqueeze(-1).unsqueeze(-1)).sum(1, /*keepdim=*/true);
}

RmgImpl::RmgImpl(int64_t c_d, KernelMode mode, int64_t lstm_kernel) {
  mod2 = register_module("mod2", AffineModulation(c_d));
  mod3 = register_module("mod3", AffineModulation(c_d));
  mod4 = register_module("mod4", AffineModulation(c_d));
  cell = register_module("cell", ConvLstmCell(c_d, c_d, lstm_kernel));
  match = register_module("match", TargetMatch(c_d, mode));
}

RmgOutput RmgImpl::forward(const FeaturePyramid& pyramid, const torch::Tensor& e) {
  auto x = append_coord_embedding(pyramid);
  RmgOutput out;
  out.y2 = mod2(x.x2, e);
  out.y3 = mod3(x.x3, e);
  out.y4 = mod4(x.x4, e);
  out.fused = multiscale_fuse(*cell, out.y2, out.y3, out.y4);
  out.heatmap = match(out.fused, e);
  return out;
}

}  // namespace r2c
