#include "r2cnet/backbone.hpp"

#include <filesystem>

#include "r2cnet/error.hpp"

namespace nn = torch::nn;

namespace r2c {
namespace {

nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false));
}

int64_t groups_for(int64_t channels) { return std::min<int64_t>(8, channels / 4 > 0 ? channels / 4 : 1); }

nn::Sequential toy_stage(int64_t in, int64_t out, int64_t stride) {
  return nn::Sequential(conv3x3(in, out, stride), nn::GroupNorm(groups_for(out), out), nn::ReLU(),
                        conv3x3(out, out, 1), nn::GroupNorm(groups_for(out), out), nn::ReLU());
}

class BottleneckImpl : public nn::Module {
 public:
  BottleneckImpl(int64_t in, int64_t width, int64_t stride) {
    const int64_t out = width * 4;
    conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, width, 1).bias(false)));
    bn1_ = register_module("bn1", nn::BatchNorm2d(width));
    conv2_ = register_module("conv2", conv3x3(width, width, stride));
    bn2_ = register_module("bn2", nn::BatchNorm2d(width));
    conv3_ = register_module("conv3", nn::Conv2d(nn::Conv2dOptions(width, out, 1).bias(false)));
    bn3_ = register_module("bn3", nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
      downsample_ = register_module(
          "downsample", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                                       nn::BatchNorm2d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1_(conv1_(x)));
    y = torch::relu(bn2_(conv2_(y)));
    y = bn3_(conv3_(y));
    auto identity = downsample_ ? downsample_->forward(x) : x;
    return torch::relu(y + identity);
  }

 private:
  nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
  nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(Bottleneck);

nn::Sequential resnet_layer(int64_t in, int64_t width, int blocks, int64_t stride) {
  nn::Sequential layer;
  layer->push_back(Bottleneck(in, width, stride));
  for (int i = 1; i < blocks; ++i) layer->push_back(Bottleneck(width * 4, width, 1));
  return layer;
}

}  // namespace

ToyEncoderImpl::ToyEncoderImpl(std::array<int64_t, 4> widths) : widths_(widths) {
  stem_ = register_module(
      "stem", nn::Sequential(conv3x3(3, widths[0], 2), nn::GroupNorm(groups_for(widths[0]), widths[0]), nn::ReLU(),
                             conv3x3(widths[0], widths[0], 2), nn::GroupNorm(groups_for(widths[0]), widths[0]),
                             nn::ReLU()));
  stage2_ = register_module("stage2", toy_stage(widths[0], widths[1], 2));
  stage3_ = register_module("stage3", toy_stage(widths[1], widths[2], 2));
  stage4_ = register_module("stage4", toy_stage(widths[2], widths[3], 2));
}

RawPyramid ToyEncoderImpl::forward(const torch::Tensor& images) {
  auto x = stem_->forward(images);
  RawPyramid out;
  out.c2 = stage2_->forward(x);
  out.c3 = stage3_->forward(out.c2);
  out.c4 = stage4_->forward(out.c3);
  return out;
}

ResNet50EncoderImpl::ResNet50EncoderImpl(const std::string& weights_path) {
  stem_ = register_module(
      "stem", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)),
                             nn::BatchNorm2d(64), nn::ReLU(), nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1))));
  layer1_ = register_module("layer1", resnet_layer(64, 64, 3, 1));
  layer2_ = register_module("layer2", resnet_layer(256, 128, 4, 2));
  layer3_ = register_module("layer3", resnet_layer(512, 256, 6, 2));
  layer4_ = register_module("layer4", resnet_layer(1024, 512, 3, 2));
  if (!weights_path.empty()) {
    if (!std::filesystem::exists(weights_path)) {
      throw Error(Errc::ReadFailure, "encoder weights not found: " + weights_path);
    }
    torch::serialize::InputArchive archive;
    archive.load_from(weights_path);
    load(archive);
  }
}

RawPyramid ResNet50EncoderImpl::forward(const torch::Tensor& images) {
  auto x = layer1_->forward(stem_->forward(images));
  RawPyramid out;
  out.c2 = layer2_->forward(x);
  out.c3 = layer3_->forward(out.c2);
  out.c4 = layer4_->forward(out.c3);
  return out;
}

std::shared_ptr<EncoderImpl> make_encoder(const std::string& spec) {
  if (spec == "toy") return std::make_shared<ToyEncoderImpl>();
  const std::string prefix = "resnet50";
  if (spec.rfind(prefix, 0) == 0) {
    std::string path;
    if (spec.size() > prefix.size()) {
      if (spec[prefix.size()] != ':') throw Error(Errc::Config, "unknown encoder '" + spec + "'");
      path = spec.substr(prefix.size() + 1);
    }
    return std::make_shared<ResNet50EncoderImpl>(path);
  }
  throw Error(Errc::Config, "unknown encoder '" + spec + "' (expected toy or resnet50:<path>)");
}

RawPyramid extract_pyramid(const torch::Tensor& image, EncoderImpl& encoder) {
  auto x = image.dim() == 3 ? image.unsqueeze(0) : image;
  if (x.dim() != 4 || x.size(1) != 3) throw Error(Errc::BadShape, "expected 3xHxW or Bx3xHxW image");
  if (x.size(2) % 32 != 0 || x.size(3) % 32 != 0) {
    throw Error(Errc::BadShape, "image size " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)) +
                                    " is not divisible by 32");
  }
  return encoder.forward(x);
}

PyramidProjectionImpl::PyramidProjectionImpl(std::array<int64_t, 3> in_channels, int64_t c_d) {
  proj2_ = register_module("proj2", nn::Conv2d(nn::Conv2dOptions(in_channels[0], c_d, 1)));
  proj3_ = register_module("proj3", nn::Conv2d(nn::Conv2dOptions(in_channels[1], c_d, 1)));
  proj4_ = register_module("proj4", nn::Conv2d(nn::Conv2dOptions(in_channels[2], c_d, 1)));
}

FeaturePyramid PyramidProjectionImpl::forward(const RawPyramid& raw) {
  return {proj2_(raw.c2), proj3_(raw.c3), proj4_(raw.c4)};
}

nn::Conv2d& PyramidProjectionImpl::level(int j) {
  switch (j) {
    case 2: return proj2_;
    case 3: return proj3_;
    case 4: return proj4_;
    default: throw Error(Errc::Config, "pyramid level must be 2, 3 or 4");
  }
}

}  // namespace r2c
