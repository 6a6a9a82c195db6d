#pragma once

#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace r2c {

/// Source of foreground maps for referring images. Providers are frozen:
/// they never expose parameters to an optimizer.
class ForegroundProvider {
 public:
  virtual ~ForegroundProvider() = default;

  virtual std::string name() const = 0;

  /// images: Nx3xHxW in [0,1]; masks: Nx1xHxW or an undefined tensor.
  /// Returns Nx1xHxW maps in [0,1].
  virtual torch::Tensor maps(const torch::Tensor& images, const torch::Tensor& masks) const = 0;

  /// Parameters of the underlying network (for freeze audits). Empty for
  /// providers without one.
  virtual std::vector<torch::Tensor> parameters() const { return {}; }
};

/// All-ones maps.
class ConstantProvider : public ForegroundProvider {
 public:
  std::string name() const override { return "constant"; }
  torch::Tensor maps(const torch::Tensor& images, const torch::Tensor& masks) const override;
};

/// Passes through the masks shipped with the dataset.
class GtMaskProvider : public ForegroundProvider {
 public:
  std::string name() const override { return "gt"; }
  torch::Tensor maps(const torch::Tensor& images, const torch::Tensor& masks) const override;
};

/// Small fully convolutional saliency net; stands in for a pretrained SOD decoder.
class SaliencyNetImpl : public torch::nn::Module {
 public:
  SaliencyNetImpl();
  torch::Tensor forward(const torch::Tensor& images);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(SaliencyNet);

/// Saliency network loaded from a weights file. Throws
/// Errc::ProviderUnavailable when the file is missing or unreadable.
class ModelProvider : public ForegroundProvider {
 public:
  explicit ModelProvider(const std::string& weights_path);

  std::string name() const override { return "model:" + path_; }
  torch::Tensor maps(const torch::Tensor& images, const torch::Tensor& masks) const override;
  std::vector<torch::Tensor> parameters() const override;

 private:
  std::string path_;
  SaliencyNet net_;
};

/// "gt", "constant" or "model:<path>".
std::unique_ptr<ForegroundProvider> make_provider(const std::string& spec);

/// Per-image convenience wrapper around ForegroundProvider::maps.
std::vector<torch::Tensor> foreground_maps(const ForegroundProvider& provider,
                                           const std::vector<torch::Tensor>& ref_images,
                                           const std::vector<torch::Tensor>& ref_masks = {});

/// Masked average pooling before the learned projection.
///
/// The map is resized to the feature's spatial size with antialiased
/// bilinear filtering, then every channel is averaged with the map as
/// weights: sum(down(map) * feature) / sum(down(map)).
/// Accepts Cxhxw / 1xHxW or batched NxCxhxw / Nx1xHxW; returns C or NxC.
/// Throws Errc::EmptyMask if any downsampled map sums to <= 1e-6.
torch::Tensor masked_average_pool(const torch::Tensor& feature, const torch::Tensor& map);

/// Shared 1x1 projection of pooled reference features to c_d.
class ReferenceEncoderImpl : public torch::nn::Module {
 public:
  ReferenceEncoderImpl(int64_t feature_channels, int64_t c_d);

  /// features: Nxc_bxhxw, maps: Nx1xHxW -> N x c_d object representations.
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& maps);

  torch::nn::Conv2d& projection() { return proj_; }

 private:
  torch::nn::Conv2d proj_{nullptr};
};
TORCH_MODULE(ReferenceEncoder);

struct CommonRepresentation {
  torch::Tensor vector;  // c_d
  int64_t source_count = 0;
};

/// Element-wise mean of K object representations (Errc::EmptyList if K = 0).
CommonRepresentation aggregate_common_representation(const std::vector<torch::Tensor>& objects);

/// Batched form: BxKxc_d -> Bxc_d.
torch::Tensor aggregate_common_representation(const torch::Tensor& objects);

}  // namespace r2c
