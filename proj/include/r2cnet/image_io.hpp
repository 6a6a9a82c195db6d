#pragma once

#include <filesystem>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace r2c {

// Conversions between 8-bit OpenCV images and float CHW tensors in [0,1].
// Color tensors are RGB; OpenCV images are BGR.
torch::Tensor image_to_tensor(const cv::Mat& bgr);
torch::Tensor mask_to_tensor(const cv::Mat& gray);  // binarized at 0.5
cv::Mat tensor_to_image(const torch::Tensor& rgb);
cv::Mat tensor_to_gray(const torch::Tensor& map);  // 1xHxW in [0,1] -> CV_8U

/// Reads an RGB image as 3xHxW float. `size` > 0 stretches to size x size.
torch::Tensor read_image(const std::filesystem::path& path, int size = 0);

/// Reads a mask as 1xHxW float in {0,1}; resizing happens before the 0.5 threshold.
torch::Tensor read_mask(const std::filesystem::path& path, int size = 0);

/// Writes an 8-bit BGR or gray cv::Mat; JPEGs use quality 95.
void write_mat(const std::filesystem::path& path, const cv::Mat& m);
void write_image(const std::filesystem::path& path, const torch::Tensor& rgb);
void write_gray(const std::filesystem::path& path, const torch::Tensor& map);

/// Bilinear (half-pixel centers) resize of a CxHxW or NxCxHxW tensor.
torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width);

}  // namespace r2c
