#include "r2cnet/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "r2cnet/error.hpp"

namespace F = torch::nn::functional;

namespace r2c {

torch::Tensor image_to_tensor(const cv::Mat& bgr) {
  cv::Mat rgb;
  if (bgr.channels() == 1) {
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  } else {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  }
  cv::Mat f;
  rgb.convertTo(f, CV_32FC3, 1.0 / 255.0);
  auto t = torch::from_blob(f.data, {f.rows, f.cols, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

torch::Tensor mask_to_tensor(const cv::Mat& gray) {
  cv::Mat g = gray;
  if (g.channels() != 1) cv::cvtColor(gray, g, cv::COLOR_BGR2GRAY);
  cv::Mat f;
  g.convertTo(f, CV_32F, 1.0 / 255.0);
  auto t = torch::from_blob(f.data, {1, f.rows, f.cols}, torch::kFloat32).clone();
  return (t >= 0.5).to(torch::kFloat32);
}

cv::Mat tensor_to_image(const torch::Tensor& rgb) {
  auto t = (rgb.detach().to(torch::kFloat32).clamp(0, 1) * 255.0).round().to(torch::kUInt8);
  t = t.permute({1, 2, 0}).contiguous();
  cv::Mat m(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC3, t.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

cv::Mat tensor_to_gray(const torch::Tensor& map) {
  auto t = (map.detach().to(torch::kFloat32).clamp(0, 1) * 255.0).round().to(torch::kUInt8);
  t = t.reshape({t.size(-2), t.size(-1)}).contiguous();
  cv::Mat m(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC1, t.data_ptr<uint8_t>());
  return m.clone();
}

torch::Tensor read_image(const std::filesystem::path& path, int size) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw Error(Errc::ReadFailure, "cannot read image " + path.string());
  if (size > 0 && (img.rows != size || img.cols != size)) {
    cv::resize(img, img, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  }
  return image_to_tensor(img);
}

torch::Tensor read_mask(const std::filesystem::path& path, int size) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw Error(Errc::ReadFailure, "cannot read mask " + path.string());
  if (size > 0 && (img.rows != size || img.cols != size)) {
    cv::resize(img, img, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  }
  return mask_to_tensor(img);
}

void write_mat(const std::filesystem::path& path, const cv::Mat& m) {
  bool ok = false;
  try {
    std::vector<int> params;
    auto ext = path.extension().string();
    if (ext == ".jpg" || ext == ".jpeg") params = {cv::IMWRITE_JPEG_QUALITY, 95};
    ok = cv::imwrite(path.string(), m, params);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw Error(Errc::WriteFailure, "cannot write " + path.string());
}

void write_image(const std::filesystem::path& path, const torch::Tensor& rgb) {
  write_mat(path, tensor_to_image(rgb));
}

void write_gray(const std::filesystem::path& path, const torch::Tensor& map) {
  write_mat(path, tensor_to_gray(map));
}

torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width) {
  const bool single = x.dim() == 3;
  auto in = single ? x.unsqueeze(0) : x;
  if (in.size(2) == height && in.size(3) == width) return x;
  auto out = F::interpolate(in, F::InterpolateFuncOptions()
                                    .size(std::vector<int64_t>{height, width})
                                    .mode(torch::kBilinear)
                                    .align_corners(false));
  return single ? out.squeeze(0) : out;
}

}  // namespace r2c
