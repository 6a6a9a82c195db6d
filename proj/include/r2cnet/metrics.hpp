#pragma once

#include <array>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace r2c {

// Camouflaged/salient object detection measures. Predictions are CV_64F
// maps in [0,1]; ground truths are any single-channel map, foreground where
// the value exceeds 0.5. Everything is computed in double precision and
// throws Errc::ShapeMismatch when the two sizes differ.

/// Single-channel H x W double map from a (1x)HxW tensor.
cv::Mat1d tensor_to_map(const torch::Tensor& t);

/// Mean absolute error.
double mae(const cv::Mat& pred, const cv::Mat& gt);

/// Structure measure, 0.5 * object term + 0.5 * region term, clipped at 0.
///
/// Conventions: an all-background GT scores 1 - mean(pred), an
/// all-foreground GT scores mean(pred). The region split sits at the GT
/// centroid in 1-based coordinates rounded half away from zero. Blocks with
/// no pixels carry zero weight; variances divide by max(N-1, 1).
double s_measure(const cv::Mat& pred, const cv::Mat& gt);

/// Enhanced-alignment measure after binarising pred at min(2 * mean(pred), 1).
/// The enhanced matrix is averaged over all pixels. Degenerate GTs fall back
/// to the agreement map: 1 - FM for all-background, FM for all-foreground.
double e_measure_adaptive(const cv::Mat& pred, const cv::Mat& gt);

/// Weighted F-measure (beta^2 = 1). Errors on the foreground are smoothed by
/// a 7x7 Gaussian (sigma 5, zero padding); background errors borrow the
/// error of their nearest foreground pixel (ties go to the smallest
/// row-major index) and are weighted by 2 - 0.5^(d/5) with d the Euclidean
/// distance to the foreground. Returns nullopt for an all-background GT.
std::optional<double> weighted_f_measure(const cv::Mat& pred, const cv::Mat& gt);

constexpr int kCurveThresholds = 256;
constexpr double kCurveBeta2 = 0.3;

struct CurveData {
  std::array<double, kCurveThresholds> thresholds{};
  std::array<double, kCurveThresholds> precision{};
  std::array<double, kCurveThresholds> recall{};
  std::array<double, kCurveThresholds> f_beta{};
};

/// Accumulates TP/FP/FN per threshold t = i/255 (pred >= t counts as positive)
/// over a whole set. Precision and recall with no denominator are 1.
class CurveAccumulator {
 public:
  void add(const cv::Mat& pred, const cv::Mat& gt);
  CurveData result() const;
  std::size_t count() const { return count_; }

 private:
  std::array<double, kCurveThresholds> tp_{}, fp_{};
  double positives_ = 0.0;
  std::size_t count_ = 0;
};

/// Throws Errc::EmptyList for an empty list, Errc::ShapeMismatch for unpaired lists.
CurveData compute_curves(const std::vector<cv::Mat>& preds, const std::vector<cv::Mat>& gts);

}  // namespace r2c
