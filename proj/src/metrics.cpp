#include "r2cnet/metrics.hpp"

#include <cmath>
#include <limits>

#include <opencv2/imgproc.hpp>

#include "r2cnet/error.hpp"

namespace r2c {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

cv::Mat1d as_double(const cv::Mat& m) {
  if (m.channels() != 1) throw Error(Errc::ShapeMismatch, "metrics expect single-channel maps");
  cv::Mat1d out;
  m.convertTo(out, CV_64F);
  return out;
}

cv::Mat1b binarize(const cv::Mat& gt) {
  cv::Mat1b out = as_double(gt) > 0.5;
  return out;
}

void check_pair(const cv::Mat& pred, const cv::Mat& gt) {
  if (pred.size() != gt.size()) throw Error(Errc::ShapeMismatch, "prediction and ground truth sizes differ");
}

double masked_mean(const cv::Mat1d& x, const cv::Mat1b& mask) { return cv::mean(x, mask)[0]; }

// Sample standard deviation (ddof = 1, 0 for fewer than two samples).
double masked_std(const cv::Mat1d& x, const cv::Mat1b& mask, double mean) {
  const double n = cv::countNonZero(mask);
  if (n < 2) return 0.0;
  cv::Mat1d d = x - mean;
  cv::Mat1d sq = d.mul(d);
  return std::sqrt(cv::sum(sq.setTo(0, ~mask))[0] / (n - 1.0));
}

double object_score(const cv::Mat1d& pred, const cv::Mat1b& fg) {
  const double u = static_cast<double>(cv::countNonZero(fg)) / static_cast<double>(fg.total());
  auto s_object = [](const cv::Mat1d& x, const cv::Mat1b& region) {
    const double m = masked_mean(x, region);
    const double sd = masked_std(x, region, m);
    return 2.0 * m / (m * m + 1.0 + sd + kEps);
  };
  cv::Mat1d inv = 1.0 - pred;
  cv::Mat1b bg = ~fg;
  return u * s_object(pred, fg) + (1.0 - u) * s_object(inv, bg);
}

double block_ssim(const cv::Mat1d& pred, const cv::Mat1d& gt) {
  const double n = static_cast<double>(pred.total());
  const double denom = std::max(n - 1.0, 1.0);
  const double x = cv::mean(pred)[0];
  const double y = cv::mean(gt)[0];
  cv::Mat1d dx = pred - x;
  cv::Mat1d dy = gt - y;
  const double sx = cv::sum(dx.mul(dx))[0] / denom;
  const double sy = cv::sum(dy.mul(dy))[0] / denom;
  const double sxy = cv::sum(dx.mul(dy))[0] / denom;
  const double alpha = 4.0 * x * y * sxy;
  const double beta = (x * x + y * y) * (sx + sy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

double region_score(const cv::Mat1d& pred, const cv::Mat1d& gt01, const cv::Mat1b& fg) {
  const int h = fg.rows;
  const int w = fg.cols;
  const cv::Moments mo = cv::moments(fg, /*binaryImage=*/true);
  // 1-based centroid, as in the measure's reference implementation.
  const int x = static_cast<int>(std::round(mo.m10 / mo.m00 + 1.0));
  const int y = static_cast<int>(std::round(mo.m01 / mo.m00 + 1.0));

  const double area = static_cast<double>(h) * static_cast<double>(w);
  const std::array<cv::Rect, 4> blocks = {cv::Rect(0, 0, x, y), cv::Rect(x, 0, w - x, y), cv::Rect(0, y, x, h - y),
                                          cv::Rect(x, y, w - x, h - y)};
  double score = 0.0;
  for (const auto& r : blocks) {
    if (r.width <= 0 || r.height <= 0) continue;
    const double weight = static_cast<double>(r.area()) / area;
    score += weight * block_ssim(pred(r), gt01(r));
  }
  return score;
}

// Squared Euclidean distance transform of a 1-D sampled function
// (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    auto intersect = [&](int p) { return ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p); };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Exact squared distance from every pixel to the nearest foreground pixel.
cv::Mat1d squared_distance_to_foreground(const cv::Mat1b& fg) {
  const int h = fg.rows;
  const int w = fg.cols;
  constexpr double kInf = 1e20;
  cv::Mat1d out(h, w);
  const int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.assign(h, 0.0);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = fg(y, x) ? 0.0 : kInf;
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) out(y, x) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.assign(w, 0.0);
    d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = out(y, x);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) out(y, x) = d[x];
  }
  return out;
}

int64_t isqrt(int64_t n) {
  auto r = static_cast<int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Nearest foreground pixel at exact squared distance `d2`, smallest row-major index first.
cv::Point nearest_foreground(const cv::Mat1b& fg, int y, int x, int64_t d2) {
  const int64_t r = isqrt(d2);
  for (int64_t dy = -r; dy <= r; ++dy) {
    const int64_t rem = d2 - dy * dy;
    const int64_t dx = isqrt(rem);
    if (dx * dx != rem) continue;
    const int yy = y + static_cast<int>(dy);
    if (yy < 0 || yy >= fg.rows) continue;
    for (int64_t sx : {-dx, dx}) {
      const int xx = x + static_cast<int>(sx);
      if (xx >= 0 && xx < fg.cols && fg(yy, xx)) return {xx, yy};
      if (dx == 0) break;
    }
  }
  throw Error(Errc::ShapeMismatch, "distance transform inconsistent with foreground");
}

}  // namespace

cv::Mat1d tensor_to_map(const torch::Tensor& t) {
  auto d = t.detach().to(torch::kCPU).to(torch::kFloat64).contiguous();
  d = d.reshape({d.size(-2), d.size(-1)}).contiguous();
  cv::Mat1d m(static_cast<int>(d.size(0)), static_cast<int>(d.size(1)), d.data_ptr<double>());
  return m.clone();
}

double mae(const cv::Mat& pred, const cv::Mat& gt) {
  check_pair(pred, gt);
  cv::Mat1d g;
  binarize(gt).convertTo(g, CV_64F, 1.0 / 255.0);
  cv::Mat1d diff = cv::abs(as_double(pred) - g);
  return cv::mean(diff)[0];
}

double s_measure(const cv::Mat& pred_in, const cv::Mat& gt) {
  check_pair(pred_in, gt);
  const cv::Mat1d pred = as_double(pred_in);
  const cv::Mat1b fg = binarize(gt);
  const double y = static_cast<double>(cv::countNonZero(fg)) / static_cast<double>(fg.total());
  if (y == 0.0) return 1.0 - cv::mean(pred)[0];
  if (y == 1.0) return cv::mean(pred)[0];
  cv::Mat1d gt01;
  fg.convertTo(gt01, CV_64F, 1.0 / 255.0);
  const double score = 0.5 * object_score(pred, fg) + 0.5 * region_score(pred, gt01, fg);
  return std::max(0.0, score);
}

double e_measure_adaptive(const cv::Mat& pred_in, const cv::Mat& gt) {
  check_pair(pred_in, gt);
  const cv::Mat1d pred = as_double(pred_in);
  const cv::Mat1b g = binarize(gt);
  const double n = static_cast<double>(pred.total());
  const double threshold = std::min(2.0 * cv::mean(pred)[0], 1.0);
  const cv::Mat1b fm = pred >= threshold;

  const double gt_fg = cv::countNonZero(g);
  const double fg_fg = cv::countNonZero(fm & g);
  const double fg_bg = cv::countNonZero(fm & ~g);
  const double pred_fg = fg_fg + fg_bg;
  const double pred_bg = n - pred_fg;

  double enhanced_sum = 0.0;
  if (gt_fg == 0.0) {
    enhanced_sum = pred_bg;
  } else if (gt_fg == n) {
    enhanced_sum = pred_fg;
  } else {
    const double bg_fg = gt_fg - fg_fg;
    const double bg_bg = pred_bg - bg_fg;
    const double mean_pred = pred_fg / n;
    const double mean_gt = gt_fg / n;
    const std::array<double, 4> counts = {fg_fg, fg_bg, bg_fg, bg_bg};
    const std::array<std::pair<double, double>, 4> values = {
        std::pair{1.0 - mean_pred, 1.0 - mean_gt}, std::pair{1.0 - mean_pred, -mean_gt},
        std::pair{-mean_pred, 1.0 - mean_gt}, std::pair{-mean_pred, -mean_gt}};
    for (std::size_t i = 0; i < 4; ++i) {
      const auto [a, b] = values[i];
      const double align = 2.0 * a * b / (a * a + b * b + kEps);
      enhanced_sum += (align + 1.0) * (align + 1.0) / 4.0 * counts[i];
    }
  }
  return enhanced_sum / n;
}

std::optional<double> weighted_f_measure(const cv::Mat& pred_in, const cv::Mat& gt) {
  check_pair(pred_in, gt);
  const cv::Mat1d pred = as_double(pred_in);
  const cv::Mat1b fg = binarize(gt);
  const int fg_count = cv::countNonZero(fg);
  if (fg_count == 0) return std::nullopt;

  cv::Mat1d g;
  fg.convertTo(g, CV_64F, 1.0 / 255.0);
  const cv::Mat1d err = cv::abs(pred - g);
  const cv::Mat1d dist2 = squared_distance_to_foreground(fg);

  cv::Mat1d et = err.clone();
  for (int y = 0; y < fg.rows; ++y) {
    for (int x = 0; x < fg.cols; ++x) {
      if (fg(y, x)) continue;
      const auto p = nearest_foreground(fg, y, x, static_cast<int64_t>(std::llround(dist2(y, x))));
      et(y, x) = err(p.y, p.x);
    }
  }

  const cv::Mat1d k1 = cv::getGaussianKernel(7, 5.0, CV_64F);
  const cv::Mat1d kernel = k1 * k1.t();
  cv::Mat1d ea;
  cv::filter2D(et, ea, CV_64F, kernel, cv::Point(-1, -1), 0.0, cv::BORDER_CONSTANT);

  double gt_err = 0.0;
  double bg_err = 0.0;
  for (int y = 0; y < fg.rows; ++y) {
    for (int x = 0; x < fg.cols; ++x) {
      if (fg(y, x)) {
        const double v = std::min(err(y, x), ea(y, x));
        gt_err += v;
      } else {
        const double b = 2.0 - std::exp(std::log(0.5) / 5.0 * std::sqrt(dist2(y, x)));
        bg_err += err(y, x) * b;
      }
    }
  }
  const double tp = fg_count - gt_err;
  const double recall = 1.0 - gt_err / fg_count;
  const double precision = tp / (kEps + tp + bg_err);
  return 2.0 * recall * precision / (kEps + recall + precision);
}

void CurveAccumulator::add(const cv::Mat& pred_in, const cv::Mat& gt) {
  check_pair(pred_in, gt);
  const cv::Mat1d pred = as_double(pred_in);
  const cv::Mat1b g = binarize(gt);
  // Number of thresholds i/255 each pixel clears, as a histogram of the highest one.
  std::array<double, kCurveThresholds> hist_fg{}, hist_bg{};
  for (int y = 0; y < pred.rows; ++y) {
    for (int x = 0; x < pred.cols; ++x) {
      const double p = pred(y, x);
      if (p < 0.0) continue;
      int i = std::clamp(static_cast<int>(std::floor(p * 255.0)), 0, kCurveThresholds - 1);
      while (i + 1 < kCurveThresholds && static_cast<double>(i + 1) / 255.0 <= p) ++i;
      while (i > 0 && static_cast<double>(i) / 255.0 > p) --i;
      (g(y, x) ? hist_fg : hist_bg)[i] += 1.0;
    }
    positives_ += cv::countNonZero(g.row(y));
  }
  double cum_fg = 0.0, cum_bg = 0.0;
  for (int i = kCurveThresholds - 1; i >= 0; --i) {
    cum_fg += hist_fg[i];
    cum_bg += hist_bg[i];
    tp_[i] += cum_fg;
    fp_[i] += cum_bg;
  }
  ++count_;
}

CurveData CurveAccumulator::result() const {
  CurveData c;
  for (int i = 0; i < kCurveThresholds; ++i) {
    c.thresholds[i] = static_cast<double>(i) / 255.0;
    const double tp = tp_[i];
    const double fp = fp_[i];
    const double fn = positives_ - tp;
    c.precision[i] = tp + fp > 0.0 ? tp / (tp + fp) : 1.0;
    c.recall[i] = tp + fn > 0.0 ? tp / (tp + fn) : 1.0;
    const double denom = kCurveBeta2 * c.precision[i] + c.recall[i];
    c.f_beta[i] = denom > 0.0 ? (1.0 + kCurveBeta2) * c.precision[i] * c.recall[i] / denom : 0.0;
  }
  return c;
}

CurveData compute_curves(const std::vector<cv::Mat>& preds, const std::vector<cv::Mat>& gts) {
  if (preds.empty()) throw Error(Errc::EmptyList, "no predictions to build curves from");
  if (preds.size() != gts.size()) throw Error(Errc::ShapeMismatch, "prediction and ground-truth lists differ in length");
  CurveAccumulator acc;
  for (std::size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], gts[i]);
  return acc.result();
}

}  // namespace r2c
