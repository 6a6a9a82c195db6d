#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "json.hpp"
#include "r2cnet/dataset.hpp"
#include "r2cnet/metrics.hpp"
#include "r2cnet/model.hpp"
#include "r2cnet/reference_encoder.hpp"

namespace r2c {

struct ImageMetrics {
  double sm = 0.0;
  double ae = 0.0;
  double mae = 0.0;
  std::optional<double> wf;  // empty for an all-background GT
};

ImageMetrics image_metrics(const cv::Mat& pred, const cv::Mat& gt);

/// Number of 8-connected foreground components in a GT map.
int count_objects(const cv::Mat& gt);

struct MetricsSummary {
  double sm = 0.0;
  double ae = 0.0;
  double wf = 0.0;
  double mae = 0.0;
  std::int64_t n = 0;
  std::int64_t wf_skipped = 0;
};

/// Sum-then-divide accumulator; order of `add` calls does not matter.
class MetricsAccumulator {
 public:
  void add(const ImageMetrics& m);
  MetricsSummary summary() const;

 private:
  double sm_ = 0.0, ae_ = 0.0, wf_ = 0.0, mae_ = 0.0;
  std::int64_t n_ = 0, wf_n_ = 0;
};

struct MetricsReport {
  MetricsSummary overall;
  std::map<std::string, MetricsSummary> splits;  // "single", "multi"
  CurveData curves;
  int k = 0;
};

/// Scores paired prediction/GT maps. Scenes are split by GT object count.
MetricsReport evaluate_predictions(const std::vector<cv::Mat>& preds, const std::vector<cv::Mat>& gts);

struct EvalOptions {
  int k = 5;
  int image_size = 352;
  std::uint64_t seed = 0;
  int repeats = 1;  // reference draws per image; metrics are averaged over draws
  int batch_size = 8;
};

/// Runs the model over every camouflaged record of `index`. Predictions are
/// resized back to the native GT resolution before scoring.
MetricsReport evaluate_dataset(R2CNet& model, const ForegroundProvider& provider, const DatasetIndex& index,
                               const EvalOptions& options);

/// Seed of the reference draw for one (record, repeat) pair.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t record, std::uint64_t repeat);

nlohmann::json report_to_json(const MetricsReport& report);
std::string report_table(const MetricsReport& report);
void write_curves_csv(const std::filesystem::path& path, const CurveData& curves);

}  // namespace r2c
