#include "r2cnet/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"
#include "r2cnet/trainer.hpp"

namespace r2c {

ImageMetrics image_metrics(const cv::Mat& pred, const cv::Mat& gt) {
  return {s_measure(pred, gt), e_measure_adaptive(pred, gt), mae(pred, gt), weighted_f_measure(pred, gt)};
}

int count_objects(const cv::Mat& gt) {
  cv::Mat1b fg;
  cv::Mat g;
  gt.convertTo(g, CV_64F);
  cv::compare(g, 0.5, fg, cv::CMP_GT);
  cv::Mat labels;
  return cv::connectedComponents(fg, labels, 8, CV_32S) - 1;
}

void MetricsAccumulator::add(const ImageMetrics& m) {
  sm_ += m.sm;
  ae_ += m.ae;
  mae_ += m.mae;
  ++n_;
  if (m.wf) {
    wf_ += *m.wf;
    ++wf_n_;
  }
}

MetricsSummary MetricsAccumulator::summary() const {
  MetricsSummary s;
  s.n = n_;
  s.wf_skipped = n_ - wf_n_;
  if (n_ == 0) return s;
  const auto n = static_cast<double>(n_);
  s.sm = sm_ / n;
  s.ae = ae_ / n;
  s.mae = mae_ / n;
  s.wf = wf_n_ > 0 ? wf_ / static_cast<double>(wf_n_) : 0.0;
  return s;
}

namespace {

MetricsReport assemble(const std::vector<ImageMetrics>& per_image, const std::vector<int>& objects,
                       const CurveAccumulator& curves) {
  MetricsAccumulator all, single, multi;
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    all.add(per_image[i]);
    (objects[i] > 1 ? multi : single).add(per_image[i]);
  }
  MetricsReport report;
  report.overall = all.summary();
  report.splits["single"] = single.summary();
  report.splits["multi"] = multi.summary();
  report.curves = curves.result();
  return report;
}

}  // namespace

MetricsReport evaluate_predictions(const std::vector<cv::Mat>& preds, const std::vector<cv::Mat>& gts) {
  if (preds.empty()) throw Error(Errc::EmptyList, "no predictions to evaluate");
  if (preds.size() != gts.size()) throw Error(Errc::ShapeMismatch, "prediction and GT lists differ in length");
  std::vector<ImageMetrics> per_image;
  std::vector<int> objects;
  CurveAccumulator curves;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    per_image.push_back(image_metrics(preds[i], gts[i]));
    objects.push_back(count_objects(gts[i]));
    curves.add(preds[i], gts[i]);
  }
  return assemble(per_image, objects, curves);
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t record, std::uint64_t repeat) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ record) ^ repeat);
}

MetricsReport evaluate_dataset(R2CNet& model, const ForegroundProvider& provider, const DatasetIndex& index,
                               const EvalOptions& options) {
  if (index.camo.empty()) throw Error(Errc::EmptyList, "no camouflaged images to evaluate");
  if (options.repeats < 1 || options.batch_size < 1) throw Error(Errc::Config, "repeats and batch size must be positive");
  model->eval();
  torch::NoGradGuard no_grad;

  const auto n = index.camo.size();
  std::vector<cv::Mat1d> gts(n);
  std::vector<int> objects(n);
  for (std::size_t i = 0; i < n; ++i) {
    gts[i] = tensor_to_map(read_mask(index.camo[i].mask_path));
    objects[i] = count_objects(gts[i]);
  }

  std::vector<ImageMetrics> sums(n);
  std::vector<int> wf_counts(n, 0);
  CurveAccumulator curves;
  for (int r = 0; r < options.repeats; ++r) {
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(options.batch_size)) {
      const auto stop = std::min(n, start + static_cast<std::size_t>(options.batch_size));
      std::vector<Episode> episodes;
      for (std::size_t i = start; i < stop; ++i) {
        episodes.push_back(sample_episode(index, i, options.k, episode_seed(options.seed, i, r), options.image_size));
      }
      const auto batch = collate(episodes);
      const auto maps = reference_maps(provider, batch);
      const auto seg = model->forward(batch.camo, batch.refs, maps).predictions.m_seg;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& gt = gts[i];
        auto pred = resize_bilinear(seg[static_cast<int64_t>(i - start)], gt.rows, gt.cols).clamp(0.0, 1.0);
        const auto map = tensor_to_map(pred);
        const auto m = image_metrics(map, gt);
        sums[i].sm += m.sm;
        sums[i].ae += m.ae;
        sums[i].mae += m.mae;
        if (m.wf) {
          sums[i].wf = sums[i].wf.value_or(0.0) + *m.wf;
          ++wf_counts[i];
        }
        curves.add(map, gt);
      }
    }
  }

  const double reps = options.repeats;
  for (std::size_t i = 0; i < n; ++i) {
    sums[i].sm /= reps;
    sums[i].ae /= reps;
    sums[i].mae /= reps;
    if (sums[i].wf) *sums[i].wf /= wf_counts[i];
  }
  auto report = assemble(sums, objects, curves);
  report.k = options.k;
  return report;
}

namespace {

nlohmann::json summary_json(const MetricsSummary& s) {
  nlohmann::json j;
  j["n"] = s.n;
  if (s.n == 0) {
    j["sm"] = j["ae"] = j["wf"] = j["mae"] = nullptr;
  } else {
    j["sm"] = s.sm;
    j["ae"] = s.ae;
    j["wf"] = s.wf;
    j["mae"] = s.mae;
  }
  j["wf_skipped"] = s.wf_skipped;
  return j;
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& report) {
  auto j = summary_json(report.overall);
  j["k"] = report.k;
  j["splits"] = nlohmann::json::object();
  for (const auto& [name, s] : report.splits) j["splits"][name] = summary_json(s);
  return j;
}

std::string report_table(const MetricsReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %6s %7s %7s %7s %7s\n", "scene", "n", "Sm", "aE", "wF", "MAE");
  out << line;
  auto row = [&](const std::string& name, const MetricsSummary& s) {
    if (s.n == 0) {
      std::snprintf(line, sizeof line, "%-8s %6lld %7s %7s %7s %7s\n", name.c_str(), static_cast<long long>(s.n), "-",
                    "-", "-", "-");
    } else {
      std::snprintf(line, sizeof line, "%-8s %6lld %7.3f %7.3f %7.3f %7.3f\n", name.c_str(),
                    static_cast<long long>(s.n), s.sm, s.ae, s.wf, s.mae);
    }
    out << line;
  };
  for (const auto& [name, s] : report.splits) row(name, s);
  row("overall", report.overall);
  return out.str();
}

void write_curves_csv(const std::filesystem::path& path, const CurveData& curves) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::WriteFailure, "cannot write " + path.string());
  out << "threshold,precision,recall,fbeta\n";
  char line[128];
  for (int i = 0; i < kCurveThresholds; ++i) {
    std::snprintf(line, sizeof line, "%.6f,%.9f,%.9f,%.9f\n", curves.thresholds[i], curves.precision[i],
                  curves.recall[i], curves.f_beta[i]);
    out << line;
  }
  if (!out) throw Error(Errc::WriteFailure, "cannot write " + path.string());
}

}  // namespace r2c
