#include <random>

#include <opencv2/imgproc.hpp>

#include "unit.hpp"
#include "oracles/metric_oracles.hpp"
#include "r2cnet/error.hpp"
#include "r2cnet/evaluate.hpp"
#include "r2cnet/metrics.hpp"

using namespace r2c;

namespace {

struct Pair {
  cv::Mat1d pred;
  cv::Mat1d gt;
};

// Blob-shaped GT plus a noisy prediction loosely correlated with it.
Pair random_pair(std::mt19937& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat1d gt(h, w, 0.0);
  const int blobs = 1 + static_cast<int>(u(rng) * 3);
  for (int b = 0; b < blobs; ++b) {
    const cv::Point c(static_cast<int>(u(rng) * w), static_cast<int>(u(rng) * h));
    const cv::Size axes(1 + static_cast<int>(u(rng) * w / 4), 1 + static_cast<int>(u(rng) * h / 4));
    cv::ellipse(gt, c, axes, u(rng) * 180, 0, 360, cv::Scalar(1.0), cv::FILLED);
  }
  cv::Mat1d pred(h, w);
  const double mix = u(rng);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) pred(i, j) = std::clamp(mix * gt(i, j) + (1 - mix) * u(rng), 0.0, 1.0);
  return {pred, gt};
}

double flip_check(double (*metric)(const cv::Mat&, const cv::Mat&), const Pair& p) {
  cv::Mat pf, gf;
  cv::flip(p.pred, pf, 1);
  cv::flip(p.gt, gf, 1);
  return std::abs(metric(p.pred, p.gt) - metric(pf, gf));
}

}  // namespace

TEST_CASE("fast metrics agree with the definition-level oracles") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> side(16, 64);
  int wf_checked = 0;
  for (int t = 0; t < 100; ++t) {
    const auto p = random_pair(rng, side(rng), side(rng));
    const auto pg = oracle::to_grid(p.pred);
    const auto gg = oracle::to_grid(p.gt);
    CHECK(std::abs(mae(p.pred, p.gt) - oracle::mae(pg, gg)) < 1e-7);
    CHECK(std::abs(s_measure(p.pred, p.gt) - oracle::s_measure(pg, gg)) < 1e-5);
    CHECK(std::abs(e_measure_adaptive(p.pred, p.gt) - oracle::e_measure_adaptive(pg, gg)) < 1e-5);
    const auto wf = weighted_f_measure(p.pred, p.gt);
    if (cv::countNonZero(p.gt > 0.5) > 0) {
      REQUIRE(wf.has_value());
      CHECK(std::abs(*wf - oracle::weighted_f(pg, gg)) < 1e-5);
      ++wf_checked;
    }
  }
  CHECK(wf_checked > 90);
}

TEST_CASE("MAE examples and complement identity") {
  std::mt19937 rng(1);
  const auto p = random_pair(rng, 32, 32);
  CHECK(mae(p.gt, p.gt) == 0.0);
  CHECK(mae(1.0 - p.gt, p.gt) == doctest::Approx(1.0));
  CHECK(mae(p.pred, p.gt) + mae(1.0 - p.pred, p.gt) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("S-measure examples") {
  std::mt19937 rng(2);
  const auto p = random_pair(rng, 32, 32);
  CHECK(s_measure(p.gt, p.gt) == doctest::Approx(1.0).epsilon(1e-9));
  const cv::Mat1d zeros(16, 16, 0.0);
  const cv::Mat1d ones(16, 16, 1.0);
  CHECK(s_measure(cv::Mat1d(16, 16, 0.3), zeros) == doctest::Approx(0.7));
  CHECK(s_measure(cv::Mat1d(16, 16, 0.3), ones) == doctest::Approx(0.3));
}

TEST_CASE("E-measure examples") {
  cv::Mat1d g(16, 16, 0.0);
  g(cv::Rect(0, 0, 16, 8)).setTo(1.0);
  CHECK(e_measure_adaptive(g, g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e_measure_adaptive(1.0 - g, g) < 1e-6);
  // Threshold 0 binarizes everything to foreground.
  CHECK(e_measure_adaptive(cv::Mat1d(16, 16, 0.0), cv::Mat1d(16, 16, 0.0)) == 0.0);
  CHECK(e_measure_adaptive(cv::Mat1d(16, 16, 0.0), cv::Mat1d(16, 16, 1.0)) == 1.0);
}

TEST_CASE("weighted F examples") {
  cv::Mat1d g(32, 32, 0.0);
  g(cv::Rect(10, 12, 9, 7)).setTo(1.0);
  const auto perfect = weighted_f_measure(g, g);
  REQUIRE(perfect.has_value());
  CHECK(*perfect == doctest::Approx(1.0).epsilon(1e-9));
  const auto none = weighted_f_measure(cv::Mat1d(32, 32, 0.0), g);
  REQUIRE(none.has_value());
  CHECK(*none == doctest::Approx(0.0));
  CHECK_FALSE(weighted_f_measure(g, cv::Mat1d(32, 32, 0.0)).has_value());
}

TEST_CASE("pixel-wise metrics are flip-invariant and all stay in range") {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_pair(rng, 24, 40);
    CHECK(flip_check(&mae, p) < 1e-12);
    CHECK(flip_check(&e_measure_adaptive, p) < 1e-9);
    const auto a = weighted_f_measure(p.pred, p.gt);
    if (a) {
      CHECK(*a >= 0.0);
      CHECK(*a <= 1.0);
    }
    for (double v : {s_measure(p.pred, p.gt), e_measure_adaptive(p.pred, p.gt)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // Near-degenerate: a single foreground pixel.
  cv::Mat1d g(20, 20, 0.0);
  g(5, 7) = 1.0;
  cv::Mat1d p(20, 20);
  cv::randu(p, 0.0, 1.0);
  for (double v : {s_measure(p, g), e_measure_adaptive(p, g), *weighted_f_measure(p, g)}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("metric shape mismatch") {
  const cv::Mat1d a(8, 8, 0.0), b(8, 9, 0.0);
  for (auto f : {&mae, &s_measure, &e_measure_adaptive}) {
    try {
      f(a, b);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ShapeMismatch);
    }
  }
  CHECK_THROWS_AS(weighted_f_measure(a, b), Error);
}

TEST_CASE("curves agree with the counting oracle") {
  std::mt19937 rng(4);
  std::vector<cv::Mat> preds, gts;
  std::vector<oracle::Grid> pg, gg;
  for (int i = 0; i < 5; ++i) {
    const auto p = random_pair(rng, 20, 28);
    preds.push_back(p.pred);
    gts.push_back(p.gt);
    pg.push_back(oracle::to_grid(p.pred));
    gg.push_back(oracle::to_grid(p.gt));
  }
  const auto fast = compute_curves(preds, gts);
  const auto slow = oracle::curves(pg, gg);
  for (int t = 0; t < kCurveThresholds; ++t) {
    CHECK(fast.thresholds[t] == doctest::Approx(t / 255.0));
    CHECK(std::abs(fast.precision[t] - slow.precision[t]) < 1e-12);
    CHECK(std::abs(fast.recall[t] - slow.recall[t]) < 1e-12);
    CHECK(std::abs(fast.f_beta[t] - slow.f_beta[t]) < 1e-12);
  }
}

TEST_CASE("curve examples and recall monotonicity") {
  cv::Mat1d g(16, 16, 0.0);
  g(cv::Rect(0, 0, 16, 8)).setTo(1.0);
  const auto perfect = compute_curves({g}, {g});
  for (int t = 1; t < kCurveThresholds; ++t) {
    CHECK(perfect.precision[t] == 1.0);
    CHECK(perfect.recall[t] == 1.0);
  }
  const auto flat = compute_curves({cv::Mat1d(16, 16, 0.6)}, {g});
  for (int t = 0; t < kCurveThresholds; ++t) {
    if (t / 255.0 <= 0.6) {
      CHECK(flat.recall[t] == 1.0);
      CHECK(flat.precision[t] == doctest::Approx(0.5));
    } else {
      CHECK(flat.recall[t] == 0.0);
    }
  }

  std::mt19937 rng(5);
  for (int s = 0; s < 20; ++s) {
    std::vector<cv::Mat> preds, gts;
    for (int i = 0; i < 3; ++i) {
      const auto p = random_pair(rng, 16, 16);
      preds.push_back(p.pred);
      gts.push_back(p.gt);
    }
    const auto c = compute_curves(preds, gts);
    for (int t = 1; t < kCurveThresholds; ++t) CHECK(c.recall[t] <= c.recall[t - 1]);
  }
  CHECK_THROWS_AS(compute_curves({}, {}), Error);
}

TEST_CASE("report aggregation equals the mean of per-image values") {
  std::mt19937 rng(6);
  std::vector<cv::Mat> preds, gts;
  for (int i = 0; i < 12; ++i) {
    auto p = random_pair(rng, 32, 32);
    preds.push_back(p.pred);
    gts.push_back(p.gt);
  }
  gts.push_back(cv::Mat1d(32, 32, 0.0));
  preds.push_back(cv::Mat1d(32, 32, 0.1));
  const auto report = evaluate_predictions(preds, gts);
  double sm = 0, ae = 0, ma = 0, wf = 0;
  int wf_n = 0, multi = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sm += oracle::s_measure(oracle::to_grid(preds[i]), oracle::to_grid(gts[i]));
    ae += oracle::e_measure_adaptive(oracle::to_grid(preds[i]), oracle::to_grid(gts[i]));
    ma += oracle::mae(oracle::to_grid(preds[i]), oracle::to_grid(gts[i]));
    if (cv::countNonZero(gts[i] > 0.5) > 0) {
      wf += oracle::weighted_f(oracle::to_grid(preds[i]), oracle::to_grid(gts[i]));
      ++wf_n;
    }
    multi += count_objects(gts[i]) > 1;
  }
  const double n = static_cast<double>(preds.size());
  CHECK(report.overall.n == 13);
  CHECK(report.overall.wf_skipped == 1);
  CHECK(report.overall.sm == doctest::Approx(sm / n).epsilon(1e-9));
  CHECK(report.overall.ae == doctest::Approx(ae / n).epsilon(1e-9));
  CHECK(report.overall.mae == doctest::Approx(ma / n).epsilon(1e-9));
  CHECK(report.overall.wf == doctest::Approx(wf / wf_n).epsilon(1e-9));
  CHECK(report.splits.at("multi").n == multi);
  CHECK(report.splits.at("single").n + report.splits.at("multi").n == 13);

  const auto j = report_to_json(report);
  for (const char* key : {"sm", "ae", "wf", "mae", "n", "splits"}) CHECK(j.contains(key));
  CHECK(report_table(report).find("overall") != std::string::npos);
}

TEST_CASE("GT as prediction scores perfectly through the report") {
  std::mt19937 rng(7);
  std::vector<cv::Mat> gts;
  for (int i = 0; i < 6; ++i) gts.push_back(random_pair(rng, 32, 32).gt);
  const auto report = evaluate_predictions(gts, gts);
  CHECK(report.overall.sm == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.overall.ae == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.overall.wf == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.overall.mae == 0.0);
}

TEST_CASE("object multiplicity counts connected components") {
  cv::Mat1d g(20, 20, 0.0);
  CHECK(count_objects(g) == 0);
  g(cv::Rect(1, 1, 4, 4)).setTo(1.0);
  CHECK(count_objects(g) == 1);
  g(cv::Rect(10, 10, 4, 4)).setTo(1.0);
  CHECK(count_objects(g) == 2);
}
