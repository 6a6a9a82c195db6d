#pragma once

#include <array>
#include <vector>

#include <opencv2/core.hpp>

// Direct-from-definition metric implementations used as test oracles. Plain
// loops over nested vectors; nothing here shares code with the library.
namespace oracle {

using Grid = std::vector<std::vector<double>>;

Grid to_grid(const cv::Mat& m);

double mae(const Grid& p, const Grid& g);
double s_measure(const Grid& p, const Grid& g);
double e_measure_adaptive(const Grid& p, const Grid& g);
double weighted_f(const Grid& p, const Grid& g);  // g must contain foreground

struct Curves {
  std::array<double, 256> precision{}, recall{}, f_beta{};
};
Curves curves(const std::vector<Grid>& preds, const std::vector<Grid>& gts);

}  // namespace oracle
