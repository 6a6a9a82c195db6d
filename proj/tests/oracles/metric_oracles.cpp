#include "metric_oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<std::vector<bool>> fg_of(const Grid& g) {
  std::vector<std::vector<bool>> out(g.size(), std::vector<bool>(g[0].size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g[0].size(); ++j) out[i][j] = g[i][j] > 0.5;
  return out;
}

// MATLAB-style round: halves go away from zero.
int round_half_away(double v) { return static_cast<int>(v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5)); }

double object_similarity(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double ssim_block(const Grid& p, const Grid& g, int r0, int r1, int c0, int c1) {
  double n = 0.0, mx = 0.0, my = 0.0;
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) {
      mx += p[i][j];
      my += g[i][j];
      n += 1.0;
    }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) {
      vx += (p[i][j] - mx) * (p[i][j] - mx);
      vy += (g[i][j] - my) * (g[i][j] - my);
      cxy += (p[i][j] - mx) * (g[i][j] - my);
    }
  const double d = n > 1.0 ? n - 1.0 : 1.0;
  vx /= d;
  vy /= d;
  cxy /= d;
  const double alpha = 4.0 * mx * my * cxy;
  const double beta = (mx * mx + my * my) * (vx + vy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

}  // namespace

Grid to_grid(const cv::Mat& m) {
  cv::Mat d;
  m.convertTo(d, CV_64F);
  Grid out(d.rows, std::vector<double>(d.cols));
  for (int i = 0; i < d.rows; ++i)
    for (int j = 0; j < d.cols; ++j) out[i][j] = d.at<double>(i, j);
  return out;
}

double mae(const Grid& p, const Grid& g) {
  double s = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p[0].size(); ++j) {
      s += std::abs(p[i][j] - (g[i][j] > 0.5 ? 1.0 : 0.0));
      n += 1.0;
    }
  return s / n;
}

double s_measure(const Grid& p, const Grid& g) {
  const int h = static_cast<int>(p.size());
  const int w = static_cast<int>(p[0].size());
  const auto fg = fg_of(g);
  double fg_count = 0.0, pred_mean = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      fg_count += fg[i][j] ? 1.0 : 0.0;
      pred_mean += p[i][j];
    }
  const double n = static_cast<double>(h * w);
  pred_mean /= n;
  if (fg_count == 0.0) return 1.0 - pred_mean;
  if (fg_count == n) return pred_mean;

  // Object term.
  std::vector<double> fg_vals, bg_vals;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      if (fg[i][j]) fg_vals.push_back(p[i][j]);
      else bg_vals.push_back(1.0 - p[i][j]);
    }
  const double u = fg_count / n;
  const double object = u * object_similarity(fg_vals) + (1.0 - u) * object_similarity(bg_vals);

  // Region term around the 1-based rounded centroid.
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      if (fg[i][j]) {
        sx += j + 1;
        sy += i + 1;
      }
  const int cx = round_half_away(sx / fg_count);
  const int cy = round_half_away(sy / fg_count);
  Grid g01(h, std::vector<double>(w));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) g01[i][j] = fg[i][j] ? 1.0 : 0.0;
  const int rows[4][2] = {{0, cy}, {0, cy}, {cy, h}, {cy, h}};
  const int cols[4][2] = {{0, cx}, {cx, w}, {0, cx}, {cx, w}};
  double region = 0.0;
  for (int b = 0; b < 4; ++b) {
    const int bh = rows[b][1] - rows[b][0];
    const int bw = cols[b][1] - cols[b][0];
    if (bh <= 0 || bw <= 0) continue;
    region += (bh * bw) / n * ssim_block(p, g01, rows[b][0], rows[b][1], cols[b][0], cols[b][1]);
  }
  return std::max(0.0, 0.5 * object + 0.5 * region);
}

double e_measure_adaptive(const Grid& p, const Grid& g) {
  const int h = static_cast<int>(p.size());
  const int w = static_cast<int>(p[0].size());
  const double n = static_cast<double>(h * w);
  double mean = 0.0;
  for (const auto& row : p)
    for (double v : row) mean += v;
  mean /= n;
  const double t = std::min(2.0 * mean, 1.0);
  const auto fg = fg_of(g);
  Grid fm(h, std::vector<double>(w)), gt(h, std::vector<double>(w));
  double mu_fm = 0.0, mu_gt = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      fm[i][j] = p[i][j] >= t ? 1.0 : 0.0;
      gt[i][j] = fg[i][j] ? 1.0 : 0.0;
      mu_fm += fm[i][j];
      mu_gt += gt[i][j];
    }
  mu_fm /= n;
  mu_gt /= n;
  double sum = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double enhanced;
      if (mu_gt == 0.0) {
        enhanced = 1.0 - fm[i][j];
      } else if (mu_gt == 1.0) {
        enhanced = fm[i][j];
      } else {
        const double a = fm[i][j] - mu_fm;
        const double b = gt[i][j] - mu_gt;
        const double align = 2.0 * a * b / (a * a + b * b + kEps);
        enhanced = (align + 1.0) * (align + 1.0) / 4.0;
      }
      sum += enhanced;
    }
  return sum / n;
}

double weighted_f(const Grid& p, const Grid& g) {
  const int h = static_cast<int>(p.size());
  const int w = static_cast<int>(p[0].size());
  const auto fg = fg_of(g);
  Grid e(h, std::vector<double>(w)), et(h, std::vector<double>(w)), dist(h, std::vector<double>(w, 0.0));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) e[i][j] = std::abs(p[i][j] - (fg[i][j] ? 1.0 : 0.0));

  // Background pixels take the error of their nearest foreground pixel,
  // scanning in row-major order so the first minimum wins ties.
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      if (fg[i][j]) {
        et[i][j] = e[i][j];
        continue;
      }
      long best = std::numeric_limits<long>::max();
      int bi = -1, bj = -1;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!fg[y][x]) continue;
          const long d2 = static_cast<long>(y - i) * (y - i) + static_cast<long>(x - j) * (x - j);
          if (d2 < best) {
            best = d2;
            bi = y;
            bj = x;
          }
        }
      et[i][j] = e[bi][bj];
      dist[i][j] = std::sqrt(static_cast<double>(best));
    }

  double ksum = 0.0;
  double k[7][7];
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) {
      k[a + 3][b + 3] = std::exp(-(a * a + b * b) / (2.0 * 25.0));
      ksum += k[a + 3][b + 3];
    }
  double fg_err = 0.0, bg_err = 0.0, fg_n = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      if (fg[i][j]) {
        double ea = 0.0;
        for (int a = -3; a <= 3; ++a)
          for (int b = -3; b <= 3; ++b) {
            const int y = i + a, x = j + b;
            if (y >= 0 && y < h && x >= 0 && x < w) ea += k[a + 3][b + 3] / ksum * et[y][x];
          }
        fg_err += std::min(e[i][j], ea);
        fg_n += 1.0;
      } else {
        bg_err += e[i][j] * (2.0 - std::pow(0.5, dist[i][j] / 5.0));
      }
    }
  const double tp = fg_n - fg_err;
  const double r = 1.0 - fg_err / fg_n;
  const double pr = tp / (kEps + tp + bg_err);
  return 2.0 * r * pr / (kEps + r + pr);
}

Curves curves(const std::vector<Grid>& preds, const std::vector<Grid>& gts) {
  Curves c;
  for (int t = 0; t < 256; ++t) {
    const double thr = t / 255.0;
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k)
      for (std::size_t i = 0; i < preds[k].size(); ++i)
        for (std::size_t j = 0; j < preds[k][0].size(); ++j) {
          const bool pos = preds[k][i][j] >= thr;
          const bool truth = gts[k][i][j] > 0.5;
          tp += pos && truth;
          fp += pos && !truth;
          fn += !pos && truth;
        }
    c.precision[t] = tp + fp > 0 ? tp / (tp + fp) : 1.0;
    c.recall[t] = tp + fn > 0 ? tp / (tp + fn) : 1.0;
    const double d = 0.3 * c.precision[t] + c.recall[t];
    c.f_beta[t] = d > 0 ? 1.3 * c.precision[t] * c.recall[t] / d : 0.0;
  }
  return c;
}

}  // namespace oracle
