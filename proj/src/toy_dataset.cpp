#include "r2cnet/toy_dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <opencv2/imgproc.hpp>

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"

namespace fs = std::filesystem;

namespace r2c {
namespace {

constexpr double kPi = std::numbers::pi;

// Distribution code from <random> is implementation-defined; these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

enum class Shape { Ellipse, Triangle, Cross, Ring, Square, Star, Diamond, Crescent };
constexpr std::array<const char*, 8> kShapeNames = {"ellipse", "triangle", "cross", "ring",
                                                    "square", "star", "diamond", "crescent"};

struct CategoryStyle {
  Shape shape;
  double stripe_angle;
  double stripe_freq;  // cycles per pixel
  cv::Vec3d tint;      // unit-ish RGB direction
};

CategoryStyle style_for(int c, int n_categories) {
  static const std::array<cv::Vec3d, 6> tints = {
      cv::Vec3d(1.0, -0.5, -0.5), cv::Vec3d(-0.5, 1.0, -0.5), cv::Vec3d(-0.5, -0.5, 1.0),
      cv::Vec3d(1.0, 1.0, -1.0),  cv::Vec3d(-1.0, 1.0, 1.0),  cv::Vec3d(1.0, -1.0, 1.0)};
  static const std::array<double, 3> freqs = {0.16, 0.27, 0.21};
  CategoryStyle s;
  s.shape = static_cast<Shape>(c % 8);
  s.stripe_angle = kPi * static_cast<double>(c) / static_cast<double>(n_categories);
  s.stripe_freq = freqs[c % 3];
  s.tint = tints[c % 6] * (1.0 / cv::norm(tints[c % 6]));
  return s;
}

std::vector<cv::Point> polygon(cv::Point2d center, const std::vector<double>& radii, double rotation) {
  std::vector<cv::Point> pts;
  const auto n = radii.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rotation + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    pts.emplace_back(static_cast<int>(std::lround(center.x + radii[i] * std::cos(a))),
                     static_cast<int>(std::lround(center.y + radii[i] * std::sin(a))));
  }
  return pts;
}

void fill(cv::Mat1b& m, const std::vector<cv::Point>& pts, uchar v = 255) {
  std::vector<std::vector<cv::Point>> polys{pts};
  cv::fillPoly(m, polys, cv::Scalar(v), cv::LINE_8);
}

cv::Mat1b draw_shape(int size, Shape shape, cv::Point2d c, double r, double rot) {
  cv::Mat1b m = cv::Mat1b::zeros(size, size);
  const cv::Point ci(static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y)));
  switch (shape) {
    case Shape::Ellipse:
      cv::ellipse(m, ci, cv::Size(static_cast<int>(std::lround(r)), static_cast<int>(std::lround(0.62 * r))),
                  rot * 180.0 / kPi, 0, 360, cv::Scalar(255), cv::FILLED, cv::LINE_8);
      break;
    case Shape::Triangle:
      fill(m, polygon(c, {r, r, r}, rot));
      break;
    case Shape::Cross: {
      const double t = 0.38 * r;
      for (double a : {rot, rot + kPi / 2}) {
        const double ca = std::cos(a), sa = std::sin(a);
        auto corner = [&](double u, double v) {
          return cv::Point(static_cast<int>(std::lround(c.x + u * ca - v * sa)),
                           static_cast<int>(std::lround(c.y + u * sa + v * ca)));
        };
        fill(m, {corner(-r, -t), corner(r, -t), corner(r, t), corner(-r, t)});
      }
      break;
    }
    case Shape::Ring:
      cv::circle(m, ci, static_cast<int>(std::lround(r)), cv::Scalar(255), cv::FILLED, cv::LINE_8);
      cv::circle(m, ci, static_cast<int>(std::lround(0.5 * r)), cv::Scalar(0), cv::FILLED, cv::LINE_8);
      break;
    case Shape::Square:
      fill(m, polygon(c, {r, r, r, r}, rot));
      break;
    case Shape::Star:
      fill(m, polygon(c, {r, 0.45 * r, r, 0.45 * r, r, 0.45 * r, r, 0.45 * r, r, 0.45 * r}, rot));
      break;
    case Shape::Diamond:
      fill(m, polygon(c, {r, 0.55 * r, r, 0.55 * r}, rot));
      break;
    case Shape::Crescent: {
      cv::circle(m, ci, static_cast<int>(std::lround(r)), cv::Scalar(255), cv::FILLED, cv::LINE_8);
      const cv::Point off(static_cast<int>(std::lround(c.x + 0.5 * r * std::cos(rot))),
                          static_cast<int>(std::lround(c.y + 0.5 * r * std::sin(rot))));
      cv::circle(m, off, static_cast<int>(std::lround(0.8 * r)), cv::Scalar(0), cv::FILLED, cv::LINE_8);
      break;
    }
  }
  return m;
}

// Smooth random field in roughly [-1,1]: coarse gaussian noise, bicubic upsampled.
cv::Mat1d blob_field(int size, Rng& rng) {
  const int coarse = std::max(2, size / 8);
  cv::Mat1d small(coarse, coarse);
  for (auto& v : small) v = rng.normal();
  cv::Mat1d out;
  cv::resize(small, out, cv::Size(size, size), 0, 0, cv::INTER_CUBIC);
  return out;
}

double stripes(const CategoryStyle& s, int x, int y, double phase) {
  const double u = static_cast<double>(x) * std::cos(s.stripe_angle) + static_cast<double>(y) * std::sin(s.stripe_angle);
  return std::sin(2.0 * kPi * s.stripe_freq * u + phase);
}

cv::Mat to_bgr8(const cv::Mat3d& rgb) {
  cv::Mat3b out(rgb.rows, rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    for (int x = 0; x < rgb.cols; ++x) {
      const auto& p = rgb(y, x);
      for (int ch = 0; ch < 3; ++ch) {
        out(y, x)[2 - ch] = cv::saturate_cast<uchar>(std::lround(std::clamp(p[ch], 0.0, 1.0) * 255.0));
      }
    }
  }
  return out;
}

struct CamoScene {
  cv::Mat image;
  cv::Mat1b target;
  cv::Mat1b distractor;
};

CamoScene render_camo(int size, const CategoryStyle& target, const CategoryStyle& other, Rng& rng) {
  std::array<double, 2> radius;
  std::array<cv::Point2d, 2> center;
  for (int attempt = 0;; ++attempt) {
    for (int i = 0; i < 2; ++i) {
      radius[i] = std::max(4.0, rng.uniform(0.11, 0.17) * size);
      const double lo = radius[i] + 2.0;
      const double hi = size - radius[i] - 3.0;
      center[i] = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
    }
    if (cv::norm(center[0] - center[1]) > radius[0] + radius[1] + 3.0 || attempt > 1000) break;
  }

  CamoScene scene;
  scene.target = draw_shape(size, target.shape, center[0], radius[0], rng.uniform(0, 2 * kPi));
  scene.distractor = draw_shape(size, other.shape, center[1], radius[1], rng.uniform(0, 2 * kPi));
  scene.distractor.setTo(0, scene.target);

  const cv::Vec3d base(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7));
  std::array<cv::Mat1d, 3> field = {blob_field(size, rng), blob_field(size, rng), blob_field(size, rng)};
  const double phase_t = rng.uniform(0, 2 * kPi);
  const double phase_o = rng.uniform(0, 2 * kPi);

  cv::Mat3d rgb(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      cv::Vec3d p;
      for (int ch = 0; ch < 3; ++ch) p[ch] = base[ch] + 0.10 * field[ch](y, x) + 0.03 * rng.normal();
      if (scene.target(y, x)) {
        p += target.tint * 0.06 + cv::Vec3d::all(0.08 * stripes(target, x, y, phase_t));
      } else if (scene.distractor(y, x)) {
        p += other.tint * 0.06 + cv::Vec3d::all(0.08 * stripes(other, x, y, phase_o));
      }
      rgb(y, x) = p;
    }
  }
  scene.image = to_bgr8(rgb);
  return scene;
}

std::pair<cv::Mat, cv::Mat1b> render_ref(int size, const CategoryStyle& style, Rng& rng) {
  const double r = rng.uniform(0.28, 0.38) * size;
  const double jitter = 0.08 * size;
  const cv::Point2d c(size / 2.0 + rng.uniform(-jitter, jitter), size / 2.0 + rng.uniform(-jitter, jitter));
  cv::Mat1b mask = draw_shape(size, style.shape, c, r, rng.uniform(0, 2 * kPi));

  const bool light = rng.uniform() < 0.5;
  const double bg = light ? rng.uniform(0.85, 0.95) : rng.uniform(0.05, 0.15);
  const cv::Vec3d base = cv::Vec3d::all(rng.uniform(0.42, 0.58)) + style.tint * 0.25;
  const double phase = rng.uniform(0, 2 * kPi);

  cv::Mat3d rgb(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (mask(y, x)) {
        rgb(y, x) = base + cv::Vec3d::all(0.15 * stripes(style, x, y, phase) + 0.02 * rng.normal());
      } else {
        rgb(y, x) = cv::Vec3d::all(bg + 0.01 * rng.normal());
      }
    }
  }
  return {to_bgr8(rgb), mask};
}

std::string stem(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, i);
  return buf;
}

int test_count(int n) { return std::max(1, n / 5); }

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw Error(Errc::WriteFailure, "cannot create " + p.string());
}

}  // namespace

DatasetIndex generate_toy_dataset(const fs::path& out, const ToyDatasetOptions& opt) {
  if (opt.n_categories < 2) throw Error(Errc::Config, "toy dataset needs at least 2 categories");
  if (opt.image_size < 32) throw Error(Errc::Config, "toy image_size must be >= 32");
  if (opt.n_camo_per_cat < 2 || opt.n_ref_per_cat < 2) {
    throw Error(Errc::Config, "need >= 2 camouflaged and referring images per category for both splits");
  }

  Rng rng(opt.seed);
  std::vector<CategoryStyle> styles;
  std::vector<std::string> names;
  for (int c = 0; c < opt.n_categories; ++c) {
    styles.push_back(style_for(c, opt.n_categories));
    char buf[48];
    std::snprintf(buf, sizeof(buf), "c%02d_%s", c, kShapeNames[c % 8]);
    names.emplace_back(buf);
  }

  for (int c = 0; c < opt.n_categories; ++c) {
    for (int i = 0; i < opt.n_camo_per_cat; ++i) {
      const Split split = i < test_count(opt.n_camo_per_cat) ? Split::Test : Split::Train;
      const fs::path camo_dir = out / "Camo" / to_string(split) / names[c];
      const fs::path audit_dir = out / "Audit" / to_string(split) / names[c];
      make_dir(camo_dir);
      make_dir(audit_dir);

      auto other = static_cast<int>(rng.index(static_cast<std::size_t>(opt.n_categories - 1)));
      if (other >= c) ++other;
      auto scene = render_camo(opt.image_size, styles[c], styles[other], rng);
      const auto s = stem("camo", i);
      write_mat(camo_dir / (s + ".jpg"), scene.image);
      write_mat(camo_dir / (s + ".png"), scene.target);
      write_mat(audit_dir / (s + ".png"), scene.distractor);
    }
    for (int i = 0; i < opt.n_ref_per_cat; ++i) {
      const Split split = i < test_count(opt.n_ref_per_cat) ? Split::Test : Split::Train;
      const fs::path ref_dir = out / "Ref" / to_string(split) / names[c];
      make_dir(ref_dir);
      auto [image, mask] = render_ref(opt.image_size, styles[c], rng);
      const auto s = stem("ref", i);
      write_mat(ref_dir / (s + ".jpg"), image);
      write_mat(ref_dir / (s + ".png"), mask);
    }
  }
  return load_index(out, std::nullopt);
}

fs::path distractor_mask_path(const DatasetIndex& index, const CamoRecord& record) {
  const fs::path mask(record.mask_path);
  return fs::path(index.root) / "Audit" / to_string(record.split) / index.categories[record.category_id] /
         mask.filename();
}

}  // namespace r2c
