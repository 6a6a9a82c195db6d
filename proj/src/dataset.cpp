#include "r2cnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"

namespace fs = std::filesystem;

namespace r2c {

const char* to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw Error(Errc::Config, "unknown split '" + s + "'");
}

std::vector<std::size_t> DatasetIndex::refs_of(int category_id, Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].category_id == category_id && refs[i].split == split) out.push_back(i);
  }
  return out;
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DatasetIndex load_index(const fs::path& root, std::optional<Split> split) {
  const fs::path camo_dir = root / "Camo";
  const fs::path ref_dir = root / "Ref";
  if (!fs::is_directory(camo_dir) || !fs::is_directory(ref_dir)) {
    throw Error(Errc::MissingDirectory, "expected Camo/ and Ref/ under " + root.string());
  }

  std::vector<Split> splits;
  if (split) {
    splits.push_back(*split);
  } else {
    splits = {Split::Train, Split::Test};
  }

  // Category ids must not depend on the requested split.
  std::set<std::string> names;
  for (const auto& subset : {camo_dir, ref_dir}) {
    for (Split s : {Split::Train, Split::Test}) {
      for (const auto& d : sorted_entries(subset / to_string(s), true)) names.insert(d.filename().string());
    }
  }
  if (names.empty()) throw Error(Errc::MissingDirectory, "no category folders under " + root.string());

  DatasetIndex index;
  index.root = root.generic_string();
  index.categories.assign(names.begin(), names.end());

  for (Split s : splits) {
    for (int c = 0; c < static_cast<int>(index.categories.size()); ++c) {
      const auto& name = index.categories[c];
      for (const auto& f : sorted_entries(camo_dir / to_string(s) / name, false)) {
        if (!is_image(f)) continue;
        auto mask = fs::path(f).replace_extension(".png");
        if (!fs::exists(mask)) throw Error(Errc::ReadFailure, "missing mask for " + f.string());
        index.camo.push_back({f.generic_string(), mask.generic_string(), c, s});
      }
      for (const auto& f : sorted_entries(ref_dir / to_string(s) / name, false)) {
        if (!is_image(f)) continue;
        auto mask = fs::path(f).replace_extension(".png");
        index.refs.push_back({f.generic_string(), fs::exists(mask) ? mask.generic_string() : std::string{}, c, s});
      }
    }
  }

  // Every category that has a folder in a requested split needs references there.
  for (Split s : splits) {
    for (int c = 0; c < static_cast<int>(index.categories.size()); ++c) {
      const auto& name = index.categories[c];
      const bool present = fs::is_directory(camo_dir / to_string(s) / name) ||
                           fs::is_directory(ref_dir / to_string(s) / name);
      if (present && index.refs_of(c, s).empty()) {
        throw Error(Errc::EmptyCategory,
                    "category '" + name + "' has no referring images in split " + to_string(s));
      }
    }
  }
  return index;
}

nlohmann::json index_to_json(const DatasetIndex& index) {
  nlohmann::json j;
  j["root"] = index.root;
  j["categories"] = index.categories;
  auto& camo = j["camo"] = nlohmann::json::array();
  for (const auto& r : index.camo) {
    camo.push_back({{"image", r.image_path}, {"mask", r.mask_path}, {"category", r.category_id},
                    {"split", to_string(r.split)}});
  }
  auto& refs = j["refs"] = nlohmann::json::array();
  for (const auto& r : index.refs) {
    refs.push_back({{"image", r.image_path}, {"mask", r.mask_path}, {"category", r.category_id},
                    {"split", to_string(r.split)}});
  }
  return j;
}

DatasetIndex index_from_json(const nlohmann::json& j) {
  DatasetIndex index;
  index.root = j.at("root").get<std::string>();
  index.categories = j.at("categories").get<std::vector<std::string>>();
  for (const auto& r : j.at("camo")) {
    index.camo.push_back({r.at("image"), r.at("mask"), r.at("category"),
                          split_from_string(r.at("split").get<std::string>())});
  }
  for (const auto& r : j.at("refs")) {
    index.refs.push_back({r.at("image"), r.at("mask"), r.at("category"),
                          split_from_string(r.at("split").get<std::string>())});
  }
  return index;
}

std::vector<std::size_t> sample_reference_ids(const DatasetIndex& index, std::size_t camo_record_id,
                                              int k, std::uint64_t rng_seed) {
  if (camo_record_id >= index.camo.size()) {
    throw Error(Errc::ReadFailure, "camo record " + std::to_string(camo_record_id) + " out of range");
  }
  if (k < 0) throw Error(Errc::Config, "k must be non-negative");
  const auto& rec = index.camo[camo_record_id];
  auto pool = index.refs_of(rec.category_id, rec.split);
  if (static_cast<std::size_t>(k) > pool.size()) {
    throw Error(Errc::InsufficientReferences,
                "requested " + std::to_string(k) + " references, category '" +
                    index.categories[rec.category_id] + "' has " + std::to_string(pool.size()));
  }
  // Partial Fisher-Yates with an explicit modulus keeps the draw identical
  // across standard library implementations.
  std::mt19937_64 rng(rng_seed);
  for (int i = 0; i < k; ++i) {
    const auto remaining = pool.size() - static_cast<std::size_t>(i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % remaining);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

Episode sample_episode(const DatasetIndex& index, std::size_t camo_record_id, int k,
                       std::uint64_t rng_seed, int image_size) {
  const auto ids = sample_reference_ids(index, camo_record_id, k, rng_seed);
  const auto& rec = index.camo[camo_record_id];

  Episode ep;
  ep.camo_image = read_image(rec.image_path, image_size);
  ep.gt_mask = read_mask(rec.mask_path, image_size);
  ep.category_id = rec.category_id;
  ep.category_name = index.categories[rec.category_id];

  bool all_masks = true;
  for (auto id : ids) all_masks = all_masks && !index.refs[id].mask_path.empty();
  for (auto id : ids) {
    const auto& ref = index.refs[id];
    ep.ref_images.push_back(read_image(ref.image_path, image_size));
    if (all_masks) ep.ref_masks.push_back(read_mask(ref.mask_path, image_size));
  }
  return ep;
}

ObjectStats compute_object_stats(const torch::Tensor& image, const torch::Tensor& mask) {
  auto m = (mask.detach().to(torch::kFloat64).reshape({mask.size(-2), mask.size(-1)}) > 0.5);
  auto img = image.detach().to(torch::kFloat64);
  if (img.size(-2) != m.size(0) || img.size(-1) != m.size(1)) {
    throw Error(Errc::ShapeMismatch, "image and mask sizes differ");
  }
  const auto h = m.size(0);
  const auto w = m.size(1);
  ObjectStats st;
  st.area = m.sum().item<std::int64_t>();
  if (st.area == 0) throw Error(Errc::EmptyMask, "mask has no foreground pixel");
  st.ratio = static_cast<double>(st.area) / static_cast<double>(h * w);

  auto fg = m.to(torch::kFloat64);
  auto rows = torch::arange(h, torch::kFloat64).add(0.5).unsqueeze(1).expand({h, w});
  auto cols = torch::arange(w, torch::kFloat64).add(0.5).unsqueeze(0).expand({h, w});
  const double area = static_cast<double>(st.area);
  const double cy = (rows * fg).sum().item<double>() / area;
  const double cx = (cols * fg).sum().item<double>() / area;
  const double dy = cy - static_cast<double>(h) / 2.0;
  const double dx = cx - static_cast<double>(w) / 2.0;
  const double half_diag = 0.5 * std::sqrt(static_cast<double>(h * h + w * w));
  st.distance = std::sqrt(dx * dx + dy * dy) / half_diag;

  const auto bg_count = static_cast<double>(h * w) - area;
  if (bg_count > 0) {
    auto fg_mean = (img * fg).sum({1, 2}) / area;
    auto bg_mean = (img * (1.0 - fg)).sum({1, 2}) / bg_count;
    st.global_contrast = (fg_mean - bg_mean).pow(2).sum().sqrt().item<double>();
  }
  return st;
}

}  // namespace r2c
