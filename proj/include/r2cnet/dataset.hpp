#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include <torch/torch.h>

namespace r2c {

enum class Split { Train, Test };

const char* to_string(Split split);
Split split_from_string(const std::string& s);

struct CamoRecord {
  std::string image_path;
  std::string mask_path;
  int category_id = 0;
  Split split = Split::Train;

  bool operator==(const CamoRecord&) const = default;
};

/// `mask_path` is empty when the reference image ships without a mask.
struct RefRecord {
  std::string image_path;
  std::string mask_path;
  int category_id = 0;
  Split split = Split::Train;

  bool operator==(const RefRecord&) const = default;
};

/// Index over a dataset in the canonical layout:
///
///   <root>/Camo/<split>/<category>/<stem>.jpg   camouflaged image
///   <root>/Camo/<split>/<category>/<stem>.png   its ground-truth mask
///   <root>/Ref/<split>/<category>/<stem>.jpg    referring image
///   <root>/Ref/<split>/<category>/<stem>.png    optional referring mask
///
/// Category ids index `categories`, which is sorted and covers every
/// category directory seen in either subset and split.
struct DatasetIndex {
  std::string root;
  std::vector<CamoRecord> camo;
  std::vector<RefRecord> refs;
  std::vector<std::string> categories;

  /// Positions in `refs` of the references for `category_id` in `split`.
  std::vector<std::size_t> refs_of(int category_id, Split split) const;

  bool operator==(const DatasetIndex&) const = default;
};

/// Loads the index restricted to `split` (or both splits when empty).
/// Throws Errc::MissingDirectory / Errc::EmptyCategory.
DatasetIndex load_index(const std::filesystem::path& root, std::optional<Split> split);

nlohmann::json index_to_json(const DatasetIndex& index);
DatasetIndex index_from_json(const nlohmann::json& j);

/// One camouflaged image, its mask and K same-category references, all
/// resized to a common square size. `ref_masks` is empty unless every
/// sampled reference has a mask on disk.
struct Episode {
  torch::Tensor camo_image;               // 3xHxW in [0,1]
  torch::Tensor gt_mask;                  // 1xHxW in {0,1}
  std::vector<torch::Tensor> ref_images;  // K x (3xHxW)
  std::vector<torch::Tensor> ref_masks;   // K x (1xHxW) or empty
  int category_id = 0;
  std::string category_name;
};

/// Draws `k` references without replacement from the record's category and
/// split. `k == 0` yields a reference-free episode (baseline mode).
/// Throws Errc::InsufficientReferences when k exceeds what is available.
Episode sample_episode(const DatasetIndex& index, std::size_t camo_record_id, int k,
                       std::uint64_t rng_seed, int image_size);

/// Indices of the `k` references picked by sample_episode for the same arguments.
std::vector<std::size_t> sample_reference_ids(const DatasetIndex& index, std::size_t camo_record_id,
                                              int k, std::uint64_t rng_seed);

struct ObjectStats {
  std::int64_t area = 0;
  double ratio = 0.0;
  double distance = 0.0;
  double global_contrast = 0.0;
};

/// Attribute statistics of the foreground object in `mask` (1xHxW, thresholded
/// at 0.5). Pixel (i,j) sits at (i+0.5, j+0.5); distance is normalised by half
/// the image diagonal; global contrast is the L2 distance between mean
/// foreground and mean background RGB (0 when there is no background).
ObjectStats compute_object_stats(const torch::Tensor& image, const torch::Tensor& mask);

}  // namespace r2c
