#pragma once

#include <cstdint>
#include <filesystem>

#include "r2cnet/dataset.hpp"

namespace r2c {

struct ToyDatasetOptions {
  int n_categories = 2;
  int n_camo_per_cat = 4;
  int n_ref_per_cat = 25;
  int image_size = 64;
  std::uint64_t seed = 7;
};

/// Writes a synthetic referring-camouflage dataset in the canonical layout.
///
/// Each category is a shape family with its own stripe orientation,
/// frequency and colour tint. A camouflaged image holds two objects of
/// different categories painted with the background texture plus a faint
/// category signature; only the folder's category is in the mask. The other
/// object's mask goes to `<root>/Audit/<split>/<category>/<stem>.png`.
/// Referring images show one large object on a plain contrasting background
/// and ship their mask next to the JPEG.
///
/// A fifth of each category (at least one image) goes to the test split,
/// matching the 20/5 reference split at 25 references per category.
DatasetIndex generate_toy_dataset(const std::filesystem::path& out, const ToyDatasetOptions& options);

/// Location of the audit (distractor) mask for a toy camouflaged record.
std::filesystem::path distractor_mask_path(const DatasetIndex& index, const CamoRecord& record);

}  // namespace r2c
