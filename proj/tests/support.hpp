#pragma once

#include <filesystem>
#include <string>

#include "r2cnet/dataset.hpp"

namespace testing {

// Fresh empty directory under the system temp dir, unique per process and name.
std::filesystem::path scratch_dir(const std::string& name);

// Default toy dataset (2 categories, 4 camo + 25 refs each, 64 px, seed 7),
// generated once per process.
const r2c::DatasetIndex& toy_index();

}  // namespace testing
