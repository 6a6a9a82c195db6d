#include "support.hpp"

#include <unistd.h>

#include "r2cnet/toy_dataset.hpp"

namespace fs = std::filesystem;

namespace testing {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("r2cnet-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const r2c::DatasetIndex& toy_index() {
  static const r2c::DatasetIndex index = r2c::generate_toy_dataset(scratch_dir("toy"), r2c::ToyDatasetOptions{});
  return index;
}

}  // namespace testing
