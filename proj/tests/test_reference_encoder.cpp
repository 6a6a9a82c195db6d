#include <random>

#include "unit.hpp"
#include "oracles/gradcheck.hpp"
#include "r2cnet/error.hpp"
#include "r2cnet/image_io.hpp"
#include "r2cnet/reference_encoder.hpp"
#include "support.hpp"

using namespace r2c;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected r2c::Error");
  return Errc::Config;
}

torch::Tensor grid2x2() { return torch::tensor({1.0, 2.0, 3.0, 4.0}, torch::kFloat64).view({1, 2, 2}); }

}  // namespace

TEST_CASE("constant provider returns all-ones maps") {
  ConstantProvider p;
  const auto maps = p.maps(torch::rand({3, 3, 16, 24}), {});
  CHECK(maps.sizes() == torch::IntArrayRef({3, 1, 16, 24}));
  CHECK(torch::equal(maps, torch::ones_like(maps)));
}

TEST_CASE("gt provider passes the stored mask through") {
  const auto& index = testing::toy_index();
  const auto& ref = index.refs.front();
  const auto image = read_image(ref.image_path);
  const auto mask = read_mask(ref.mask_path);
  GtMaskProvider p;
  const auto maps = foreground_maps(p, {image}, {mask});
  REQUIRE(maps.size() == 1);
  CHECK(torch::equal(maps[0], mask));
  CHECK(code_of([&] { foreground_maps(p, {image}); }) == Errc::ProviderUnavailable);
}

TEST_CASE("model provider needs readable weights and stays frozen") {
  CHECK(code_of([] { make_provider("model:"); }) == Errc::ProviderUnavailable);
  CHECK(code_of([] { make_provider("model:/nonexistent/weights.pt"); }) == Errc::ProviderUnavailable);
  CHECK(code_of([] { make_provider("saliency"); }) == Errc::Config);

  const auto path = testing::scratch_dir("provider") / "saliency.pt";
  SaliencyNet net;
  torch::serialize::OutputArchive archive;
  net->save(archive);
  archive.save_to(path.string());

  auto provider = make_provider("model:" + path.string());
  const auto maps = provider->maps(torch::rand({2, 3, 32, 32}), {});
  CHECK(maps.sizes() == torch::IntArrayRef({2, 1, 32, 32}));
  CHECK(maps.min().item<float>() >= 0.0f);
  CHECK(maps.max().item<float>() <= 1.0f);
  CHECK(!provider->parameters().empty());
  for (const auto& p : provider->parameters()) CHECK_FALSE(p.requires_grad());
}

TEST_CASE("masked average pooling hand examples") {
  const auto f = grid2x2();
  CHECK(masked_average_pool(f, torch::ones({1, 2, 2}, torch::kFloat64)).item<double>() == doctest::Approx(2.5));
  const auto diag = torch::tensor({1.0, 0.0, 0.0, 1.0}, torch::kFloat64).view({1, 2, 2});
  CHECK(masked_average_pool(f, diag).item<double>() == doctest::Approx(2.5));
  CHECK(code_of([&] { masked_average_pool(f, torch::zeros({1, 2, 2}, torch::kFloat64)); }) == Errc::EmptyMask);
  CHECK(code_of([&] { masked_average_pool(f, torch::zeros({1, 64, 64}, torch::kFloat64)); }) == Errc::EmptyMask);
}

TEST_CASE("uniform map at full resolution reduces to the spatial mean") {
  const auto f = torch::rand({5, 4, 4}, torch::kFloat64);
  const auto pooled = masked_average_pool(f, torch::ones({1, 128, 128}, torch::kFloat64));
  CHECK(torch::allclose(pooled, f.mean({1, 2}), 1e-12, 1e-12));
}

TEST_CASE("a small object still registers at the coarsest level") {
  auto m = torch::zeros({1, 64, 64}, torch::kFloat64);
  m.slice(1, 28, 36).slice(2, 28, 36).fill_(1.0);
  CHECK_NOTHROW(masked_average_pool(torch::rand({3, 2, 2}, torch::kFloat64), m));
}

TEST_CASE("pooling ignores background features and is linear") {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto m = (torch::rand({1, 6, 6}, torch::kFloat64) > 0.5).to(torch::kFloat64);
    m[0][0][0] = 1.0;
    const auto f1 = torch::randn({4, 6, 6}, torch::kFloat64);
    const auto f2 = torch::randn({4, 6, 6}, torch::kFloat64);
    const auto noise = torch::randn({4, 6, 6}, torch::kFloat64) * (1 - m);
    CHECK(torch::allclose(masked_average_pool(f1 + noise, m), masked_average_pool(f1, m), 1e-12, 1e-12));
    const auto lhs = masked_average_pool(2.0 * f1 - 3.0 * f2, m);
    const auto rhs = 2.0 * masked_average_pool(f1, m) - 3.0 * masked_average_pool(f2, m);
    CHECK(torch::allclose(lhs, rhs, 1e-10, 1e-12));
  }
}

TEST_CASE("pooling gradient matches central differences") {
  auto f = torch::randn({3, 4, 4}, torch::kFloat64).requires_grad_(true);
  const auto m = torch::rand({1, 4, 4}, torch::kFloat64);
  const double err = oracle::gradcheck_relative_error([&] { return masked_average_pool(f, m); }, {f});
  CHECK(err < 1e-4);
}

TEST_CASE("reference encoder with identity projection equals pooling") {
  ReferenceEncoder enc(4, 4);
  enc->to(torch::kFloat64);
  {
    torch::NoGradGuard no_grad;
    enc->projection()->weight.copy_(torch::eye(4, torch::kFloat64).view({4, 4, 1, 1}));
    enc->projection()->bias.zero_();
  }
  const auto f = torch::randn({2, 4, 3, 3}, torch::kFloat64);
  const auto m = torch::rand({2, 1, 24, 24}, torch::kFloat64);
  const auto out = enc->forward(f, m);
  CHECK(out.sizes() == torch::IntArrayRef({2, 4}));
  CHECK(torch::allclose(out, masked_average_pool(f, m), 1e-12, 1e-12));

  ReferenceEncoder wide(4, 16);
  CHECK(wide->forward(f.to(torch::kFloat32), m.to(torch::kFloat32)).sizes() == torch::IntArrayRef({2, 16}));
}

TEST_CASE("aggregation is the elementwise mean") {
  const auto v = torch::randn({8}, torch::kFloat64);
  auto one = aggregate_common_representation(std::vector<torch::Tensor>{v});
  CHECK(torch::equal(one.vector, v));
  CHECK(one.source_count == 1);
  CHECK(torch::allclose(aggregate_common_representation(std::vector<torch::Tensor>{v, -v}).vector,
                        torch::zeros({8}, torch::kFloat64)));

  std::vector<torch::Tensor> five;
  for (int i = 0; i < 5; ++i) five.push_back(torch::randn({8}, torch::kFloat64));
  const auto mean = aggregate_common_representation(five);
  CHECK(mean.source_count == 5);
  for (int c = 0; c < 8; ++c) {
    double s = 0.0;
    for (const auto& x : five) s += x[c].item<double>();
    CHECK(mean.vector[c].item<double>() == doctest::Approx(s / 5.0).epsilon(1e-7));
  }
  std::vector<torch::Tensor> shuffled = {five[3], five[0], five[4], five[1], five[2]};
  CHECK(torch::allclose(aggregate_common_representation(shuffled).vector, mean.vector, 1e-12, 1e-12));

  const auto batched = aggregate_common_representation(torch::stack(five).unsqueeze(0));
  CHECK(torch::allclose(batched[0], mean.vector, 1e-12, 1e-12));

  CHECK(code_of([] { aggregate_common_representation(std::vector<torch::Tensor>{}); }) == Errc::EmptyList);
  CHECK(code_of([] { aggregate_common_representation(torch::zeros({2, 0, 8})); }) == Errc::EmptyList);
}
