#include "r2cnet/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>

#include "r2cnet/error.hpp"

namespace fs = std::filesystem;

namespace r2c {

double cosine_lr(int64_t step, int64_t total, double base, double floor) {
  if (total <= 0) return base;
  const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total), 0.0, 1.0);
  return floor + (base - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

Batch collate(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw Error(Errc::EmptyList, "cannot collate an empty batch");
  const auto k = episodes.front().ref_images.size();
  std::vector<torch::Tensor> camo, gt, refs, masks;
  bool have_masks = true;
  for (const auto& ep : episodes) {
    if (ep.ref_images.size() != k) throw Error(Errc::ShapeMismatch, "episodes in a batch must share K");
    camo.push_back(ep.camo_image);
    gt.push_back(ep.gt_mask);
    have_masks = have_masks && ep.ref_masks.size() == k;
  }
  Batch b;
  b.camo = torch::stack(camo);
  b.gt = torch::stack(gt);
  const auto bsz = static_cast<int64_t>(episodes.size());
  if (k == 0) {
    b.refs = torch::empty({bsz, 0, 3, b.camo.size(2), b.camo.size(3)});
    return b;
  }
  for (const auto& ep : episodes) {
    refs.push_back(torch::stack(ep.ref_images));
    if (have_masks) masks.push_back(torch::stack(ep.ref_masks));
  }
  b.refs = torch::stack(refs);
  if (have_masks) b.ref_masks = torch::stack(masks);
  return b;
}

torch::Tensor reference_maps(const ForegroundProvider& provider, const Batch& batch) {
  if (!batch.refs.defined() || batch.refs.size(1) == 0) return {};
  torch::NoGradGuard no_grad;
  const auto b = batch.refs.size(0);
  const auto k = batch.refs.size(1);
  torch::Tensor masks;
  if (batch.ref_masks.defined()) masks = batch.ref_masks.flatten(0, 1);
  auto maps = provider.maps(batch.refs.flatten(0, 1), masks);
  return maps.view({b, k, 1, maps.size(2), maps.size(3)}).detach();
}

Trainer::Trainer(R2CNet model, const ForegroundProvider& provider, TrainOptions options)
    : model_(std::move(model)),
      provider_(provider),
      options_(options),
      optimizer_(model_->parameters(), torch::optim::AdamOptions(options.lr)) {}

LossReport Trainer::step(const Batch& batch) {
  model_->train();
  const double lr = learning_rate();
  for (auto& group : optimizer_.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }

  auto maps = reference_maps(provider_, batch);
  auto out = model_->forward(batch.camo, batch.refs, maps);
  auto loss = structure_loss(out.predictions, batch.gt, options_.weighted_loss);
  if (!std::isfinite(loss.report.total)) {
    std::ostringstream msg;
    msg << "loss is " << loss.report.total << " at step " << step_ << " (lr " << lr << "); terms:";
    for (const auto& [bce, iou] : loss.report.per_term) msg << " (" << bce << ", " << iou << ")";
    throw Error(Errc::NonFiniteLoss, msg.str());
  }
  optimizer_.zero_grad();
  loss.total.backward();
  optimizer_.step();
  ++step_;
  return loss.report;
}

void fit(Trainer& trainer, const DatasetIndex& index, const FitOptions& options, const StepCallback& on_step) {
  if (index.camo.empty()) throw Error(Errc::EmptyList, "no camouflaged images to train on");
  if (options.batch_size < 1) throw Error(Errc::Config, "batch size must be positive");
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(index.camo.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  while (trainer.step_count() < trainer.options().total_steps) {
    std::vector<Episode> episodes;
    for (int b = 0; b < options.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      episodes.push_back(sample_episode(index, order[cursor++], options.k, rng(), options.image_size));
    }
    const double lr = trainer.learning_rate();
    const auto report = trainer.step(collate(episodes));
    if (on_step) on_step(trainer.step_count(), lr, report);
  }
}

void Trainer::save(const fs::path& checkpoint, const nlohmann::json& config) const {
  save_checkpoint(checkpoint, *model_.ptr(), &optimizer_, step_, config);
}

void Trainer::load(const fs::path& checkpoint) { step_ = load_checkpoint(checkpoint, *model_, &optimizer_); }

fs::path manifest_path(const fs::path& checkpoint) {
  return checkpoint.parent_path() / (checkpoint.stem().string() + ".manifest.json");
}

void save_checkpoint(const fs::path& checkpoint, R2CNetImpl& model, const torch::optim::Optimizer* optimizer,
                     int64_t step, const nlohmann::json& config) {
  torch::serialize::OutputArchive archive;
  nlohmann::json manifest;
  manifest["format"] = "torch::serialize::OutputArchive";
  manifest["step"] = step;
  manifest["config"] = config;
  auto& params = manifest["parameters"] = nlohmann::json::array();
  for (const auto& item : model.named_parameters()) {
    archive.write("model/" + item.key(), item.value().detach());
    params.push_back({{"key", "model/" + item.key()}, {"shape", item.value().sizes().vec()}});
  }
  auto& buffers = manifest["buffers"] = nlohmann::json::array();
  for (const auto& item : model.named_buffers()) {
    archive.write("buffer/" + item.key(), item.value().detach(), /*is_buffer=*/true);
    buffers.push_back({{"key", "buffer/" + item.key()}, {"shape", item.value().sizes().vec()}});
  }
  if (optimizer) {
    torch::serialize::OutputArchive opt_archive;
    optimizer->save(opt_archive);
    archive.write("optimizer", opt_archive);
    manifest["optimizer"] = "optimizer";
  }
  archive.write("step", torch::tensor(step, torch::kInt64));
  archive.write("config", c10::IValue(config.dump()));

  try {
    archive.save_to(checkpoint.string());
  } catch (const c10::Error& e) {
    throw Error(Errc::WriteFailure, "cannot write checkpoint " + checkpoint.string() + ": " + e.msg());
  }
  std::ofstream out(manifest_path(checkpoint));
  if (!out) throw Error(Errc::WriteFailure, "cannot write " + manifest_path(checkpoint).string());
  out << manifest.dump(2) << '\n';
}

namespace {

torch::serialize::InputArchive open_archive(const fs::path& checkpoint) {
  if (!fs::is_regular_file(checkpoint)) throw Error(Errc::ReadFailure, "checkpoint not found: " + checkpoint.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(checkpoint.string());
  } catch (const c10::Error& e) {
    throw Error(Errc::ReadFailure, "cannot read checkpoint " + checkpoint.string() + ": " + e.msg());
  }
  return archive;
}

}  // namespace

nlohmann::json read_checkpoint_config(const fs::path& checkpoint) {
  auto archive = open_archive(checkpoint);
  c10::IValue value;
  if (!archive.try_read("config", value)) throw Error(Errc::ReadFailure, "checkpoint has no config snapshot");
  return nlohmann::json::parse(value.toStringRef());
}

int64_t load_checkpoint(const fs::path& checkpoint, R2CNetImpl& model, torch::optim::Optimizer* optimizer) {
  auto archive = open_archive(checkpoint);
  torch::NoGradGuard no_grad;
  auto restore = [&](const std::string& key, torch::Tensor& target, bool is_buffer) {
    torch::Tensor stored;
    if (!archive.try_read(key, stored, is_buffer)) throw Error(Errc::ReadFailure, "checkpoint lacks " + key);
    if (stored.sizes() != target.sizes()) throw Error(Errc::ShapeMismatch, "checkpoint shape differs for " + key);
    target.copy_(stored);
  };
  for (auto& item : model.named_parameters()) restore("model/" + item.key(), item.value(), false);
  for (auto& item : model.named_buffers()) restore("buffer/" + item.key(), item.value(), true);
  if (optimizer) {
    torch::serialize::InputArchive opt_archive;
    if (archive.try_read("optimizer", opt_archive)) optimizer->load(opt_archive);
  }
  torch::Tensor step;
  if (!archive.try_read("step", step)) return 0;
  return step.item<int64_t>();
}

}  // namespace r2c
