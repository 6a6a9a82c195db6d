#include "r2cnet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "r2cnet/config.hpp"
#include "r2cnet/error.hpp"
#include "r2cnet/evaluate.hpp"
#include "r2cnet/image_io.hpp"
#include "r2cnet/toy_dataset.hpp"
#include "r2cnet/trainer.hpp"

namespace fs = std::filesystem;

namespace r2c::cli {
namespace {

struct Args {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::optional<int> k;
  std::string image;
  std::vector<std::string> refs;
  std::string out;
  ToyDatasetOptions toy;
};

int exit_code(Errc code) {
  switch (code) {
    case Errc::Config:
      return kUsage;
    case Errc::NonFiniteLoss:
      return kNumeric;
    default:
      return kData;
  }
}

void deterministic(std::uint64_t seed) {
  torch::set_num_threads(1);
  torch::manual_seed(seed);
}

RunConfig resolve(const Args& a, std::ostream& out) {
  auto config = load_config(a.config_path, a.overrides);
  out << "config " << config_to_json(config).dump() << '\n';
  return config;
}

fs::path output_dir(const RunConfig& config) {
  fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::WriteFailure, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::WriteFailure, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

fs::path checkpoint_path(const Args& a, const RunConfig& config) {
  return a.checkpoint.empty() ? fs::path(config.output_dir) / "checkpoint.bin" : fs::path(a.checkpoint);
}

// Architecture comes from the snapshot stored in the checkpoint; data and
// evaluation settings come from the current config.
R2CNet restore_model(const fs::path& checkpoint) {
  const auto trained = apply_json(RunConfig{}, read_checkpoint_config(checkpoint));
  R2CNet model(trained.model_options());
  load_checkpoint(checkpoint, *model);
  model->eval();
  return model;
}

int cmd_train(const Args& a, std::ostream& out) {
  const auto config = resolve(a, out);
  const auto index = load_index(config.data_root, Split::Train);
  auto provider = make_provider(config.provider);
  const auto dir = output_dir(config);

  deterministic(config.seed);
  R2CNet model(config.model_options());
  Trainer trainer(model, *provider, config.train_options());

  std::ofstream log(dir / "loss.csv");
  if (!log) throw Error(Errc::WriteFailure, "cannot write " + (dir / "loss.csv").string());
  log << "step,lr,total,bce_s2,iou_s2,bce_s3,iou_s3,bce_s4,iou_s4,bce_seg,iou_seg\n";
  const int every = static_cast<int>(std::max<int64_t>(1, config.steps / 20));
  FitOptions fit_options{config.k, config.batch_size, config.image_size, config.seed};
  fit(trainer, index, fit_options, [&](int64_t step, double lr, const LossReport& loss) {
    char line[256];
    std::snprintf(line, sizeof line, "%lld,%.9g,%.9g", static_cast<long long>(step), lr, loss.total);
    log << line;
    for (const auto& [bce, iou] : loss.per_term) {
      std::snprintf(line, sizeof line, ",%.9g,%.9g", bce, iou);
      log << line;
    }
    log << '\n';
    if (step % every == 0 || step == config.steps) {
      std::snprintf(line, sizeof line, "step %lld/%lld  lr %.3g  loss %.5f\n", static_cast<long long>(step),
                    static_cast<long long>(config.steps), lr, loss.total);
      out << line << std::flush;
    }
  });
  trainer.save(dir / "checkpoint.bin", config_to_json(config));
  write_json(dir / "config.json", config_to_json(config));
  out << "wrote " << (dir / "checkpoint.bin").string() << '\n';
  return kOk;
}

int cmd_eval(const Args& a, std::ostream& out) {
  auto overrides = a.overrides;
  if (a.k) overrides.push_back("data.k=" + std::to_string(*a.k));
  auto config = load_config(a.config_path, overrides);
  out << "config " << config_to_json(config).dump() << '\n';
  const auto checkpoint = checkpoint_path(a, config);
  deterministic(config.seed);
  auto model = restore_model(checkpoint);
  const auto index = load_index(config.data_root, Split::Test);
  auto provider = make_provider(config.provider);
  const auto dir = output_dir(config);

  EvalOptions options{config.k, config.image_size, config.seed, config.eval_repeats, 8};
  const auto report = evaluate_dataset(model, *provider, index, options);
  write_json(dir / "report.json", report_to_json(report));
  write_curves_csv(dir / "curves.csv", report.curves);
  out << report_table(report);
  return kOk;
}

int cmd_predict(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.refs.empty()) {
    err << "predict needs at least one --ref image\n";
    return kUsage;
  }
  const auto config = resolve(a, out);
  const auto checkpoint = checkpoint_path(a, config);
  const fs::path target = a.out.empty() ? fs::path(config.output_dir) / "prediction.png" : fs::path(a.out);
  deterministic(config.seed);
  auto model = restore_model(checkpoint);
  auto provider = make_provider(config.provider);

  const auto original = read_image(a.image);
  const auto size = config.image_size;
  const auto camo = resize_bilinear(original, size, size).unsqueeze(0);
  std::vector<torch::Tensor> refs, masks;
  for (const auto& r : a.refs) {
    refs.push_back(read_image(r, size));
    const auto mask = fs::path(r).replace_extension(".png");
    if (fs::is_regular_file(mask)) masks.push_back(read_mask(mask, size));
  }
  Batch batch;
  batch.camo = camo;
  batch.refs = torch::stack(refs).unsqueeze(0);
  if (masks.size() == refs.size()) batch.ref_masks = torch::stack(masks).unsqueeze(0);

  torch::NoGradGuard no_grad;
  const auto maps = reference_maps(*provider, batch);
  const auto seg = model->forward(batch.camo, batch.refs, maps).predictions.m_seg[0];
  const auto full = resize_bilinear(seg, original.size(1), original.size(2)).clamp(0.0, 1.0);
  if (!target.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  write_gray(target, full);
  out << "wrote " << target.string() << '\n';
  return kOk;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

int cmd_stats(const Args& a, std::ostream& out) {
  const auto config = resolve(a, out);
  const auto index = load_index(config.data_root, std::nullopt);
  if (index.camo.empty() && index.refs.empty()) throw Error(Errc::EmptyList, "dataset has no images");
  const auto dir = output_dir(config);

  std::ofstream csv(dir / "stats.csv");
  if (!csv) throw Error(Errc::WriteFailure, "cannot write " + (dir / "stats.csv").string());
  csv << "subset,split,category,image,area,ratio,distance,global_contrast\n";
  std::map<std::string, std::map<std::string, std::vector<double>>> columns;
  auto row = [&](const char* subset, const std::string& image, const std::string& mask, int category, Split split) {
    if (mask.empty()) throw Error(Errc::ReadFailure, "reference image has no mask: " + image);
    const auto s = compute_object_stats(read_image(image), read_mask(mask));
    char line[128];
    std::snprintf(line, sizeof line, ",%lld,%.9g,%.9g,%.9g\n", static_cast<long long>(s.area), s.ratio, s.distance,
                  s.global_contrast);
    csv << subset << ',' << to_string(split) << ',' << index.categories[category] << ','
        << fs::path(image).filename().string() << line;
    auto& c = columns[subset];
    c["area"].push_back(static_cast<double>(s.area));
    c["ratio"].push_back(s.ratio);
    c["distance"].push_back(s.distance);
    c["global_contrast"].push_back(s.global_contrast);
  };
  for (const auto& r : index.camo) row("camo", r.image_path, r.mask_path, r.category_id, r.split);
  for (const auto& r : index.refs) row("ref", r.image_path, r.mask_path, r.category_id, r.split);

  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-16s %10s %10s %10s %10s %10s %10s\n", "set", "attribute", "min", "q25",
                "median", "q75", "max", "mean");
  out << line;
  for (const auto& [subset, attrs] : columns) {
    for (const auto& [name, v] : attrs) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      std::snprintf(line, sizeof line, "%-5s %-16s %10.4g %10.4g %10.4g %10.4g %10.4g %10.4g\n", subset.c_str(),
                    name.c_str(), quantile(v, 0.0), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75),
                    quantile(v, 1.0), mean);
      out << line;
    }
  }
  return kOk;
}

int cmd_toygen(const Args& a, std::ostream& out) {
  const auto config = load_config(a.config_path, a.overrides);
  const fs::path root = a.out.empty() ? fs::path(config.data_root) : fs::path(a.out);
  if (root.empty()) throw Error(Errc::Config, "toygen needs --out or data.root");
  const auto index = generate_toy_dataset(root, a.toy);
  out << "wrote " << index.camo.size() << " camouflaged and " << index.refs.size() << " referring images to "
      << root.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Referring camouflaged object detection"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config_path, "JSON config file");
    sub->add_option("--set", a.overrides, "section.key=value override (repeatable)");
  };
  auto* train = app.add_subcommand("train", "Train a model");
  common(train);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  common(eval);
  eval->add_option("--checkpoint", a.checkpoint, "Checkpoint (default <output.dir>/checkpoint.bin)");
  eval->add_option("--k", a.k, "Number of referring images (overrides data.k)")->check(CLI::NonNegativeNumber);
  auto* predict = app.add_subcommand("predict", "Segment one image given referring images");
  common(predict);
  predict->add_option("--checkpoint", a.checkpoint, "Checkpoint (default <output.dir>/checkpoint.bin)");
  predict->add_option("--image", a.image, "Camouflaged image")->required();
  predict->add_option("--ref", a.refs, "Referring image (repeatable)");
  predict->add_option("--out", a.out, "Output PNG (default <output.dir>/prediction.png)");
  auto* stats = app.add_subcommand("stats", "Object attribute statistics of a dataset");
  common(stats);
  auto* toygen = app.add_subcommand("toygen", "Generate the synthetic dataset");
  common(toygen);
  toygen->add_option("--out", a.out, "Dataset root (default data.root)");
  toygen->add_option("--categories", a.toy.n_categories, "Number of categories");
  toygen->add_option("--camo-per-cat", a.toy.n_camo_per_cat, "Camouflaged images per category");
  toygen->add_option("--refs-per-cat", a.toy.n_ref_per_cat, "Referring images per category");
  toygen->add_option("--size", a.toy.image_size, "Image side in pixels");
  toygen->add_option("--seed", a.toy.seed, "Generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(a, out);
    if (eval->parsed()) return cmd_eval(a, out);
    if (predict->parsed()) return cmd_predict(a, out, err);
    if (stats->parsed()) return cmd_stats(a, out);
    return cmd_toygen(a, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const c10::Error& e) {
    err << "error: " << e.msg() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace r2c::cli
