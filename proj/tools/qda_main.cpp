// Command line front end: point cloud projection, training, evaluation and
// the ablation harness.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qda/ablation.hpp"
#include "qda/checkpoint.hpp"
#include "qda/pca_plot.hpp"
#include "qda/projection.hpp"
#include "qda/train.hpp"

namespace {

using namespace qda;

int run_project(const std::string& input, const std::string& out, int face_res, unsigned long seed, int splat,
                const std::string& crop_mode, int crop_side, int resize_to) {
  const PointCloud cloud = normalize_cloud(load_ply(input));
  ProjectionConfig cfg;
  cfg.face_resolution = face_res;
  cfg.point_splat_radius = splat;
  const MultiViewImage mv = stitch(project_six_views(cloud, cfg), cfg);
  if (crop_mode == "none") {
    write_ppm(mv.image, out);
  } else {
    Rng rng(seed);
    const CropMode mode = crop_mode == "train" ? CropMode::Train : CropMode::Test;
    const Tensor cropped = crop_pipeline(resize_short_side(mv.image, resize_to), mode, crop_side, rng);
    write_ppm(tensor_to_image(cropped), out);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

void save_cli_checkpoint(const TrainResult& result, const TrainConfig& cfg, const std::string& path) {
  Archive ar;
  save_model(result.model, ar);
  ar.put_scalar("meta.label_lo", result.scaler.lo);
  ar.put_scalar("meta.label_hi", result.scaler.hi);
  ar.put_scalar("meta.label_margin", result.scaler.margin);
  ar.put_scalar("meta.crop_side", cfg.crop_side);
  ar.put_scalar("meta.resize_to", cfg.resize_to);
  ar.save(path);
}

int run_train(const std::string& config_path, const std::string& checkpoint_out, const std::string& state_out,
              const std::string& resume) {
  const ConfigMap map = ConfigMap::parse_file(config_path);
  const TrainConfig cfg = train_config_from(map);

  LabeledSet source, target;
  const std::string dataset = map.get_string("dataset", "synthetic");
  if (dataset == "synthetic") {
    Rng data_rng(cfg.seed);
    const DomainPair pair = make_synthetic_domains(synthetic_spec_from(map), data_rng);
    source = pair.source;
    target = pair.target;
  } else if (dataset == "dirs") {
    source = load_image_dir(map.get_string("source_dir", ""), /*require_labels=*/true);
    target = load_image_dir(map.get_string("target_dir", ""), /*require_labels=*/false);
  } else {
    throw std::runtime_error("unknown dataset kind '" + dataset + "'");
  }

  TrainRunOptions opts;
  opts.state_out = state_out;
  opts.resume_from = resume;
  const TrainResult result = train_run(cfg, source, target, opts);

  std::printf("final target metrics: plcc=%.4f srocc=%.4f krocc=%.4f rmse=%.4f\n", result.final_metrics.plcc,
              result.final_metrics.srocc, result.final_metrics.krocc, result.final_metrics.rmse);
  if (!checkpoint_out.empty()) {
    save_cli_checkpoint(result, cfg, checkpoint_out);
    std::cout << "checkpoint written to " << checkpoint_out << "\n";
  }
  return 0;
}

std::vector<Tensor> preprocess_for_eval(const LabeledSet& set, int crop_side, int resize_to) {
  if (crop_side <= 0) return set.images;
  std::vector<Tensor> out;
  out.reserve(set.images.size());
  Rng unused(0);
  for (const Tensor& img : set.images)
    out.push_back(crop_pipeline(resize_short_side(tensor_to_image(img), resize_to), CropMode::Test, crop_side, unused));
  return out;
}

int run_eval(const std::string& checkpoint, const std::string& target_dir, const std::string& out_csv,
             const std::string& source_dir, const std::string& plot_path) {
  const Archive ar = Archive::load(checkpoint);
  const Model model = load_model(ar);
  LabelScaler scaler;
  scaler.lo = ar.has_tensor("meta.label_lo") ? ar.scalar("meta.label_lo") : 0.0;
  scaler.hi = ar.has_tensor("meta.label_hi") ? ar.scalar("meta.label_hi") : 1.0;
  scaler.margin = ar.has_tensor("meta.label_margin") ? ar.scalar("meta.label_margin") : 0.05;
  const int crop_side = ar.has_tensor("meta.crop_side") ? static_cast<int>(ar.scalar("meta.crop_side")) : 0;
  const int resize_to = ar.has_tensor("meta.resize_to") ? static_cast<int>(ar.scalar("meta.resize_to")) : 256;

  const LabeledSet target = load_image_dir(target_dir, /*require_labels=*/false);
  const std::vector<Tensor> images = preprocess_for_eval(target, crop_side, resize_to);
  std::vector<double> preds = predict_scores(model, images);
  for (double& p : preds) p = scaler.denormalize(p);

  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot open " + out_csv);
    out << "index,prediction\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%zu,%.6f", i, preds[i]);
      out << buf << "\n";
    }
    std::cout << "predictions written to " << out_csv << "\n";
  }

  bool have_labels = !target.labels.empty();
  for (double l : target.labels)
    if (std::isnan(l)) have_labels = false;
  if (have_labels) {
    try {
      const MetricReport m = compute_metrics(preds, target.labels);
      std::printf("plcc=%.4f srocc=%.4f krocc=%.4f rmse=%.4f\n", m.plcc, m.srocc, m.krocc, m.rmse);
    } catch (const std::invalid_argument& e) {
      std::cout << "metrics undefined: " << e.what() << "\n";
    }
  } else {
    std::cout << "no target labels; skipping metrics\n";
  }

  if (!plot_path.empty()) {
    if (source_dir.empty()) throw std::runtime_error("--plot needs --source for the second domain");
    const LabeledSet source = load_image_dir(source_dir, /*require_labels=*/false);
    const Tensor fs = pooled_features(model, preprocess_for_eval(source, crop_side, resize_to));
    const Tensor ft = pooled_features(model, images);
    emit_embedding_plot(fs, ft, source.labels, target.labels, plot_path);
    std::cout << "embedding plot written to " << plot_path << "\n";
  }
  return 0;
}

int run_ablate(const std::string& suite, int seed_count, unsigned long seed_base, const std::string& out_csv,
               const std::string& config_path) {
  TrainConfig base;
  SyntheticDomainSpec spec;
  if (!config_path.empty()) {
    const ConfigMap map = ConfigMap::parse_file(config_path);
    base = train_config_from(map);
    spec = synthetic_spec_from(map);
  } else {
    // desk-scale benchmark recipe sized for minutes, not hours
    base.batch_size = 24;
    base.total_iters = 1500;
    base.warmup_iters = 300;
    base.log_every = 1500;
    base.lr = 3e-3;
    base.lambda2 = 0.3;
    base.lambda3 = 1e-4;
    base.grl_ramp = true;
    base.backbone.channels = {8, 16, 24, 32};
    base.predictor_hidden = 32;
    base.discriminator_hidden = 32;
  }
  std::vector<unsigned long> seeds;
  for (int i = 0; i < seed_count; ++i) seeds.push_back(seed_base + static_cast<unsigned long>(i));

  const AblationTable table = run_suite(suite, base, spec, seeds);
  for (const AblationRow& row : table.rows)
    std::printf("%-18s median: plcc=%.4f srocc=%.4f krocc=%.4f rmse=%.4f\n", row.variant.c_str(), row.median.plcc,
                row.median.srocc, row.median.krocc, row.median.rmse);
  if (!out_csv.empty()) {
    write_ablation_csv(table, out_csv);
    std::cout << "results written to " << out_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quality-aware unsupervised domain adaptation for no-reference point cloud quality assessment"};
  app.require_subcommand(1);

  auto* project = app.add_subcommand("project", "project a point cloud to a stitched six-view raster");
  std::string in_path, out_path = "out.ppm";
  int face_res = 256, splat = 1, crop_side = 224, resize_to = 256;
  unsigned long seed = 1;
  std::string crop_mode = "none";
  project->add_option("--input", in_path, "input .ply file")->required();
  project->add_option("--out", out_path, "output .ppm file");
  project->add_option("--face-res", face_res, "pixels per cube face");
  project->add_option("--seed", seed, "rng seed for train-mode crops");
  project->add_option("--splat", splat, "point splat radius in pixels");
  project->add_option("--crop", crop_mode, "none|train|test pipeline after stitching")
      ->check(CLI::IsMember({"none", "train", "test"}));
  project->add_option("--crop-side", crop_side, "crop side in pixels");
  project->add_option("--resize-to", resize_to, "short-side resize before cropping");

  auto* train = app.add_subcommand("train", "train from a key-value config file");
  std::string config_path, checkpoint_out, state_out, resume;
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--checkpoint", checkpoint_out, "write the final model checkpoint here");
  train->add_option("--state-out", state_out, "write the full resumable state here");
  train->add_option("--resume", resume, "resume from a saved state");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a target directory");
  std::string eval_checkpoint, target_dir, eval_csv, source_dir, plot_path;
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval->add_option("--target", target_dir, "directory of .ppm images (labels.csv optional)")->required();
  eval->add_option("--out", eval_csv, "write per-sample predictions csv");
  eval->add_option("--source", source_dir, "source directory for the embedding plot");
  eval->add_option("--plot", plot_path, "write a 2D embedding scatter (svg)");

  auto* ablate = app.add_subcommand("ablate", "run an ablation suite on the synthetic benchmark");
  std::string suite = "sm", ablate_csv, ablate_config;
  int seed_count = 5;
  unsigned long seed_base = 1;
  ablate->add_option("--suite", suite, "sm|stage|align|da|alpha|adapt")
      ->check(CLI::IsMember({"sm", "stage", "align", "da", "alpha", "adapt"}));
  ablate->add_option("--seeds", seed_count, "number of seeds");
  ablate->add_option("--seed-base", seed_base, "first seed value");
  ablate->add_option("--out", ablate_csv, "write results csv");
  ablate->add_option("--config", ablate_config, "base config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (project->parsed())
      return run_project(in_path, out_path, face_res, seed, splat, crop_mode, crop_side, resize_to);
    if (train->parsed()) return run_train(config_path, checkpoint_out, state_out, resume);
    if (eval->parsed()) return run_eval(eval_checkpoint, target_dir, eval_csv, source_dir, plot_path);
    if (ablate->parsed()) return run_ablate(suite, seed_count, seed_base, ablate_csv, ablate_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
