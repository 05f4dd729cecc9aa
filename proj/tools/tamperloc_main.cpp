// tamperloc: batch forgery localization from the command line.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tamperloc/config.hpp"
#include "tamperloc/copymove.hpp"
#include "tamperloc/errors.hpp"
#include "tamperloc/fusion.hpp"
#include "tamperloc/image_io.hpp"
#include "tamperloc/pipeline.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/splicing.hpp"
#include "tamperloc/synth.hpp"

namespace fs = std::filesystem;
using namespace tamperloc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;
  bool print = false;
};

PipelineConfig load_config(const ConfigOptions& opts) {
  PipelineConfig config;
  if (!opts.file.empty()) apply_config_file(config, opts.file);
  for (const std::string& o : opts.overrides) apply_config_override(config, o);
  validate_config(config);
  return config;
}

std::vector<Fingerprint> load_fingerprints(const std::vector<std::string>& paths) {
  std::vector<Fingerprint> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out.push_back(read_fingerprint(paths[i]));
    out.back().id = static_cast<int>(i);
  }
  return out;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void print_scores(const std::string& label, const MaskScores& s) {
  std::printf("%s precision=%.6f recall=%.6f f_measure=%.6f tp=%zu fp=%zu fn=%zu\n", label.c_str(), s.precision,
              s.recall, s.f_measure, s.true_positives, s.false_positives, s.false_negatives);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image forgery localization: PRNU, copy-move and splicing detectors with decision fusion"};
  app.require_subcommand(0, 1);
  ConfigOptions copts;
  app.add_option("-c,--config", copts.file, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", copts.overrides, "Override one configuration value (key=value); repeatable");
  app.add_flag("--print-config", copts.print, "Print the effective configuration and exit");

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Write a synthetic forged corpus with truth masks");
  std::string synth_out;
  CorpusParams corpus;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--count", corpus.count, "Number of forged images")->check(CLI::PositiveNumber);
  synth->add_option("--cameras", corpus.cameras, "Number of synthetic cameras")->check(CLI::PositiveNumber);
  synth->add_option("--size", corpus.size, "Image side in pixels")->check(CLI::Range(192, 4096));
  synth->add_option("--seed", corpus.seed, "Generator seed");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster images by sensor noise and write fingerprints");
  std::string cluster_manifest;
  std::string cluster_out;
  cluster->add_option("-m,--manifest", cluster_manifest, "Manifest CSV (image,truth)")->required();
  cluster->add_option("-o,--out", cluster_out, "Output directory")->required();

  // fingerprint
  auto* fingerprint = app.add_subcommand("fingerprint", "Estimate one camera fingerprint from images");
  std::vector<std::string> fp_images;
  std::string fp_out;
  fingerprint->add_option("images", fp_images, "Images from one camera")->required();
  fingerprint->add_option("-o,--out", fp_out, "Fingerprint file")->required();

  // associate
  auto* associate = app.add_subcommand("associate", "Match an image against fingerprints by PCE");
  std::string assoc_image;
  std::vector<std::string> assoc_fps;
  associate->add_option("-i,--image", assoc_image, "Image")->required();
  associate->add_option("-f,--fingerprints", assoc_fps, "Fingerprint files")->required();

  // detect-prnu
  auto* detect_prnu = app.add_subcommand("detect-prnu", "Localize tampering by windowed PRNU correlation");
  std::string prnu_image;
  std::string prnu_fp;
  std::string prnu_out;
  std::string prnu_field_out;
  detect_prnu->add_option("-i,--image", prnu_image, "Image")->required();
  detect_prnu->add_option("-f,--fingerprint", prnu_fp, "Fingerprint file")->required();
  detect_prnu->add_option("-o,--out", prnu_out, "Mask PNG")->required();
  detect_prnu->add_option("--field-out", prnu_field_out, "Write the correlation field as an 8-bit PNG");

  // detect-copymove
  auto* detect_cm = app.add_subcommand("detect-copymove", "Localize copy-move forgeries");
  std::string cm_image;
  std::string cm_out;
  std::string cm_fp;
  std::string cm_field_out;
  detect_cm->add_option("-i,--image", cm_image, "Image")->required();
  detect_cm->add_option("-o,--out", cm_out, "Mask PNG")->required();
  detect_cm->add_option("-f,--fingerprint", cm_fp, "Fingerprint for source/target disambiguation")
      ;
  detect_cm->add_option("--field-out", cm_field_out, "Dump the identity offset field as a PNG");

  // train-splicing
  auto* train = app.add_subcommand("train-splicing", "Train the splicing block classifier");
  std::string train_manifest;
  std::string train_out;
  train->add_option("-m,--manifest", train_manifest, "Manifest CSV with truth masks")->required();
  train->add_option("-o,--out", train_out, "Model file")->required();

  // detect-splicing
  auto* detect_sp = app.add_subcommand("detect-splicing", "Localize splicing with a trained model");
  std::string sp_image;
  std::string sp_model;
  std::string sp_out;
  detect_sp->add_option("-i,--image", sp_image, "Image")->required();
  detect_sp->add_option("-M,--model", sp_model, "Model file")->required();
  detect_sp->add_option("-o,--out", sp_out, "Mask PNG")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Combine detector masks with the decision tree");
  std::string fuse_splicing;
  std::string fuse_copymove;
  std::string fuse_prnu;
  double fuse_pce = 0.0;
  std::string fuse_out;
  fuse->add_option("--splicing", fuse_splicing, "Splicing mask")->required();
  fuse->add_option("--copymove", fuse_copymove, "Copy-move mask");
  auto* prnu_opt = fuse->add_option("--prnu", fuse_prnu, "PRNU mask");
  fuse->add_option("--pce", fuse_pce, "PCE of the PRNU association")->needs(prnu_opt);
  fuse->add_option("-o,--out", fuse_out, "Fused mask PNG")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a mask against a truth mask");
  std::string eval_mask;
  std::string eval_truth;
  evaluate->add_option("mask", eval_mask, "Predicted mask")->required();
  evaluate->add_option("truth", eval_truth, "Truth mask")->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline over a manifest");
  std::string run_manifest;
  std::string run_out;
  run->add_option("-m,--manifest", run_manifest, "Manifest CSV (image,truth)")->required();
  run->add_option("-o,--out", run_out, "Output directory")->required();

  for (auto* sub : app.get_subcommands({})) sub->allow_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const PipelineConfig config = load_config(copts);
    if (copts.print) {
      std::cout << format_config(config);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << "A subcommand is required\n" << app.help();
      return kExitUsage;
    }

    if (synth->parsed()) {
      const auto entries = write_corpus(synth_out, corpus);
      std::printf("wrote %zu images to %s\n", entries.size(), synth_out.c_str());
    } else if (cluster->parsed()) {
      const auto entries = read_manifest(cluster_manifest);
      std::vector<RgbImage> images;
      std::vector<NoiseResidual> residuals(entries.size());
      for (const auto& e : entries) images.push_back(read_image(e.image));
      parallel_for(images.size(), config.threads,
                   [&](std::size_t i) { residuals[i] = noise_residual(images[i], config.nlm); });
      const CorpusClusters clusters = cluster_corpus(images, residuals, config);
      fs::create_directories(cluster_out);
      for (const Fingerprint& fp : clusters.fingerprints) {
        char name[64];
        std::snprintf(name, sizeof(name), "cluster_%03d.prnufp", fp.id);
        write_fingerprint(fs::path(cluster_out) / name, fp);
      }
      std::string csv = "image_id,cluster_id,best_pce\n";
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const Association a =
            associate_image(images[i], residuals[i], clusters.fingerprints, config.association_pce, config.pce_exclusion);
        const int c = clusters.cluster_of[i];
        char pce[64];
        std::snprintf(pce, sizeof(pce), "%.6f", a.pce);
        csv += entries[i].image_id + "," + (c >= 0 ? std::to_string(c) : std::string("-")) + "," + pce + "\n";
      }
      std::ofstream(fs::path(cluster_out) / "clusters.csv") << csv;
      std::printf("%zu clusters from %zu images\n", clusters.fingerprints.size(), entries.size());
    } else if (fingerprint->parsed()) {
      std::vector<RgbImage> images;
      std::vector<NoiseResidual> residuals;
      for (const auto& p : fp_images) {
        images.push_back(read_image(p));
        residuals.push_back(noise_residual(images.back(), config.nlm));
      }
      write_fingerprint(fp_out, estimate_fingerprint(images, residuals));
      std::printf("fingerprint from %zu images written to %s\n", images.size(), fp_out.c_str());
    } else if (associate->parsed()) {
      const RgbImage image = read_image(assoc_image);
      const auto fps = load_fingerprints(assoc_fps);
      const Association a =
          associate_image(image, noise_residual(image, config.nlm), fps, config.association_pce, config.pce_exclusion);
      std::printf("%s,%s,%.6f\n", stem(assoc_image).c_str(),
                  a.cluster ? std::to_string(*a.cluster).c_str() : "-", a.pce);
    } else if (detect_prnu->parsed()) {
      const RgbImage image = read_image(prnu_image);
      const auto fps = load_fingerprints({prnu_fp});
      const NoiseResidual residual = noise_residual(image, config.nlm);
      const Association a = associate_image(image, residual, fps, config.association_pce, config.pce_exclusion);
      const CorrelationField field = correlation_field(image, residual, fps[0], config.prnu_window, a.pce);
      const TamperMask mask = prnu_mask(field, image, config.prnu);
      write_mask(prnu_out, mask);
      if (!prnu_field_out.empty()) {
        Plane view = field.rho;
        for (double& v : view.values()) v = std::clamp((v + 1.0) * 127.5, 0.0, 255.0);
        write_png(prnu_field_out, view);
      }
      std::printf("pce=%.3f associated=%s tampered_pixels=%zu\n", a.pce, a.cluster ? "yes" : "no", mask.count());
      if (!a.cluster) std::printf("warning: PCE below the association threshold; the map is unreliable\n");
    } else if (detect_cm->parsed()) {
      const RgbImage image = read_image(cm_image);
      std::optional<CorrelationField> field;
      if (!cm_fp.empty()) {
        const auto fps = load_fingerprints({cm_fp});
        const NoiseResidual residual = noise_residual(image, config.nlm);
        const Association a = associate_image(image, residual, fps, config.association_pce, config.pce_exclusion);
        field = correlation_field(image, residual, fps[0], config.prnu_window, a.pce);
      }
      const CopyMoveParams params = config.copymove_params();
      const CopyMoveResult r = detect_copymove(image, params, field ? &*field : nullptr);
      write_mask(cm_out, r.mask);
      if (!cm_field_out.empty()) write_offset_field_png(cm_field_out, compute_nnf(image, params.nnf));
      for (const CopyRegionPair& p : r.pairs) {
        const char* role = p.role == CopyRole::kASource ? "a_source" : p.role == CopyRole::kBSource ? "b_source" : "unknown";
        std::printf("pair offset=(%d,%d) rotation=%g scale=%g corr=%.3f area_a=%zu area_b=%zu role=%s\n", p.offset.dx,
                    p.offset.dy, p.transform.rotation_deg, p.transform.scale, p.verification_corr, p.region_a.count(),
                    p.region_b.count(), role);
      }
      std::printf("pairs=%zu tampered_pixels=%zu\n", r.pairs.size(), r.mask.count());
    } else if (train->parsed()) {
      const auto entries = read_manifest(train_manifest);
      std::vector<RgbImage> images;
      std::vector<TamperMask> truths;
      for (const auto& e : entries) {
        if (!e.truth) throw DataError(e.image.string() + ": training needs a truth mask");
        images.push_back(read_image(e.image));
        truths.push_back(read_mask(*e.truth));
      }
      write_model(train_out, train_splicing_model(images, truths, config));
      std::printf("model trained on %zu images written to %s\n", images.size(), train_out.c_str());
    } else if (detect_sp->parsed()) {
      const RgbImage image = read_image(sp_image);
      const LinearModel model = read_model(sp_model);
      const SdhMap map = sdh_map(image, model, config.splicing_block, config.splicing_stride);
      const TamperMask mask = splicing_mask(map, config.splicing);
      write_mask(sp_out, mask);
      std::printf("tampered_pixels=%zu\n", mask.count());
    } else if (fuse->parsed()) {
      FusionInput in;
      in.splicing = read_mask(fuse_splicing, MaskSource::kSplicing);
      if (!fuse_copymove.empty()) in.copymove = read_mask(fuse_copymove, MaskSource::kCopyMove);
      if (!fuse_prnu.empty()) {
        in.prnu = read_mask(fuse_prnu, MaskSource::kPrnu);
        in.prnu_pce = fuse_pce;
      }
      const TamperMask fused = fuse_masks(in, config.fusion_pce_override);
      write_mask(fuse_out, fused);
      std::printf("tampered_pixels=%zu\n", fused.count());
    } else if (evaluate->parsed()) {
      print_scores(stem(eval_mask), score_mask(read_mask(eval_mask), read_mask(eval_truth)));
    } else if (run->parsed()) {
      const auto start = std::chrono::steady_clock::now();
      const PipelineReport report = run_pipeline(config, run_manifest, run_out);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::size_t failed = 0;
      for (const auto& r : report.images) failed += r.error.empty() ? 0 : 1;
      std::printf("images=%zu failed=%zu clusters=%d seconds=%.1f\n", report.images.size(), failed, report.clusters,
                  seconds);
      if (report.scored > 0) {
        for (std::size_t d = 0; d < kReportDetectors.size(); ++d) {
          std::printf("mean_f.%s=%.6f\n", std::string(to_string(kReportDetectors[d])).c_str(), report.mean_f[d]);
        }
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
