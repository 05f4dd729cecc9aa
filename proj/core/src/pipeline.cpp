#include "tamperloc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tamperloc/errors.hpp"
#include "tamperloc/fusion.hpp"
#include "tamperloc/image_io.hpp"

namespace tamperloc {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::string cluster_label(std::optional<int> c) { return c ? std::to_string(*c) : "-"; }

}  // namespace

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open manifest");
  const fs::path base = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "image" || header.size() > 2 || (header.size() == 2 && header[1] != "truth")) {
    throw DataError(path.string() + ": manifest header must be 'image,truth'");
  }
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.empty() || cells.size() > 2 || cells[0].empty()) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": malformed manifest row");
    }
    ManifestEntry e;
    e.image = fs::path(cells[0]).is_absolute() ? fs::path(cells[0]) : base / cells[0];
    e.image_id = fs::path(cells[0]).stem().string();
    if (cells.size() == 2 && !cells[1].empty()) {
      e.truth = fs::path(cells[1]).is_absolute() ? fs::path(cells[1]) : base / cells[1];
    }
    if (!ids.insert(e.image_id).second) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": duplicate image id " + e.image_id);
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) throw DataError(path.string() + ": manifest lists no images");
  return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

CorpusClusters cluster_corpus(std::span<const RgbImage> images, std::span<const NoiseResidual> residuals,
                              const PipelineConfig& config) {
  if (images.size() != residuals.size()) throw std::invalid_argument("cluster_corpus: images and residuals differ in count");
  CorpusClusters out;
  out.cluster_of.assign(images.size(), -1);
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < images.size(); ++i) groups[{images[i].width(), images[i].height()}].push_back(i);
  for (const auto& [dims, members] : groups) {
    std::vector<RgbImage> group_images;
    std::vector<NoiseResidual> group_residuals;
    for (std::size_t i : members) {
      group_images.push_back(images[i]);
      group_residuals.push_back(residuals[i]);
    }
    ClusterSet set = cluster_residuals(group_residuals, group_images, config.cluster_params());
    for (Cluster& c : set.clusters) {
      const int id = static_cast<int>(out.fingerprints.size());
      c.fingerprint.id = id;
      for (int m : c.members) out.cluster_of[members[static_cast<std::size_t>(m)]] = id;
      out.fingerprints.push_back(std::move(c.fingerprint));
    }
  }
  return out;
}

LinearModel train_splicing_model(std::span<const RgbImage> images, std::span<const TamperMask> truths,
                                 const PipelineConfig& config) {
  if (images.size() != truths.size()) throw std::invalid_argument("train_splicing_model: images and truths differ in count");
  std::vector<TrainingSet> parts(images.size());
  parallel_for(images.size(), config.threads, [&](std::size_t i) {
    add_training_blocks(parts[i], images[i], truths[i], config.splicing_stride, config.training_blocks_per_image,
                        mix_seed(config.seed, i));
  });
  TrainingSet set;
  for (TrainingSet& p : parts) {
    set.features.insert(set.features.end(), p.features.begin(), p.features.end());
    set.fake.insert(set.fake.end(), p.fake.begin(), p.fake.end());
  }
  balance_training_set(set, config.seed);
  if (set.features.empty()) throw DataError("splicing training: no usable pristine/fake block pairs in the corpus");
  TrainParams tp = config.training;
  tp.seed = config.seed;
  return train_model(set.features, set.fake, tp);
}

ImageAnalysis analyze_image(const RgbImage& image, const NoiseResidual& residual,
                            std::span<const Fingerprint> fingerprints, const LinearModel& model,
                            const PipelineConfig& config) {
  ImageAnalysis a;
  a.association = associate_image(image, residual, fingerprints, config.association_pce, config.pce_exclusion);
  if (a.association.cluster) {
    const Fingerprint& fp = fingerprints[static_cast<std::size_t>(*a.association.cluster)];
    a.field = correlation_field(image, residual, fp, config.prnu_window, a.association.pce);
    a.prnu = prnu_mask(*a.field, image, config.prnu);
  }
  a.copymove = detect_copymove(image, config.copymove_params(), a.field ? &*a.field : nullptr);
  a.sdh = sdh_map(image, model, config.splicing_block, config.splicing_stride);
  a.splicing = splicing_mask(a.sdh, config.splicing);

  FusionInput in;
  in.copymove = a.copymove.mask;
  in.prnu = a.prnu;
  if (a.association.cluster) in.prnu_pce = a.association.pce;
  in.splicing = a.splicing;
  a.fused = fuse_masks(in, config.fusion_pce_override);
  return a;
}

namespace {

struct LoadedImage {
  std::optional<RgbImage> image;
  std::optional<TamperMask> truth;
  std::optional<NoiseResidual> residual;
  std::string error;
};

void write_reports(const PipelineReport& report, const fs::path& out_dir) {
  std::string images = "image_id,status,cluster,pce,copymove_pairs,error\n";
  for (const ImageResult& r : report.images) {
    images += r.image_id + "," + (r.error.empty() ? "ok" : "error") + "," + cluster_label(r.cluster) + "," +
              fixed(r.pce) + "," + std::to_string(r.copymove_pairs) + ",";
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    images += err + "\n";
  }
  write_text(out_dir / "images.csv", images);

  const std::string header = "image_id,detector,f_measure,precision,recall,predicted_pixels,truth_pixels\n";
  std::string fused = header;
  std::string detectors = header;
  std::array<double, 4> mean_p{};
  std::array<double, 4> mean_r{};
  for (const ImageResult& r : report.images) {
    for (std::size_t d = 0; d < kReportDetectors.size(); ++d) {
      if (!r.scores[d]) continue;
      const MaskScores& s = *r.scores[d];
      const std::string row = r.image_id + "," + std::string(to_string(kReportDetectors[d])) + "," + fixed(s.f_measure) + "," +
                              fixed(s.precision) + "," + fixed(s.recall) + "," + std::to_string(r.predicted_pixels[d]) +
                              "," + std::to_string(r.truth_pixels) + "\n";
      detectors += row;
      if (kReportDetectors[d] == MaskSource::kFused) fused += row;
      mean_p[d] += s.precision;
      mean_r[d] += s.recall;
    }
  }
  if (report.scored > 0) {
    for (std::size_t d = 0; d < kReportDetectors.size(); ++d) {
      const std::string row = "mean," + std::string(to_string(kReportDetectors[d])) + "," + fixed(report.mean_f[d]) + "," +
                              fixed(mean_p[d] / report.scored) + "," + fixed(mean_r[d] / report.scored) + ",,\n";
      fused += row;
      detectors += row;
    }
  }
  write_text(out_dir / "report.csv", fused);
  write_text(out_dir / "report_detectors.csv", detectors);

  std::size_t failed = 0;
  for (const ImageResult& r : report.images) failed += r.error.empty() ? 0 : 1;
  std::string summary;
  summary += "images = " + std::to_string(report.images.size()) + "\n";
  summary += "failed = " + std::to_string(failed) + "\n";
  summary += "clusters = " + std::to_string(report.clusters) + "\n";
  summary += "scored = " + std::to_string(report.scored) + "\n";
  for (std::size_t d = 0; d < kReportDetectors.size(); ++d) {
    summary += "mean_f." + std::string(to_string(kReportDetectors[d])) + " = " + fixed(report.mean_f[d]) + "\n";
  }
  summary += "pristine = " + std::to_string(report.pristine) + "\n";
  summary += "false_positive_rate = " + fixed(report.false_positive_rate) + "\n";
  write_text(out_dir / "summary.txt", summary);
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config, const fs::path& manifest, const fs::path& out_dir) {
  validate_config(config);
  const std::vector<ManifestEntry> entries = read_manifest(manifest);
  fs::create_directories(out_dir / "masks");
  fs::create_directories(out_dir / "fingerprints");
  write_text(out_dir / "config.txt", format_config(config));

  const std::size_t n = entries.size();
  std::vector<LoadedImage> loaded(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    LoadedImage& l = loaded[i];
    try {
      l.image = read_image(entries[i].image);
      if (entries[i].truth) {
        l.truth = read_mask(*entries[i].truth, MaskSource::kFused);
        if (l.truth->width() != l.image->width() || l.truth->height() != l.image->height()) {
          throw DataError(entries[i].truth->string() + ": truth size differs from the image");
        }
      }
      l.residual = noise_residual(*l.image, config.nlm);
    } catch (const std::exception& e) {
      l = LoadedImage{};
      l.error = e.what();
    }
  });

  // Clustering and fingerprints over every readable image.
  std::vector<std::size_t> ok;
  std::vector<RgbImage> ok_images;
  std::vector<NoiseResidual> ok_residuals;
  for (std::size_t i = 0; i < n; ++i) {
    if (!loaded[i].error.empty()) continue;
    ok.push_back(i);
    ok_images.push_back(*loaded[i].image);
    ok_residuals.push_back(*loaded[i].residual);
  }
  if (ok.empty()) throw DataError(manifest.string() + ": no readable images");
  const CorpusClusters clusters = cluster_corpus(ok_images, ok_residuals, config);
  ok_images.clear();
  ok_residuals.clear();

  std::vector<Fingerprint> fingerprints;
  for (const Fingerprint& fp : clusters.fingerprints) {
    char name[64];
    std::snprintf(name, sizeof(name), "cluster_%03d.prnufp", fp.id);
    write_fingerprint(out_dir / "fingerprints" / name, fp);
    Fingerprint back = read_fingerprint(out_dir / "fingerprints" / name);
    back.id = fp.id;
    fingerprints.push_back(std::move(back));
  }

  // Splicing model: given, or trained on the images that carry truth.
  fs::path model_path = config.model;
  if (model_path.empty()) {
    std::vector<RgbImage> train_images;
    std::vector<TamperMask> train_truths;
    for (std::size_t i : ok) {
      if (!loaded[i].truth) continue;
      train_images.push_back(*loaded[i].image);
      train_truths.push_back(*loaded[i].truth);
    }
    if (train_images.empty()) throw DataError("no splicing model given and no truth masks to train one");
    model_path = out_dir / "splicing.model";
    write_model(model_path, train_splicing_model(train_images, train_truths, config));
  }
  const LinearModel model = read_model(model_path);

  std::vector<ImageResult> results(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    ImageResult& r = results[i];
    r.image_id = entries[i].image_id;
    LoadedImage& l = loaded[i];
    if (!l.error.empty()) {
      r.error = l.error;
      return;
    }
    try {
      const ImageAnalysis a = analyze_image(*l.image, *l.residual, fingerprints, model, config);
      r.cluster = a.association.cluster;
      r.pce = a.association.pce;
      r.copymove_pairs = a.copymove.pairs.size();
      const fs::path masks = out_dir / "masks";
      if (a.prnu) write_mask(masks / (r.image_id + "_prnu.png"), *a.prnu);
      write_mask(masks / (r.image_id + "_copymove.png"), a.copymove.mask);
      write_mask(masks / (r.image_id + "_splicing.png"), a.splicing);
      write_mask(masks / (r.image_id + "_fused.png"), a.fused);
      const TamperMask empty(l.image->width(), l.image->height(), MaskSource::kPrnu);
      const std::array<const TamperMask*, 4> predicted = {a.prnu ? &*a.prnu : &empty, &a.copymove.mask, &a.splicing,
                                                          &a.fused};
      for (std::size_t d = 0; d < predicted.size(); ++d) {
        r.predicted_pixels[d] = predicted[d]->count();
        if (l.truth) r.scores[d] = score_mask(*predicted[d], *l.truth);
      }
      if (l.truth) r.truth_pixels = l.truth->count();
    } catch (const std::exception& e) {
      r = ImageResult{};
      r.image_id = entries[i].image_id;
      r.error = e.what();
    }
    l = LoadedImage{};
  });

  std::sort(results.begin(), results.end(),
            [](const ImageResult& a, const ImageResult& b) { return a.image_id < b.image_id; });
  PipelineReport report;
  report.clusters = static_cast<int>(fingerprints.size());
  int pristine_fired = 0;
  for (const ImageResult& r : results) {
    if (!r.error.empty() || !r.scores[3]) continue;
    ++report.scored;
    for (std::size_t d = 0; d < 4; ++d) report.mean_f[d] += r.scores[d]->f_measure;
    if (r.truth_pixels == 0) {
      ++report.pristine;
      if (r.predicted_pixels[3] > 0) ++pristine_fired;
    }
  }
  if (report.scored > 0) {
    for (double& f : report.mean_f) f /= report.scored;
  }
  if (report.pristine > 0) report.false_positive_rate = static_cast<double>(pristine_fired) / report.pristine;
  report.images = std::move(results);

  std::string cluster_csv = "image_id,cluster_id,best_pce\n";
  {
    std::map<std::string, std::size_t> order;
    for (std::size_t k = 0; k < ok.size(); ++k) order[entries[ok[k]].image_id] = k;
    for (const ImageResult& r : report.images) {
      const auto it = order.find(r.image_id);
      if (it == order.end()) continue;
      const int c = clusters.cluster_of[it->second];
      cluster_csv += r.image_id + "," + (c >= 0 ? std::to_string(c) : std::string("-")) + "," + fixed(r.pce) + "\n";
    }
  }
  write_text(out_dir / "clusters.csv", cluster_csv);
  write_reports(report, out_dir);
  return report;
}

}  // namespace tamperloc
