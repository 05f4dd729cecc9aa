#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tamperloc/config.hpp"
#include "tamperloc/copymove.hpp"
#include "tamperloc/mask.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/splicing.hpp"

namespace tamperloc {

struct ManifestEntry {
  std::string image_id;  ///< file stem of the image
  std::filesystem::path image;
  std::optional<std::filesystem::path> truth;
};

/// CSV with header "image,truth"; the truth column may be empty or missing.
/// Relative paths resolve against the manifest's directory. Throws DataError
/// on a malformed or empty manifest or duplicate image ids.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware threads).
/// Exceptions escaping fn are rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Clusters residuals per image size and rebuilds one fingerprint per
/// cluster. `cluster_of[i]` is the cluster index of image i or -1.
struct CorpusClusters {
  std::vector<Fingerprint> fingerprints;
  std::vector<int> cluster_of;
};
CorpusClusters cluster_corpus(std::span<const RgbImage> images, std::span<const NoiseResidual> residuals,
                              const PipelineConfig& config);

/// Balanced block sample from every (image, truth) pair, then train_model.
LinearModel train_splicing_model(std::span<const RgbImage> images, std::span<const TamperMask> truths,
                                 const PipelineConfig& config);

struct ImageAnalysis {
  Association association;
  std::optional<CorrelationField> field;
  std::optional<TamperMask> prnu;
  CopyMoveResult copymove;
  SdhMap sdh;
  TamperMask splicing;
  TamperMask fused;
};

/// All three detectors and the fusion for one image.
ImageAnalysis analyze_image(const RgbImage& image, const NoiseResidual& residual,
                            std::span<const Fingerprint> fingerprints, const LinearModel& model,
                            const PipelineConfig& config);

inline constexpr std::array<MaskSource, 4> kReportDetectors = {MaskSource::kPrnu, MaskSource::kCopyMove,
                                                               MaskSource::kSplicing, MaskSource::kFused};

struct ImageResult {
  std::string image_id;
  std::string error;  ///< nonempty when the image could not be processed
  std::optional<int> cluster;
  double pce = 0.0;
  std::size_t copymove_pairs = 0;
  /// Scores per detector, in kReportDetectors order; present only with truth.
  std::array<std::optional<MaskScores>, 4> scores;
  std::array<std::size_t, 4> predicted_pixels{};
  std::size_t truth_pixels = 0;
};

struct PipelineReport {
  std::vector<ImageResult> images;  ///< sorted by image_id
  int clusters = 0;
  int scored = 0;  ///< images with truth and no error
  std::array<double, 4> mean_f{};
  int pristine = 0;  ///< scored images whose truth is empty
  double false_positive_rate = 0.0;  ///< share of pristine images with a nonempty fused mask
};

/// Full batch run: cluster, fingerprint, train (unless config.model is set),
/// then per image associate, detect, fuse and score. Writes fingerprints,
/// clusters.csv, splicing.model, masks/, images.csv, report.csv,
/// report_detectors.csv, summary.txt and config.txt under `out_dir`.
/// Downstream stages read the fingerprints and model back from disk.
PipelineReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& manifest,
                            const std::filesystem::path& out_dir);

}  // namespace tamperloc
