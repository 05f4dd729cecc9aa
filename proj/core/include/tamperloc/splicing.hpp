#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tamperloc/mask.hpp"
#include "tamperloc/plane.hpp"

namespace tamperloc {

inline constexpr int kFeatureDim = 625;
inline constexpr int kFeatureBlock = 128;
inline constexpr int kResidualTruncation = 2;

/// Normalized 4-gram co-occurrence histogram of the quantized third-order
/// residual. Bin index of (d0,d1,d2,d3), each in [-2,2], is
/// sum (d_i + 2) * 5^(3-i). After sign merging, bin b and bin 624-b share
/// their mass in the smaller index; the larger stays 0.
struct FeatureVector {
  std::array<double, kFeatureDim> bins{};
  int x = 0;  ///< block origin
  int y = 0;
  bool zero_residual = false;  ///< every quantized residual sample was 0
};

int gram_index(int d0, int d1, int d2, int d3);

/// Features of one 128x128 luminance block. Residual samples are
/// r(x) = I(x) - 3 I(x-1) + 3 I(x-2) - I(x-3) along rows and columns (valid
/// part only), rounded and truncated to [-2,2]; grams are read along the same
/// direction and the two directions are summed before merging.
FeatureVector residual_features(const Plane& block);

enum class BlockLabel { kPristine, kFake, kSkip };

struct LabeledBlock {
  int x = 0;
  int y = 0;
  BlockLabel label = BlockLabel::kSkip;
  double forged_fraction = 0.0;
};

/// Block origins along one axis: 0, stride, 2*stride, ... plus a final
/// block flush with the far edge when the grid does not reach it.
std::vector<int> block_origins(int extent, int block, int stride);

/// FAKE for forged fraction in [0.2, 0.8], PRISTINE for 0, SKIP otherwise.
std::vector<LabeledBlock> label_blocks(const TamperMask& truth, int block, int stride);

struct LinearModel {
  std::vector<double> weights;  ///< in standardized feature space
  double bias = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  double margin_scale = 1.0;

  /// w . ((f - mean) / scale) + bias
  double raw_score(const FeatureVector& f) const;
  /// Signed geometric distance to the hyperplane, positive on the fake side.
  double distance(const FeatureVector& f) const { return raw_score(f) * margin_scale; }
};

struct TrainParams {
  double lambda = 1e-3;
  int epochs = 30;
  std::uint64_t seed = 1;
};

/// Linear SVM by stochastic subgradient descent on the L2-regularized hinge
/// loss (step 1/(lambda t)), bias as an extra constant feature, returning the
/// averaged iterate. `fake` marks the positive class.
LinearModel train_model(std::span<const FeatureVector> features, std::span<const std::uint8_t> fake,
                        const TrainParams& params = {});

/// lambda/2 (|w|^2 + b^2) + mean hinge loss, in standardized space.
double svm_objective(const LinearModel& model, std::span<const FeatureVector> features,
                     std::span<const std::uint8_t> fake, double lambda);

struct SdhMap {
  Plane plane;
  std::vector<int> coverage;
};

/// Sum of signed hyperplane distances of all blocks covering each pixel.
SdhMap sdh_map(const RgbImage& image, const LinearModel& model, int block = kFeatureBlock, int stride = 16);

struct SplicingMaskParams {
  double fraction = 0.25;
  int morph_radius = 4;
  int min_area = 1000;
};

/// Clamp at 0, mark values above fraction * max, then morph_clean.
TamperMask splicing_mask(const SdhMap& map, const SplicingMaskParams& params = {});

/// Balanced training set: per image, pristine and fake blocks are subsampled
/// to at most `per_image` each, then the larger class is cut to the size of
/// the smaller one.
struct TrainingSet {
  std::vector<FeatureVector> features;
  std::vector<std::uint8_t> fake;
};
void add_training_blocks(TrainingSet& set, const RgbImage& image, const TamperMask& truth, int stride,
                         int per_image, std::uint64_t seed);
void balance_training_set(TrainingSet& set, std::uint64_t seed);

/// Model file: "LDSVM01\0", u32 dim, then weights, bias, feature_mean,
/// feature_scale, margin_scale as little-endian float64.
void write_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel read_model(const std::filesystem::path& path);

}  // namespace tamperloc
