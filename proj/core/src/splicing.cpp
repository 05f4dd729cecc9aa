#include "tamperloc/splicing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tamperloc/binary_io.hpp"
#include "tamperloc/errors.hpp"

namespace tamperloc {

namespace {

constexpr char kModelMagic[8] = {'L', 'D', 'S', 'V', 'M', '0', '1', '\0'};

int quantize(double r) {
  const long q = std::lround(r);
  return static_cast<int>(std::clamp<long>(q, -kResidualTruncation, kResidualTruncation));
}

// Gram codes of the quantized residual along rows (horizontal) or columns
// (vertical). A code at (x, y) covers residual samples x..x+3 (or y..y+3);
// the residual sample at x itself uses pixels x-3..x. Positions without a
// full gram hold -1.
struct GramCodes {
  int width = 0;
  int height = 0;
  std::vector<int> horizontal;
  std::vector<int> vertical;
};

GramCodes gram_codes(const Plane& luma) {
  GramCodes g;
  g.width = luma.width();
  g.height = luma.height();
  const auto n = luma.size();
  std::vector<int> qh(n, 0);
  std::vector<int> qv(n, 0);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (x >= 3) {
        const double r = luma(x, y) - 3.0 * luma(x - 1, y) + 3.0 * luma(x - 2, y) - luma(x - 3, y);
        qh[luma.index(x, y)] = quantize(r);
      }
      if (y >= 3) {
        const double r = luma(x, y) - 3.0 * luma(x, y - 1) + 3.0 * luma(x, y - 2) - luma(x, y - 3);
        qv[luma.index(x, y)] = quantize(r);
      }
    }
  }
  g.horizontal.assign(n, -1);
  g.vertical.assign(n, -1);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const std::size_t i = luma.index(x, y);
      if (x >= 3 && x + 3 < g.width) {
        g.horizontal[i] = gram_index(qh[i], qh[i + 1], qh[i + 2], qh[i + 3]);
      }
      if (y >= 3 && y + 3 < g.height) {
        const std::size_t w = static_cast<std::size_t>(g.width);
        g.vertical[i] = gram_index(qv[i], qv[i + w], qv[i + 2 * w], qv[i + 3 * w]);
      }
    }
  }
  return g;
}

FeatureVector block_features(const GramCodes& g, int bx, int by, int block) {
  std::array<std::uint32_t, kFeatureDim> counts{};
  const std::size_t w = static_cast<std::size_t>(g.width);
  // Horizontal grams inside the block start at bx+3 and end at bx+block-1.
  for (int y = by; y < by + block; ++y) {
    for (int x = bx + 3; x + 3 < bx + block; ++x) {
      ++counts[static_cast<std::size_t>(g.horizontal[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)])];
    }
  }
  for (int y = by + 3; y + 3 < by + block; ++y) {
    for (int x = bx; x < bx + block; ++x) {
      ++counts[static_cast<std::size_t>(g.vertical[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)])];
    }
  }
  FeatureVector f;
  f.x = bx;
  f.y = by;
  std::uint64_t total = 0;
  for (int b = 0; b < kFeatureDim; ++b) {
    const int mirror = kFeatureDim - 1 - b;
    if (b > mirror) continue;
    const std::uint64_t merged = b == mirror ? counts[static_cast<std::size_t>(b)]
                                             : static_cast<std::uint64_t>(counts[static_cast<std::size_t>(b)]) +
                                                   counts[static_cast<std::size_t>(mirror)];
    f.bins[static_cast<std::size_t>(b)] = static_cast<double>(merged);
    total += merged;
  }
  const int zero_bin = gram_index(0, 0, 0, 0);
  f.zero_residual = total > 0 && f.bins[static_cast<std::size_t>(zero_bin)] == static_cast<double>(total);
  if (total > 0) {
    for (double& v : f.bins) v /= static_cast<double>(total);
  }
  return f;
}

double dot_standardized(const LinearModel& m, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    s += m.weights[j] * ((f.bins[j] - m.feature_mean[j]) / m.feature_scale[j]);
  }
  return s;
}

void check_model(const LinearModel& m) {
  const auto dim = static_cast<std::size_t>(kFeatureDim);
  if (m.weights.size() != dim || m.feature_mean.size() != dim || m.feature_scale.size() != dim) {
    throw std::invalid_argument("linear model: vectors must have dimension 625");
  }
}

}  // namespace

int gram_index(int d0, int d1, int d2, int d3) {
  return (((d0 + 2) * 5 + (d1 + 2)) * 5 + (d2 + 2)) * 5 + (d3 + 2);
}

FeatureVector residual_features(const Plane& block) {
  if (block.width() != kFeatureBlock || block.height() != kFeatureBlock) {
    throw std::invalid_argument("residual_features: block must be 128x128");
  }
  return block_features(gram_codes(block), 0, 0, kFeatureBlock);
}

std::vector<int> block_origins(int extent, int block, int stride) {
  if (block <= 0 || stride <= 0) throw std::invalid_argument("block_origins: block and stride must be positive");
  std::vector<int> out;
  if (extent < block) return out;
  for (int o = 0; o + block <= extent; o += stride) out.push_back(o);
  if (out.back() + block < extent) out.push_back(extent - block);
  return out;
}

std::vector<LabeledBlock> label_blocks(const TamperMask& truth, int block, int stride) {
  if (block > truth.width() || block > truth.height()) {
    throw std::invalid_argument("label_blocks: block larger than the image");
  }
  // Row-prefix counts make each block query O(block).
  const int w = truth.width();
  std::vector<int> prefix(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(truth.height()), 0);
  for (int y = 0; y < truth.height(); ++y) {
    int* row = &prefix[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1)];
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (truth(x, y) ? 1 : 0);
  }
  std::vector<LabeledBlock> out;
  const double area = static_cast<double>(block) * block;
  for (int by : block_origins(truth.height(), block, stride)) {
    for (int bx : block_origins(w, block, stride)) {
      long forged = 0;
      for (int y = by; y < by + block; ++y) {
        const int* row = &prefix[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1)];
        forged += row[bx + block] - row[bx];
      }
      LabeledBlock b;
      b.x = bx;
      b.y = by;
      b.forged_fraction = static_cast<double>(forged) / area;
      if (forged == 0) {
        b.label = BlockLabel::kPristine;
      } else if (b.forged_fraction >= 0.2 && b.forged_fraction <= 0.8) {
        b.label = BlockLabel::kFake;
      } else {
        b.label = BlockLabel::kSkip;
      }
      out.push_back(b);
    }
  }
  return out;
}

double LinearModel::raw_score(const FeatureVector& f) const {
  check_model(*this);
  return dot_standardized(*this, f) + bias;
}

LinearModel train_model(std::span<const FeatureVector> features, std::span<const std::uint8_t> fake,
                        const TrainParams& params) {
  if (features.size() != fake.size()) throw std::invalid_argument("train_model: features and labels differ in length");
  if (!(params.lambda > 0.0)) throw std::invalid_argument("train_model: regularization must be > 0");
  if (params.epochs < 1) throw std::invalid_argument("train_model: epochs must be >= 1");
  const bool has_fake = std::any_of(fake.begin(), fake.end(), [](std::uint8_t v) { return v != 0; });
  const bool has_pristine = std::any_of(fake.begin(), fake.end(), [](std::uint8_t v) { return v == 0; });
  if (!has_fake || !has_pristine) throw std::invalid_argument("train_model: both classes are required");

  const std::size_t n = features.size();
  const auto dim = static_cast<std::size_t>(kFeatureDim);
  LinearModel model;
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 1.0);
  for (const FeatureVector& f : features) {
    for (std::size_t j = 0; j < dim; ++j) model.feature_mean[j] += f.bins[j];
  }
  for (double& m : model.feature_mean) m /= static_cast<double>(n);
  std::vector<double> var(dim, 0.0);
  for (const FeatureVector& f : features) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = f.bins[j] - model.feature_mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    model.feature_scale[j] = sd > 1e-12 ? sd : 1.0;
  }

  std::vector<std::vector<double>> z(n, std::vector<double>(dim + 1, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      z[i][j] = (features[i].bins[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
  }

  // w[dim] is the bias, paired with the constant feature 1.
  std::vector<double> w(dim + 1, 0.0);
  std::vector<double> avg(dim + 1, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(params.seed);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));
      const double y = fake[i] ? 1.0 : -1.0;
      const double margin = y * std::inner_product(w.begin(), w.end(), z[i].begin(), 0.0);
      const double decay = 1.0 - eta * params.lambda;
      for (double& v : w) v *= decay;
      if (margin < 1.0) {
        for (std::size_t j = 0; j <= dim; ++j) w[j] += eta * y * z[i][j];
      }
      const double k = 1.0 / static_cast<double>(t);
      for (std::size_t j = 0; j <= dim; ++j) avg[j] += (w[j] - avg[j]) * k;
    }
  }
  model.weights.assign(avg.begin(), avg.begin() + static_cast<std::ptrdiff_t>(dim));
  model.bias = avg[dim];
  double norm2 = 0.0;
  for (double v : model.weights) norm2 += v * v;
  model.margin_scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
  return model;
}

double svm_objective(const LinearModel& model, std::span<const FeatureVector> features,
                     std::span<const std::uint8_t> fake, double lambda) {
  if (features.size() != fake.size() || features.empty()) {
    throw std::invalid_argument("svm_objective: need matching, nonempty features and labels");
  }
  double norm2 = model.bias * model.bias;
  for (double v : model.weights) norm2 += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double y = fake[i] ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * model.raw_score(features[i]));
  }
  return 0.5 * lambda * norm2 + loss / static_cast<double>(features.size());
}

SdhMap sdh_map(const RgbImage& image, const LinearModel& model, int block, int stride) {
  check_model(model);
  if (block != kFeatureBlock) throw std::invalid_argument("sdh_map: block must be 128");
  if (stride <= 0) throw std::invalid_argument("sdh_map: stride must be positive");
  if (image.width() < block || image.height() < block) throw std::invalid_argument("sdh_map: image smaller than a block");
  const Plane luma = luminance(image);
  const GramCodes codes = gram_codes(luma);
  SdhMap map{Plane(image.width(), image.height()), std::vector<int>(luma.size(), 0)};
  for (int by : block_origins(image.height(), block, stride)) {
    for (int bx : block_origins(image.width(), block, stride)) {
      const double d = model.distance(block_features(codes, bx, by, block));
      for (int y = by; y < by + block; ++y) {
        for (int x = bx; x < bx + block; ++x) {
          map.plane(x, y) += d;
          ++map.coverage[luma.index(x, y)];
        }
      }
    }
  }
  return map;
}

TamperMask splicing_mask(const SdhMap& map, const SplicingMaskParams& params) {
  if (!(params.fraction > 0.0 && params.fraction < 1.0)) {
    throw std::invalid_argument("splicing_mask: fraction must lie in (0, 1)");
  }
  const Plane& p = map.plane;
  TamperMask mask(p.width(), p.height(), MaskSource::kSplicing);
  double peak = 0.0;
  for (double v : p.values()) peak = std::max(peak, v);
  if (peak <= 0.0) return mask;
  const double t = params.fraction * peak;
  for (std::size_t i = 0; i < p.size(); ++i) mask.set_at(i, std::max(p[i], 0.0) > t);
  return morph_clean(mask, params.morph_radius, params.min_area);
}

void add_training_blocks(TrainingSet& set, const RgbImage& image, const TamperMask& truth, int stride,
                         int per_image, std::uint64_t seed) {
  if (truth.width() != image.width() || truth.height() != image.height()) {
    throw std::invalid_argument("add_training_blocks: truth and image dimensions differ");
  }
  if (image.width() < kFeatureBlock || image.height() < kFeatureBlock) return;
  std::vector<LabeledBlock> pristine;
  std::vector<LabeledBlock> fake;
  for (const LabeledBlock& b : label_blocks(truth, kFeatureBlock, stride)) {
    if (b.label == BlockLabel::kPristine) pristine.push_back(b);
    if (b.label == BlockLabel::kFake) fake.push_back(b);
  }
  std::mt19937_64 rng(seed);
  const GramCodes codes = gram_codes(luminance(image));
  for (auto* group : {&pristine, &fake}) {
    std::shuffle(group->begin(), group->end(), rng);
    if (per_image > 0 && group->size() > static_cast<std::size_t>(per_image)) {
      group->resize(static_cast<std::size_t>(per_image));
    }
    for (const LabeledBlock& b : *group) {
      set.features.push_back(block_features(codes, b.x, b.y, kFeatureBlock));
      set.fake.push_back(b.label == BlockLabel::kFake ? 1 : 0);
    }
  }
}

void balance_training_set(TrainingSet& set, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < set.fake.size(); ++i) (set.fake[i] ? pos : neg).push_back(i);
  const std::size_t keep = std::min(pos.size(), neg.size());
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  pos.resize(keep);
  neg.resize(keep);
  std::vector<std::size_t> chosen(pos);
  chosen.insert(chosen.end(), neg.begin(), neg.end());
  std::sort(chosen.begin(), chosen.end());
  TrainingSet out;
  for (std::size_t i : chosen) {
    out.features.push_back(set.features[i]);
    out.fake.push_back(set.fake[i]);
  }
  set = std::move(out);
}

void write_model(const std::filesystem::path& path, const LinearModel& model) {
  check_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(kModelMagic, sizeof(kModelMagic));
  binary::put_u32(out, static_cast<std::uint32_t>(kFeatureDim));
  for (double v : model.weights) binary::put_f64(out, v);
  binary::put_f64(out, model.bias);
  for (double v : model.feature_mean) binary::put_f64(out, v);
  for (double v : model.feature_scale) binary::put_f64(out, v);
  binary::put_f64(out, model.margin_scale);
  if (!out) throw IoError(path.string(), "write failed");
}

LinearModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");
  char magic[8] = {};
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(kModelMagic)) != 0) {
    throw IoError(path.string(), "not a splicing model file (bad magic)");
  }
  std::uint32_t dim = 0;
  if (!binary::get_u32(in, dim)) throw IoError(path.string(), "truncated model header");
  if (dim != static_cast<std::uint32_t>(kFeatureDim)) throw IoError(path.string(), "unexpected feature dimension");
  LinearModel m;
  auto read_vec = [&](std::vector<double>& v) {
    v.assign(dim, 0.0);
    for (double& x : v) {
      if (!binary::get_f64(in, x)) throw IoError(path.string(), "truncated model data");
      if (!std::isfinite(x)) throw IoError(path.string(), "non-finite model value");
    }
  };
  auto read_one = [&](double& x) {
    if (!binary::get_f64(in, x)) throw IoError(path.string(), "truncated model data");
    if (!std::isfinite(x)) throw IoError(path.string(), "non-finite model value");
  };
  read_vec(m.weights);
  read_one(m.bias);
  read_vec(m.feature_mean);
  read_vec(m.feature_scale);
  read_one(m.margin_scale);
  if (std::any_of(m.feature_scale.begin(), m.feature_scale.end(), [](double s) { return !(s > 0.0); })) {
    throw IoError(path.string(), "feature scale must be positive");
  }
  return m;
}

}  // namespace tamperloc
