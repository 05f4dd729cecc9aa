#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamperloc/copymove.hpp"
#include "tamperloc/denoise.hpp"
#include "tamperloc/fusion.hpp"
#include "tamperloc/prnu.hpp"
#include "tamperloc/splicing.hpp"

namespace tamperloc {

/// Bad configuration key or value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0 = one per hardware thread

  NlmParams nlm;
  int pce_exclusion = kDefaultPceExclusion;
  double cluster_pce = 50.0;
  int cluster_min_size = 5;
  double association_pce = 100.0;
  int prnu_window = 129;
  PrnuMaskParams prnu;

  NnfParams nnf;
  std::vector<double> sweep_rotations = {0.0, 90.0, 180.0, 270.0};
  std::vector<double> sweep_scales = {0.8, 1.0, 1.25};
  CopyRegionParams regions;
  DisambiguationParams disambiguation;

  int splicing_block = kFeatureBlock;
  int splicing_stride = 16;
  SplicingMaskParams splicing;
  TrainParams training;
  int training_blocks_per_image = 24;

  double fusion_pce_override = kDefaultPceOverride;

  std::filesystem::path model;  ///< pre-trained splicing model; empty = train on the corpus

  ClusterParams cluster_params() const;
  CopyMoveParams copymove_params() const;
};

/// Every key in a fixed order.
std::vector<std::string> config_keys();

/// Throws ConfigError on an unknown key or unparsable value.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& config, const std::string& key);

/// Reads "key = value" lines; blank lines and '#' comments are skipped.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Applies a "key=value" override.
void apply_config_override(PipelineConfig& config, const std::string& assignment);

/// Throws ConfigError when a value is out of range.
void validate_config(const PipelineConfig& config);

/// One "key = value" line per key, loadable by apply_config_file.
std::string format_config(const PipelineConfig& config);

}  // namespace tamperloc
