#include "tamperloc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "tamperloc/errors.hpp"

namespace tamperloc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError("config: bad value '" + text + "' for " + key);
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
std::string format_number(T v) {
  return std::to_string(v);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += format_number(values[i]);
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

template <typename T>
Entry number(std::string key, T PipelineConfig::*member) {
  return {key, [member](const PipelineConfig& c) { return format_number(c.*member); },
          [key, member](PipelineConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

template <typename S, typename T>
Entry nested(std::string key, S PipelineConfig::*outer, T S::*inner) {
  return {key, [outer, inner](const PipelineConfig& c) { return format_number((c.*outer).*inner); },
          [key, outer, inner](PipelineConfig& c, const std::string& v) {
            (c.*outer).*inner = parse_number<T>(key, v);
          }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      number("seed", &PipelineConfig::seed),
      number("threads", &PipelineConfig::threads),
      nested("nlm.patch", &PipelineConfig::nlm, &NlmParams::patch),
      nested("nlm.search", &PipelineConfig::nlm, &NlmParams::search),
      nested("nlm.strength", &PipelineConfig::nlm, &NlmParams::strength),
      number("prnu.pce_exclusion", &PipelineConfig::pce_exclusion),
      number("prnu.cluster_pce", &PipelineConfig::cluster_pce),
      number("prnu.cluster_min_size", &PipelineConfig::cluster_min_size),
      number("prnu.association_pce", &PipelineConfig::association_pce),
      number("prnu.window", &PipelineConfig::prnu_window),
      nested("prnu.base_threshold", &PipelineConfig::prnu, &PrnuMaskParams::base_threshold),
      nested("prnu.pce_reference", &PipelineConfig::prnu, &PrnuMaskParams::pce_reference),
      nested("prnu.saturation_level", &PipelineConfig::prnu, &PrnuMaskParams::saturation_level),
      nested("prnu.morph_radius", &PipelineConfig::prnu, &PrnuMaskParams::morph_radius),
      nested("prnu.min_area", &PipelineConfig::prnu, &PrnuMaskParams::min_area),
      nested("copymove.patch", &PipelineConfig::nnf, &NnfParams::patch),
      nested("copymove.iterations", &PipelineConfig::nnf, &NnfParams::iterations),
      nested("copymove.min_displacement", &PipelineConfig::nnf, &NnfParams::min_displacement),
      {"copymove.rotations", [](const PipelineConfig& c) { return format_list(c.sweep_rotations); },
       [](PipelineConfig& c, const std::string& v) { c.sweep_rotations = parse_list("copymove.rotations", v); }},
      {"copymove.scales", [](const PipelineConfig& c) { return format_list(c.sweep_scales); },
       [](PipelineConfig& c, const std::string& v) { c.sweep_scales = parse_list("copymove.scales", v); }},
      nested("copymove.coherence_window", &PipelineConfig::regions, &CopyRegionParams::coherence_window),
      nested("copymove.coherence_tolerance", &PipelineConfig::regions, &CopyRegionParams::coherence_tolerance),
      nested("copymove.coherence_threshold", &PipelineConfig::regions, &CopyRegionParams::coherence_threshold),
      nested("copymove.corr_threshold", &PipelineConfig::regions, &CopyRegionParams::corr_threshold),
      nested("copymove.corr_window", &PipelineConfig::regions, &CopyRegionParams::corr_window),
      nested("copymove.refine_window", &PipelineConfig::regions, &CopyRegionParams::refine_window),
      nested("copymove.flat_variance_floor", &PipelineConfig::regions, &CopyRegionParams::flat_variance_floor),
      nested("copymove.min_area", &PipelineConfig::regions, &CopyRegionParams::min_area),
      nested("copymove.morph_radius", &PipelineConfig::regions, &CopyRegionParams::morph_radius),
      nested("copymove.min_seed_pixels", &PipelineConfig::regions, &CopyRegionParams::min_seed_pixels),
      nested("copymove.min_pair_corr", &PipelineConfig::regions, &CopyRegionParams::min_pair_corr),
      nested("copymove.max_shift_corr", &PipelineConfig::regions, &CopyRegionParams::max_shift_corr),
      nested("copymove.shift_probe", &PipelineConfig::regions, &CopyRegionParams::shift_probe),
      nested("copymove.disambiguation_pce", &PipelineConfig::disambiguation, &DisambiguationParams::pce_floor),
      nested("copymove.min_region_area", &PipelineConfig::disambiguation, &DisambiguationParams::min_region_area),
      number("splicing.block", &PipelineConfig::splicing_block),
      number("splicing.stride", &PipelineConfig::splicing_stride),
      nested("splicing.fraction", &PipelineConfig::splicing, &SplicingMaskParams::fraction),
      nested("splicing.morph_radius", &PipelineConfig::splicing, &SplicingMaskParams::morph_radius),
      nested("splicing.min_area", &PipelineConfig::splicing, &SplicingMaskParams::min_area),
      nested("splicing.lambda", &PipelineConfig::training, &TrainParams::lambda),
      nested("splicing.epochs", &PipelineConfig::training, &TrainParams::epochs),
      number("splicing.blocks_per_image", &PipelineConfig::training_blocks_per_image),
      {"splicing.model", [](const PipelineConfig& c) { return c.model.string(); },
       [](PipelineConfig& c, const std::string& v) { c.model = trim(v); }},
      number("fusion.pce_override", &PipelineConfig::fusion_pce_override),
  };
  return table;
}

const Entry& find_entry(const std::string& key) {
  const auto& table = entries();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == key; });
  if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
  return *it;
}

}  // namespace

ClusterParams PipelineConfig::cluster_params() const {
  ClusterParams p;
  p.pce_threshold = cluster_pce;
  p.min_cluster_size = cluster_min_size;
  p.exclusion_radius = pce_exclusion;
  p.seed = seed;
  return p;
}

CopyMoveParams PipelineConfig::copymove_params() const {
  CopyMoveParams p;
  p.nnf = nnf;
  p.nnf.seed = seed;
  p.transforms.clear();
  for (double r : sweep_rotations) {
    for (double s : sweep_scales) p.transforms.push_back({r, s});
  }
  p.regions = regions;
  p.regions.min_displacement = nnf.min_displacement;
  p.disambiguation = disambiguation;
  return p;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.push_back(e.key);
  return keys;
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
  find_entry(trim(key)).set(config, value);
}

std::string get_config_value(const PipelineConfig& config, const std::string& key) {
  return find_entry(trim(key)).get(config);
}

void apply_config_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("config: expected key=value, got '" + assignment + "'");
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config file");
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      apply_config_override(config, line);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void validate_config(const PipelineConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(c.threads >= 0, "threads must be >= 0");
  require(c.nlm.patch > 0 && c.nlm.patch % 2 == 1, "nlm.patch must be odd");
  require(c.nlm.search > 0 && c.nlm.search % 2 == 1, "nlm.search must be odd");
  require(c.nlm.strength > 0.0, "nlm.strength must be > 0");
  require(c.pce_exclusion >= 0, "prnu.pce_exclusion must be >= 0");
  require(c.cluster_pce > 0.0, "prnu.cluster_pce must be > 0");
  require(c.cluster_min_size >= 1, "prnu.cluster_min_size must be >= 1");
  require(c.association_pce > 0.0, "prnu.association_pce must be > 0");
  require(c.prnu_window >= 3 && c.prnu_window % 2 == 1, "prnu.window must be odd and >= 3");
  require(c.prnu.base_threshold > 0.0, "prnu.base_threshold must be > 0");
  require(c.prnu.pce_reference > 0.0, "prnu.pce_reference must be > 0");
  require(c.prnu.saturation_level > 0.0, "prnu.saturation_level must be > 0");
  require(c.prnu.morph_radius >= 0 && c.prnu.min_area >= 0, "prnu morphology parameters must be >= 0");
  require(c.nnf.patch > 0 && c.nnf.patch % 2 == 1, "copymove.patch must be odd");
  require(c.nnf.iterations >= 1, "copymove.iterations must be >= 1");
  require(c.nnf.min_displacement > 0.0, "copymove.min_displacement must be > 0");
  require(std::all_of(c.sweep_scales.begin(), c.sweep_scales.end(), [](double s) { return s > 0.0; }),
          "copymove.scales must be > 0");
  require(c.regions.coherence_window >= 3 && c.regions.coherence_window % 2 == 1,
          "copymove.coherence_window must be odd and >= 3");
  require(c.regions.coherence_tolerance >= 0, "copymove.coherence_tolerance must be >= 0");
  require(c.regions.coherence_threshold > 0.0 && c.regions.coherence_threshold <= 1.0,
          "copymove.coherence_threshold must lie in (0, 1]");
  require(c.regions.corr_threshold > 0.0 && c.regions.corr_threshold <= 1.0,
          "copymove.corr_threshold must lie in (0, 1]");
  require(c.regions.corr_window >= 2, "copymove.corr_window must be >= 2");
  require(c.regions.refine_window >= 0, "copymove.refine_window must be >= 0");
  require(c.regions.flat_variance_floor > 0.0, "copymove.flat_variance_floor must be > 0");
  require(c.regions.min_area > 0, "copymove.min_area must be > 0");
  require(c.regions.morph_radius >= 0 && c.regions.min_seed_pixels >= 1, "copymove morphology parameters out of range");
  require(c.regions.min_pair_corr > 0.0 && c.regions.min_pair_corr <= 1.0, "copymove.min_pair_corr must lie in (0, 1]");
  require(c.regions.max_shift_corr > 0.0 && c.regions.shift_probe >= 1, "copymove shift probe parameters out of range");
  require(c.disambiguation.pce_floor > 0.0, "copymove.disambiguation_pce must be > 0");
  require(c.splicing_block == kFeatureBlock, "splicing.block must be 128");
  require(c.splicing_stride > 0, "splicing.stride must be > 0");
  require(c.splicing.fraction > 0.0 && c.splicing.fraction < 1.0, "splicing.fraction must lie in (0, 1)");
  require(c.splicing.morph_radius >= 0 && c.splicing.min_area >= 0, "splicing morphology parameters must be >= 0");
  require(c.training.lambda > 0.0, "splicing.lambda must be > 0");
  require(c.training.epochs >= 1, "splicing.epochs must be >= 1");
  require(c.training_blocks_per_image >= 1, "splicing.blocks_per_image must be >= 1");
  require(c.fusion_pce_override > 0.0, "fusion.pce_override must be > 0");
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const Entry& e : entries()) out += e.key + " = " + e.get(config) + "\n";
  return out;
}

}  // namespace tamperloc
