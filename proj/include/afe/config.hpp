#ifndef AFE_CONFIG_HPP
#define AFE_CONFIG_HPP

#include "afe/dataio.hpp"
#include "afe/features.hpp"
#include "afe/nn.hpp"
#include "afe/select.hpp"
#include "afe/tuning.hpp"

#include <filesystem>
#include <optional>
#include <string_view>

namespace afe {

/// Everything a run depends on. Read from an INI file; relative paths are
/// resolved against the file's directory.
struct RunConfig {
  // [paths]
  std::filesystem::path manifest;
  std::filesystem::path out_dir = "out";
  std::filesystem::path music_manifest;   // synth sources
  std::filesystem::path speech_manifest;
  // [audio]
  int sample_rate = kEngineSampleRate;
  double window_seconds = 7.0;
  // [frames]
  FeatureConfig features;
  // [preprocess]
  double fence_multiplier = 1.5;
  // [select]
  FilterBankConfig select;
  // [split]
  double test_fraction = 0.15;
  double meta_fraction = 0.20;
  // [balance]
  int neighbors = 3;
  // [cv]
  int k = 5;
  int k_outer = 5;
  int k_inner = 5;
  ShrinkSpec shrink;
  // [nn]
  int batch_size = 16;
  double learning_rate = 0.01;
  std::vector<int> stop_epochs{140, 200, 300};
  // [synth]
  int per_class = 30;
  // [run]
  std::optional<std::uint64_t> seed;

  void validate() const;
  /// The seed, or ConfigError when none was given.
  std::uint64_t require_seed() const;
  TrainConfig nn_config(std::uint64_t stage_seed) const;
};

RunConfig parse_config(std::string_view ini_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace afe

#endif  // AFE_CONFIG_HPP
