#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "parastitch/multifit.hpp"
#include "parastitch/warping.hpp"

namespace parastitch {

struct RunConfig {
  double lambda = 20.0;
  double beta = 10.0;
  double gamma = 200.0;
  double nu = 5.0;
  std::size_t min_remaining = 50;
  double ransac_threshold = 3.0;
  double sampson_eps = 3.0;
  int cell_size = 20;
  int r1 = 50;
  int r2 = 50;
  std::uint64_t seed = 1;
  std::size_t min_content_area = 64;
  BlendMode blend_mode = BlendMode::kFeather;

  // Ablations.
  bool use_initial_models = false;   // label with the RANSAC models only
  bool neighborhood_no_sam = false;  // plain Delaunay neighborhood
  bool disable_error_buffer = false;  // last writer wins
  bool single_homography = false;     // H_g alone

  EnergyParams energy_params() const;
};

// Applies one key=value setting. Keys match the field names; ablation flags
// and blend_mode take true/false and feather/constant. Throws kInvalidConfig.
void apply_setting(RunConfig& config, const std::string& key,
                   const std::string& value);

// Applies an ablation name: h0, no-sam-neighborhood, no-error-buffer or
// single-homography.
void apply_ablation(RunConfig& config, const std::string& name);

// Flat key=value file; '#' comments and blank lines ignored.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

// Throws kInvalidConfig when a value is out of range.
void validate_config(const RunConfig& config);

// Fully resolved settings, ordered by key.
std::map<std::string, std::string> config_entries(const RunConfig& config);

}  // namespace parastitch
