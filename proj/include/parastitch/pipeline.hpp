#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parastitch/config.hpp"
#include "parastitch/image.hpp"
#include "parastitch/labeling.hpp"
#include "parastitch/metrics.hpp"
#include "parastitch/multifit.hpp"
#include "parastitch/segmentation.hpp"
#include "parastitch/warping.hpp"

namespace parastitch {

struct StitchResult {
  Image panorama;
  RenderedTarget warped;
  Image reference_on_canvas;
  Image ownership;  // one color per model label, gray for mesh pixels
  Canvas canvas;
  ErrorBuffer buffer;
  WarpReport warp;

  Homography global_h;
  ModelSet models;  // models used for labeling
  ModelSet initial_models;
  Assignment assignment;  // over the filtered matches
  MatchSet filtered_matches;
  EnergyBreakdown energy;
  std::vector<double> energy_history;
  int outer_iterations = 0;
  int rejected_iterations = 0;
  OverlapLabeling labeling;
  std::optional<NonOverlapMesh> mesh;
  std::optional<MetricReport> metrics;

  std::size_t input_matches = 0;
  std::size_t dropped_matches = 0;  // target point outside the image
  std::size_t content_count = 0;
  std::size_t overlap_pixels = 0;
  bool fundamental_filter_applied = false;
  bool fallback_single_homography = false;
  std::vector<std::string> warnings;
};

// Fundamental filter, H_g, overlap, neighborhood, multi-model fit, content
// labeling, non-overlap mesh, canvas, forward claim, backward render, blend,
// metrics. NoModelFound falls back to H_g alone and sets the flag. Throws
// kEmptyOverlap, kDegenerateConfiguration and input errors.
StitchResult stitch(const Image& target, const Image& reference,
                    const LabelMap& labels, const MatchSet& matches,
                    const RunConfig& config);

// Deterministic JSON report (no timestamps).
std::string stitch_report_json(const StitchResult& result,
                               const RunConfig& config);

// panorama.png, warped_target.png, warped_reference.png, ownership.png and
// report.json.
void write_stitch_outputs(const StitchResult& result, const RunConfig& config,
                          const std::filesystem::path& dir);

}  // namespace parastitch
