#include "parastitch/pipeline.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "parastitch/error.hpp"
#include "parastitch/png_io.hpp"
#include "parastitch/random.hpp"

namespace parastitch {

namespace {

using Json = nlohmann::json;

void warn(StitchResult& r, const std::string& msg) {
  std::clog << "warning: " << msg << '\n';
  r.warnings.push_back(msg);
}

Rgb label_color(int label) {
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(label) * 7919u + 17u);
  return {static_cast<double>(64 + (h & 0xbf)),
          static_cast<double>(64 + ((h >> 8) & 0xbf)),
          static_cast<double>(64 + ((h >> 16) & 0xbf))};
}

Image ownership_image(const StitchResult& r) {
  Image out(r.canvas.width, r.canvas.height, false);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const auto i = r.canvas.index(x, y);
      const auto owner = r.buffer.owner[i];
      if (owner != 0) {
        out.set(x, y, label_color(r.labeling.content_label.at(owner)));
        out.set_covered(x, y, true);
      } else if (r.warped.from_mesh[i]) {
        out.set(x, y, {128.0, 128.0, 128.0});
        out.set_covered(x, y, true);
      }
    }
  }
  return out;
}

}  // namespace

StitchResult stitch(const Image& target, const Image& reference,
                    const LabelMap& labels, const MatchSet& matches,
                    const RunConfig& config) {
  validate_config(config);
  require(labels.width == target.width() && labels.height == target.height(),
          ErrorCode::kDimensionMismatch, "label map and target differ in size");
  validate_match_set(matches);
  StitchResult r;
  r.input_matches = matches.size();

  const ContentPartition partition =
      normalize_partition(labels, config.min_content_area);
  r.content_count = partition.count();

  std::vector<std::size_t> dropped;
  assign_points_to_contents(partition, matches, &dropped);
  MatchSet kept;
  for (std::size_t i = 0, d = 0; i < matches.size(); ++i) {
    if (d < dropped.size() && dropped[d] == i) {
      ++d;
      continue;
    }
    kept.push_back(matches[i]);
  }
  r.dropped_matches = dropped.size();

  r.filtered_matches = kept;
  if (kept.size() >= 8) {
    try {
      const auto f = estimate_fundamental_ransac(kept, config.sampson_eps, config.seed);
      r.filtered_matches = fundamental_inlier_filter(f, kept);
      r.fundamental_filter_applied = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration &&
          e.code() != ErrorCode::kEmptyResult) {
        throw;
      }
      warn(r, std::string("fundamental filter skipped: ") + e.what());
    }
  } else {
    warn(r, "fewer than 8 matches; fundamental filter skipped");
  }
  const MatchSet& m = r.filtered_matches;

  r.global_h = global_homography(m);
  const OverlapMask overlap =
      compute_overlap(partition, r.global_h, reference.width(), reference.height());
  r.overlap_pixels = overlap.overlap_pixel_count();

  const auto content_ids = assign_points_to_contents(partition, m);
  const NeighborGraph graph = build_neighborhood(
      m, content_ids, overlap,
      config.neighborhood_no_sam ? NeighborhoodMode::kDelaunayOnly
                                 : NeighborhoodMode::kContentAware);
  const EnergyParams params = config.energy_params();

  auto use_global_only = [&] {
    r.models.models = {r.global_h};
    r.assignment = assign_best_labels(r.models, m, params);
    r.energy = energy(r.models, r.assignment, graph, m, params);
    r.energy_history = {r.energy.total};
  };
  if (config.single_homography) {
    use_global_only();
  } else {
    try {
      const FitResult fit_result = fit(m, graph, params, config.seed);
      r.initial_models = fit_result.initial_models;
      r.energy_history = fit_result.energy_history;
      r.outer_iterations = fit_result.outer_iterations;
      r.rejected_iterations = fit_result.rejected_iterations;
      if (config.use_initial_models) {
        r.models = fit_result.initial_models;
        r.assignment = fit_result.initial_assignment;
        r.energy = energy(r.models, r.assignment, graph, m, params);
      } else {
        r.models = fit_result.models;
        r.assignment = fit_result.assignment;
        r.energy = fit_result.energy;
      }
      if (r.models.models.empty()) {
        fail(ErrorCode::kNoModelFound, "every model was pruned");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoModelFound) throw;
      warn(r, std::string("multi-model fit failed, using the global homography: ") +
                  e.what());
      r.fallback_single_homography = true;
      use_global_only();
    }
  }

  r.labeling = label_overlap_contents(partition, overlap, r.models, r.global_h,
                                      target, reference);
  Similarity similarity;
  try {
    similarity = select_similarity(r.models, r.assignment, m);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
    warn(r, "no model supports a similarity; fitting it to all matches");
    similarity = estimate_similarity(m);
  }
  if (r.overlap_pixels < overlap.mask.size()) {
    const AnchorSet anchors =
        sample_anchors(overlap, r.labeling, similarity, config.r1, config.r2, config.nu);
    r.mesh = build_nonoverlap_mesh(overlap, anchors, config.cell_size);
  }
  const NonOverlapMesh* mesh = r.mesh ? &*r.mesh : nullptr;

  r.canvas = compute_canvas(reference.width(), reference.height(), overlap,
                            r.labeling, mesh);
  ClaimResult claim = forward_claim(r.labeling, partition, overlap, r.canvas,
                                    !config.disable_error_buffer);
  r.buffer = std::move(claim.buffer);
  r.warp = claim.report;
  r.warped = backward_render(r.buffer, r.labeling, partition, overlap, mesh,
                             target, r.canvas);
  r.reference_on_canvas = place_on_canvas(reference, r.canvas);
  r.panorama = blend_linear(r.warped.image, r.reference_on_canvas, config.blend_mode);
  r.ownership = ownership_image(r);
  try {
    r.metrics = evaluate_overlap(r.warped.image, r.reference_on_canvas);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyOverlap) throw;
    warn(r, "metrics unavailable: warped images share no complete window");
  }
  return r;
}

std::string stitch_report_json(const StitchResult& r, const RunConfig& config) {
  Json j;
  j["config"] = Json::object();
  for (const auto& [k, v] : config_entries(config)) j["config"][k] = v;
  j["matches"] = {{"input", r.input_matches},
                  {"dropped_out_of_bounds", r.dropped_matches},
                  {"after_fundamental_filter", r.filtered_matches.size()}};
  j["contents"] = r.content_count;
  j["overlap_pixels"] = r.overlap_pixels;
  j["global_homography"] = r.global_h.entries();
  j["models"] = Json::array();
  for (const auto& h : r.models.models) j["models"].push_back(h.entries());
  j["initial_model_count"] = r.initial_models.models.size();
  j["energy"] = {{"data", r.energy.data},
                 {"smooth", r.energy.smooth},
                 {"label_cost", r.energy.label_cost},
                 {"total", r.energy.total}};
  j["energy_history"] = r.energy_history;
  j["outer_iterations"] = r.outer_iterations;
  j["rejected_iterations"] = r.rejected_iterations;
  std::size_t outliers = 0;
  for (auto l : r.assignment.label) outliers += l == kOutlierLabel;
  j["outlier_matches"] = outliers;
  Json labels = Json::object();
  for (const auto& [id, label] : r.labeling.content_label) {
    labels[std::to_string(id)] = label;
  }
  j["content_labels"] = labels;
  j["inherited_labels"] = r.labeling.inherited;
  j["canvas"] = {{"x0", r.canvas.x0},
                 {"y0", r.canvas.y0},
                 {"width", r.canvas.width},
                 {"height", r.canvas.height}};
  j["warp"] = {{"claimed_pixels", r.warp.claimed_pixels},
               {"conflict_pixels", r.warp.conflict_pixels},
               {"hole_pixels", r.warp.hole_pixels}};
  j["mesh"] = r.mesh ? Json{{"cols", r.mesh->cols},
                            {"rows", r.mesh->rows},
                            {"triangles", r.mesh->triangles.size()}}
                     : Json(nullptr);
  if (r.metrics) {
    j["metrics"] = {{"psnr", r.metrics->psnr},
                    {"ssim", r.metrics->ssim},
                    {"evaluated_pixels", r.metrics->evaluated_pixels},
                    {"ssim_windows", r.metrics->ssim_windows},
                    {"lpips", "not computed"}};
  } else {
    j["metrics"] = nullptr;
  }
  j["flags"] = {{"fundamental_filter_applied", r.fundamental_filter_applied},
                {"fallback_single_homography", r.fallback_single_homography}};
  j["warnings"] = r.warnings;
  return j.dump(2);
}

void write_stitch_outputs(const StitchResult& r, const RunConfig& config,
                          const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIoError, "cannot create " + dir.string());
  write_png(dir / "panorama.png", r.panorama, true);
  write_png(dir / "warped_target.png", r.warped.image, true);
  write_png(dir / "warped_reference.png", r.reference_on_canvas, true);
  write_png(dir / "ownership.png", r.ownership, true);
  std::ofstream out(dir / "report.json");
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write report.json");
  out << stitch_report_json(r, config) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed for report.json");
}

}  // namespace parastitch
