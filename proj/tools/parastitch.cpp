// Command-line front end: stitch, synth, eval, fit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parastitch/config.hpp"
#include "parastitch/error.hpp"
#include "parastitch/labeling.hpp"
#include "parastitch/match_io.hpp"
#include "parastitch/metrics.hpp"
#include "parastitch/multifit.hpp"
#include "parastitch/pipeline.hpp"
#include "parastitch/png_io.hpp"
#include "parastitch/segmentation.hpp"
#include "parastitch/synthscene.hpp"

namespace fs = std::filesystem;
using namespace parastitch;

namespace {

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kIo = 2,
  kGeometry = 3,
  kEmptyOverlapExit = 4,
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kDecodeError:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kDimensionMismatch:
      return kIo;
    case ErrorCode::kNoModelFound:
    case ErrorCode::kDegenerateConfiguration:
      return kGeometry;
    case ErrorCode::kEmptyOverlap:
      return kEmptyOverlapExit;
    default:
      return kOther;
  }
}

// Flags shared by stitch and fit. Unset flags leave config-file values alone.
struct ConfigFlags {
  std::string config_path;
  std::optional<double> lambda, beta, gamma, nu, ransac_threshold, sampson_eps;
  std::optional<int> cell_size, r1, r2;
  std::optional<std::size_t> min_remaining, min_content_area;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> blend;
  std::vector<std::string> ablations;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file");
    app->add_option("--lambda", lambda, "smoothness weight");
    app->add_option("--beta", beta, "label cost per model");
    app->add_option("--gamma", gamma, "outlier cost");
    app->add_option("--nu", nu, "Student's t degrees of freedom");
    app->add_option("--min-remaining", min_remaining, "RANSAC stop count");
    app->add_option("--ransac-threshold", ransac_threshold, "RANSAC STE threshold (px)");
    app->add_option("--sampson-eps", sampson_eps, "fundamental filter threshold (px)");
    app->add_option("--min-content-area", min_content_area, "content merge area (px)");
    app->add_option("--cell-size", cell_size, "mesh cell size (px)");
    app->add_option("--r1", r1, "overlap anchors");
    app->add_option("--r2", r2, "outer anchors");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--blend", blend, "feather | constant")
        ->check(CLI::IsMember({"feather", "constant"}));
    app->add_option("--ablation", ablations,
                    "h0 | no-sam-neighborhood | no-error-buffer | single-homography");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) load_config_file(c, config_path);
    if (lambda) c.lambda = *lambda;
    if (beta) c.beta = *beta;
    if (gamma) c.gamma = *gamma;
    if (nu) c.nu = *nu;
    if (ransac_threshold) c.ransac_threshold = *ransac_threshold;
    if (sampson_eps) c.sampson_eps = *sampson_eps;
    if (min_remaining) c.min_remaining = *min_remaining;
    if (min_content_area) c.min_content_area = *min_content_area;
    if (cell_size) c.cell_size = *cell_size;
    if (r1) c.r1 = *r1;
    if (r2) c.r2 = *r2;
    if (seed) c.seed = *seed;
    if (blend) apply_setting(c, "blend_mode", *blend);
    for (const auto& a : ablations) apply_ablation(c, a);
    validate_config(c);
    return c;
  }
};

int run_stitch(const std::string& target_path, const std::string& ref_path,
               const std::string& labels_path, const std::string& matches_path,
               const ConfigFlags& flags, const std::string& out_dir) {
  const RunConfig config = flags.resolve();
  const Image target = read_png(target_path);
  const Image reference = read_png(ref_path);
  const LabelMap labels = load_label_map(labels_path, target.width(), target.height());
  const MatchSet matches = read_matches(matches_path);
  const StitchResult result = stitch(target, reference, labels, matches, config);
  write_stitch_outputs(result, config, out_dir);
  if (result.metrics) std::cout << summary_line(*result.metrics) << '\n';
  std::cout << "models=" << result.models.models.size()
            << " energy=" << result.energy.total << '\n';
  return result.fallback_single_homography ? kGeometry : kOk;
}

int run_synth(const std::string& spec_path, const std::string& preset,
              std::optional<std::uint64_t> seed, const std::string& out_dir) {
  SceneSpec spec;
  if (!spec_path.empty()) {
    spec = load_scene_spec(spec_path);
    if (seed) spec.seed = *seed;
  } else {
    spec = preset_by_name(preset, seed.value_or(1));
  }
  const Scene scene = generate(spec);
  write_scene(scene, spec, out_dir);
  std::cout << "wrote " << scene.matches.size() << " matches to " << out_dir << '\n';
  return kOk;
}

int run_eval(const std::string& a_path, const std::string& b_path,
             const std::string& json_path) {
  const Image a = read_png(a_path);
  const Image b = read_png(b_path);
  const MetricReport m = evaluate_overlap(a, b);
  std::cout << summary_line(m) << '\n';
  if (!json_path.empty()) {
    nlohmann::json j = {{"psnr", m.psnr},
                        {"ssim", m.ssim},
                        {"evaluated_pixels", m.evaluated_pixels},
                        {"ssim_windows", m.ssim_windows},
                        {"lpips", "not computed"}};
    std::ofstream out(json_path);
    require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + json_path);
    out << j.dump(2) << '\n';
  }
  return kOk;
}

int run_fit(const std::string& matches_path, const std::string& labels_path,
            int ref_width, int ref_height, const ConfigFlags& flags,
            const std::string& out_path) {
  const RunConfig config = flags.resolve();
  const Gray16Raster raster = read_png_gray16(labels_path);
  const LabelMap labels{raster.width, raster.height,
                        std::vector<std::uint32_t>(raster.values.begin(),
                                                   raster.values.end())};
  const MatchSet matches = read_matches(matches_path);
  validate_match_set(matches);
  if (ref_width <= 0) ref_width = labels.width;
  if (ref_height <= 0) ref_height = labels.height;

  const ContentPartition partition = normalize_partition(labels, config.min_content_area);
  const Homography hg = global_homography(matches);
  const OverlapMask overlap = compute_overlap(partition, hg, ref_width, ref_height);
  const auto ids = assign_points_to_contents(partition, matches);
  const NeighborGraph graph = build_neighborhood(
      matches, ids, overlap,
      config.neighborhood_no_sam ? NeighborhoodMode::kDelaunayOnly
                                 : NeighborhoodMode::kContentAware);
  const FitResult r = fit(matches, graph, config.energy_params(), config.seed);

  nlohmann::json j;
  j["models"] = nlohmann::json::array();
  for (const auto& h : r.models.models) j["models"].push_back(h.entries());
  j["labels"] = r.assignment.label;
  j["energy"] = {{"data", r.energy.data},
                 {"smooth", r.energy.smooth},
                 {"label_cost", r.energy.label_cost},
                 {"total", r.energy.total}};
  j["energy_history"] = r.energy_history;
  j["initial_model_count"] = r.initial_models.models.size();
  j["outer_iterations"] = r.outer_iterations;
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(out_path);
    require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + out_path);
    out << text << '\n';
  }
  std::cerr << "energy data=" << r.energy.data << " smooth=" << r.energy.smooth
            << " label_cost=" << r.energy.label_cost << " total=" << r.energy.total
            << " models=" << r.models.models.size() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-homography image stitching"};
  app.require_subcommand(1);

  std::string target, reference, labels, matches, out_dir = "out";
  ConfigFlags stitch_flags;
  auto* stitch_cmd = app.add_subcommand("stitch", "stitch a target onto a reference");
  stitch_cmd->add_option("--target", target, "target image (PNG)")->required();
  stitch_cmd->add_option("--reference", reference, "reference image (PNG)")->required();
  stitch_cmd->add_option("--labels", labels, "16-bit label map (PNG)")->required();
  stitch_cmd->add_option("--matches", matches, "match file")->required();
  stitch_cmd->add_option("--out-dir", out_dir, "output directory");
  stitch_flags.add_to(stitch_cmd);

  std::string spec_path, preset = "two_plane_occlusion", synth_out = "scene";
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic parallax scene");
  synth_cmd->add_option("--spec", spec_path, "scene JSON");
  synth_cmd->add_option("--preset", preset,
                        "two_plane_occlusion | three_plane | interleaved | parallax_pair");
  synth_cmd->add_option("--seed", synth_seed, "scene seed");
  synth_cmd->add_option("--out-dir", synth_out, "output directory");

  std::string eval_a, eval_b, eval_json;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM on mutual coverage");
  eval_cmd->add_option("image_a", eval_a, "first image (alpha = coverage)")->required();
  eval_cmd->add_option("image_b", eval_b, "second image (alpha = coverage)")->required();
  eval_cmd->add_option("--json", eval_json, "write the report as JSON");

  std::string fit_matches, fit_labels, fit_out;
  int ref_width = 0, ref_height = 0;
  ConfigFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "multi-homography fit only");
  fit_cmd->add_option("--matches", fit_matches, "match file")->required();
  fit_cmd->add_option("--labels", fit_labels, "16-bit label map (PNG)")->required();
  fit_cmd->add_option("--ref-width", ref_width, "reference width (default: label map)");
  fit_cmd->add_option("--ref-height", ref_height, "reference height (default: label map)");
  fit_cmd->add_option("--out", fit_out, "output JSON (default: stdout)");
  fit_flags.add_to(fit_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stitch_cmd) {
      return run_stitch(target, reference, labels, matches, stitch_flags, out_dir);
    }
    if (*synth_cmd) return run_synth(spec_path, preset, synth_seed, synth_out);
    if (*eval_cmd) return run_eval(eval_a, eval_b, eval_json);
    if (*fit_cmd) {
      return run_fit(fit_matches, fit_labels, ref_width, ref_height, fit_flags, fit_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
