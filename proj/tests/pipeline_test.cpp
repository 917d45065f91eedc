#include <algorithm>

#include <gtest/gtest.h>
#include <json.hpp>

#include "parastitch/error.hpp"
#include "parastitch/pipeline.hpp"
#include "parastitch/synthscene.hpp"
#include "support.hpp"

namespace parastitch {
namespace {

using testing::scratch_dir;
using testing::slurp;

StitchResult run(const Scene& s, const RunConfig& c) {
  return stitch(s.target, s.reference, s.labels, s.matches, c);
}

const Scene& occlusion_scene() {
  static const Scene scene = generate(preset_two_plane_occlusion(1));
  return scene;
}

TEST(Pipeline, SameSeedGivesIdenticalOutputs) {
  const RunConfig c;
  const StitchResult a = run(occlusion_scene(), c);
  const StitchResult b = run(occlusion_scene(), c);
  EXPECT_EQ(a.panorama, b.panorama);
  EXPECT_EQ(stitch_report_json(a, c), stitch_report_json(b, c));
  const auto da = scratch_dir("pipeline_det_a"), db = scratch_dir("pipeline_det_b");
  write_stitch_outputs(a, c, da);
  write_stitch_outputs(b, c, db);
  for (const char* f : {"panorama.png", "warped_target.png", "warped_reference.png",
                        "ownership.png", "report.json"}) {
    ASSERT_TRUE(std::filesystem::exists(da / f)) << f;
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
}

TEST(Pipeline, ReportCarriesConfigAndCounts) {
  RunConfig c;
  c.lambda = 12.5;
  c.seed = 77;
  const StitchResult r = run(occlusion_scene(), c);
  const auto j = nlohmann::json::parse(stitch_report_json(r, c));
  EXPECT_EQ(j["config"]["lambda"], "12.5");
  EXPECT_EQ(j["config"]["seed"], "77");
  EXPECT_EQ(j["matches"]["input"], occlusion_scene().matches.size());
  EXPECT_EQ(j["models"].size(), r.models.models.size());
  EXPECT_EQ(j["metrics"]["lpips"], "not computed");
  EXPECT_TRUE(j["flags"]["fundamental_filter_applied"].get<bool>());
  EXPECT_FALSE(j["flags"]["fallback_single_homography"].get<bool>());
  const auto& e = j["energy"];
  EXPECT_NEAR(e["total"].get<double>(),
              e["data"].get<double>() + e["smooth"].get<double>() + e["label_cost"].get<double>(),
              1e-9);
}

TEST(Pipeline, EnergyHistoryIsMonotone) {
  const StitchResult r = run(generate(preset_three_plane(2)), RunConfig{});
  ASSERT_FALSE(r.energy_history.empty());
  for (std::size_t i = 1; i < r.energy_history.size(); ++i) {
    EXPECT_LE(r.energy_history[i], r.energy_history[i - 1] + 1e-9);
  }
  EXPECT_NEAR(r.energy_history.back(), r.energy.total, 1e-9);
}

TEST(Pipeline, OutOfBoundsMatchesAreDropped) {
  Scene s = occlusion_scene();
  s.matches.push_back({{-5, 10}, {0, 10}});
  s.matches.push_back({{640, 10}, {600, 10}});
  const StitchResult r = run(s, RunConfig{});
  EXPECT_EQ(r.input_matches, s.matches.size());
  EXPECT_EQ(r.dropped_matches, 2u);
}

TEST(Pipeline, FitFailureFallsBackToTheGlobalHomography) {
  // Noisy matches and a tiny inlier threshold leave RANSAC without support.
  SceneSpec spec = preset_two_plane_occlusion(4);
  spec.noise_sigma = 0.5;
  const Scene s = generate(spec);
  RunConfig c;
  c.ransac_threshold = 1e-4;
  const StitchResult r = run(s, c);
  EXPECT_TRUE(r.fallback_single_homography);
  ASSERT_EQ(r.models.models.size(), 1u);
  EXPECT_EQ(r.models.models[0].matrix(), r.global_h.matrix());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Pipeline, SingleHomographyAblationUsesOneModel) {
  RunConfig c;
  apply_ablation(c, "single-homography");
  const StitchResult r = run(occlusion_scene(), c);
  EXPECT_FALSE(r.fallback_single_homography);
  ASSERT_EQ(r.models.models.size(), 1u);
  for (const auto& [id, label] : r.labeling.content_label) EXPECT_EQ(label, 1);
  const StitchResult ours = run(occlusion_scene(), RunConfig{});
  ASSERT_TRUE(r.metrics && ours.metrics);
  EXPECT_LT(r.metrics->psnr, ours.metrics->psnr);
}

TEST(Pipeline, DisjointImagesHaveNoOverlap) {
  Scene s = occlusion_scene();
  for (auto& m : s.matches) m.ref_pt.x += 1000;  // H_g maps the target past the reference
  try {
    run(s, RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyOverlap);
  }
}

TEST(Pipeline, MismatchedLabelMapIsRejected) {
  const Scene& s = occlusion_scene();
  try {
    stitch(s.target, s.reference, testing::uniform_labels(10, 10, 1), s.matches, RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

}  // namespace
}  // namespace parastitch
