// Runs the parastitch binary and checks exit codes and outputs.
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "parastitch/match_io.hpp"
#include "parastitch/metrics.hpp"
#include "parastitch/pipeline.hpp"
#include "parastitch/png_io.hpp"
#include "parastitch/synthscene.hpp"
#include "support.hpp"

namespace parastitch {
namespace {

namespace fs = std::filesystem;
using testing::scratch_dir;
using testing::slurp;

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(PARASTITCH_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string stitch_args(const fs::path& scene, const fs::path& matches, const fs::path& out) {
  return "stitch --target " + (scene / "target.png").string() + " --reference " +
         (scene / "reference.png").string() + " --labels " + (scene / "labels.png").string() +
         " --matches " + matches.string() + " --out-dir " + out.string();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

TEST(CliSynth, WritesSixFilesDeterministically) {
  const auto dir = scratch_dir("cli_synth");
  ASSERT_EQ(cli("synth --seed 3 --out-dir " + (dir / "a").string(), dir / "log"), 0);
  ASSERT_EQ(cli("synth --seed 3 --out-dir " + (dir / "b").string(), dir / "log"), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    ++files;
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / name)) << name;
  }
  EXPECT_EQ(files, 6u);
  ASSERT_EQ(cli("synth --seed 4 --out-dir " + (dir / "c").string(), dir / "log"), 0);
  EXPECT_NE(slurp(dir / "a" / "target.png"), slurp(dir / "c" / "target.png"));
}

TEST(CliSynth, InvalidSpecExitsTwoWithMessage) {
  const auto dir = scratch_dir("cli_synth_bad");
  std::ofstream(dir / "spec.json") << R"({"preset": "two_plane_occlusion", "outlier_fraction": 2})";
  EXPECT_EQ(cli("synth --spec " + (dir / "spec.json").string() + " --out-dir " +
                    (dir / "out").string(),
                dir / "log"),
            2);
  EXPECT_NE(slurp(dir / "log").find("outlier"), std::string::npos) << slurp(dir / "log");
}

TEST(CliStitch, SyntheticSceneAndLibraryParity) {
  const auto dir = scratch_dir("cli_stitch");
  const auto scene = dir / "scene";
  ASSERT_EQ(cli("synth --preset parallax_pair --seed 1 --out-dir " + scene.string(), dir / "log"),
            0);
  ASSERT_EQ(cli(stitch_args(scene, scene / "matches.txt", dir / "out"), dir / "log"), 0)
      << slurp(dir / "log");
  const auto report = read_json(dir / "out" / "report.json");
  EXPECT_GE(report["metrics"]["psnr"].get<double>(), 30.0);

  // The same inputs through the library give the same bytes.
  const Gray16Raster raster = read_png_gray16(scene / "labels.png");
  const LabelMap labels{raster.width, raster.height,
                        std::vector<std::uint32_t>(raster.values.begin(), raster.values.end())};
  const RunConfig config;
  const StitchResult r = stitch(read_png(scene / "target.png"), read_png(scene / "reference.png"),
                                labels, read_matches(scene / "matches.txt"), config);
  EXPECT_EQ(read_png(dir / "out" / "panorama.png"), r.panorama);
  EXPECT_EQ(slurp(dir / "out" / "report.json"), stitch_report_json(r, config) + "\n");

  // eval on the written warps reproduces the library metrics bitwise.
  ASSERT_EQ(cli("eval " + (dir / "out" / "warped_target.png").string() + " " +
                    (dir / "out" / "warped_reference.png").string() + " --json " +
                    (dir / "eval.json").string(),
                dir / "log"),
            0);
  const auto ev = read_json(dir / "eval.json");
  ASSERT_TRUE(r.metrics);
  EXPECT_EQ(ev["psnr"].get<double>(), r.metrics->psnr);
  EXPECT_EQ(ev["ssim"].get<double>(), r.metrics->ssim);
  EXPECT_EQ(ev["evaluated_pixels"].get<std::size_t>(), r.metrics->evaluated_pixels);
  EXPECT_EQ(ev["lpips"], "not computed");
  EXPECT_EQ(slurp(dir / "log"), summary_line(*r.metrics) + "\n");
}

TEST(CliStitch, ErrorClassesMapToExitCodes) {
  const auto dir = scratch_dir("cli_stitch_errors");
  const auto scene = dir / "scene";
  ASSERT_EQ(cli("synth --seed 2 --out-dir " + scene.string(), dir / "log"), 0);
  EXPECT_EQ(cli(stitch_args(scene, dir / "missing.txt", dir / "out"), dir / "log"), 2);

  MatchSet shifted = read_matches(scene / "matches.txt");
  for (auto& m : shifted) m.ref_pt.x += 1000;
  write_matches(dir / "disjoint.txt", shifted);
  EXPECT_EQ(cli(stitch_args(scene, dir / "disjoint.txt", dir / "out"), dir / "log"), 4);

  std::ofstream(dir / "three.txt") << "1 1 2 2\n100 5 101 6\n7 300 8 301\n";
  EXPECT_EQ(cli(stitch_args(scene, dir / "three.txt", dir / "out"), dir / "log"), 3);

  EXPECT_EQ(cli(stitch_args(scene, scene / "matches.txt", dir / "out") + " --lambda -1",
                dir / "log"),
            2);
}

TEST(CliEval, IdenticalAndDisjointImages) {
  const auto dir = scratch_dir("cli_eval");
  Rng rng(8);
  const Image a = testing::make_image(32, 32, [&](int, int) {
    return Rgb{double(rng.index(256)), double(rng.index(256)), double(rng.index(256))};
  });
  write_png(dir / "a.png", a, true);
  ASSERT_EQ(cli("eval " + (dir / "a.png").string() + " " + (dir / "a.png").string(), dir / "log"),
            0);
  EXPECT_NE(slurp(dir / "log").find("psnr=99.0000 ssim=1.000000"), std::string::npos)
      << slurp(dir / "log");

  Image left = a, right = a;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) (x < 16 ? right : left).set_covered(x, y, false);
  write_png(dir / "l.png", left, true);
  write_png(dir / "r.png", right, true);
  EXPECT_EQ(cli("eval " + (dir / "l.png").string() + " " + (dir / "r.png").string(), dir / "log"),
            4);
}

TEST(CliFit, ModelCounts) {
  const auto dir = scratch_dir("cli_fit");
  SceneSpec single;
  single.planes.push_back({{0, 0, 1}, 5000.0, {}, std::nullopt});
  write_scene(generate(single), single, dir / "single");
  ASSERT_EQ(cli("fit --matches " + (dir / "single" / "matches.txt").string() + " --labels " +
                    (dir / "single" / "labels.png").string() + " --out " +
                    (dir / "single.json").string(),
                dir / "log"),
            0);
  EXPECT_EQ(read_json(dir / "single.json")["models"].size(), 1u);

  ASSERT_EQ(cli("synth --preset three_plane --out-dir " + (dir / "three").string(), dir / "log"),
            0);
  ASSERT_EQ(cli("fit --matches " + (dir / "three" / "matches.txt").string() + " --labels " +
                    (dir / "three" / "labels.png").string() + " --out " +
                    (dir / "three.json").string(),
                dir / "log"),
            0);
  const auto j = read_json(dir / "three.json");
  EXPECT_EQ(j["models"].size(), 3u);
  EXPECT_EQ(j["models"][0].size(), 9u);
  const auto history = j["energy_history"].get<std::vector<double>>();
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_LE(history[i], history[i - 1]);

  std::ofstream(dir / "three_matches.txt") << "1 1 2 2\n100 5 101 6\n7 300 8 301\n";
  EXPECT_EQ(cli("fit --matches " + (dir / "three_matches.txt").string() + " --labels " +
                    (dir / "single" / "labels.png").string(),
                dir / "log"),
            3);
}

}  // namespace
}  // namespace parastitch
