#include <map>
#include <queue>
#include <set>

#include <gtest/gtest.h>

#include "parastitch/error.hpp"
#include "parastitch/png_io.hpp"
#include "parastitch/segmentation.hpp"
#include "parastitch/synthscene.hpp"
#include "support.hpp"

namespace parastitch {
namespace {

using testing::scratch_dir;
using testing::uniform_labels;

// Number of 4-connected components of pixels sharing a raw id (zeros
// included), by breadth-first flood fill.
std::size_t flood_fill_components(const LabelMap& m) {
  std::vector<bool> seen(m.labels.size(), false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < m.labels.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::queue<std::size_t> todo;
    todo.push(s);
    seen[s] = true;
    while (!todo.empty()) {
      const std::size_t i = todo.front();
      todo.pop();
      const int x = static_cast<int>(i % m.width);
      const int y = static_cast<int>(i / m.width);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= m.width || ny[k] >= m.height) continue;
        const std::size_t j = static_cast<std::size_t>(ny[k]) * m.width + nx[k];
        if (!seen[j] && m.labels[j] == m.labels[s]) {
          seen[j] = true;
          todo.push(j);
        }
      }
    }
  }
  return count;
}

void expect_partition(const ContentPartition& p) {
  std::size_t total = 0;
  std::vector<std::uint32_t> rebuilt(p.pixel_to_content().size(), 0);
  for (const auto& c : p.contents()) {
    EXPECT_FALSE(c.pixels.empty());
    total += c.area();
    for (auto i : c.pixels) {
      EXPECT_EQ(rebuilt[i], 0u) << "pixel in two contents";
      rebuilt[i] = c.id;
    }
  }
  EXPECT_EQ(total, static_cast<std::size_t>(p.width()) * p.height());
  EXPECT_EQ(rebuilt, p.pixel_to_content());
}

TEST(LabelMapFile, SingleIdRaster) {
  const auto dir = scratch_dir("labelmap_single");
  save_label_map(dir / "l.png", uniform_labels(4, 4, 7));
  const LabelMap m = load_label_map(dir / "l.png", 4, 4);
  EXPECT_EQ(std::set<std::uint32_t>(m.labels.begin(), m.labels.end()),
            std::set<std::uint32_t>{7});
}

TEST(LabelMapFile, WrongSizeIsDimensionMismatch) {
  const auto dir = scratch_dir("labelmap_size");
  save_label_map(dir / "l.png", uniform_labels(4, 4, 1));
  try {
    load_label_map(dir / "l.png", 5, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(LabelMapFile, GarbageIsDecodeError) {
  const auto dir = scratch_dir("labelmap_garbage");
  std::ofstream(dir / "l.png") << "not a png";
  try {
    load_label_map(dir / "l.png", 4, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDecodeError);
  }
}

TEST(LabelMapFile, SyntheticMapRoundTrips) {
  const Scene scene = generate(preset_three_plane(2));
  const auto dir = scratch_dir("labelmap_roundtrip");
  save_label_map(dir / "l.png", scene.labels);
  EXPECT_EQ(load_label_map(dir / "l.png", scene.labels.width, scene.labels.height),
            scene.labels);
}

TEST(Normalize, RemapsByFirstAppearance) {
  LabelMap m = uniform_labels(10, 10, 9);
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 5; ++y) m.labels[y * 10 + x] = 3;
  }
  const auto p = normalize_partition(m, 0);
  ASSERT_EQ(p.count(), 2u);
  EXPECT_EQ(p.content_at(0, 0), 1u);  // raw 3
  EXPECT_EQ(p.content_at(0, 9), 2u);  // raw 9
  expect_partition(p);
}

TEST(Normalize, AllZerosIsOneContent) {
  const auto p = normalize_partition(uniform_labels(12, 8, 0));
  EXPECT_EQ(p.count(), 1u);
  expect_partition(p);
}

TEST(Normalize, ZeroRegionsSplitIntoComponents) {
  // Two labeled squares on a zero background, split top to bottom by a
  // labeled bar.
  LabelMap m = uniform_labels(20, 20, 0);
  auto paint = [&](int x0, int y0, int x1, int y1, std::uint32_t id) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.labels[y * 20 + x] = id;
  };
  paint(9, 0, 10, 19, 5);
  paint(2, 2, 5, 5, 6);
  paint(13, 13, 16, 16, 7);
  const std::size_t oracle = flood_fill_components(m);
  ASSERT_EQ(oracle, 5u);
  const auto p = normalize_partition(m, 0);
  EXPECT_EQ(p.count(), oracle);
  expect_partition(p);
}

TEST(Normalize, SmallContentsMergeIntoLongestBoundaryNeighbor) {
  // A 3x3 island of id 2 on the border between id 1 (left, 5 shared edges)
  // and id 3 (right, fewer shared edges).
  LabelMap m = uniform_labels(20, 20, 1);
  for (int y = 0; y < 20; ++y)
    for (int x = 12; x < 20; ++x) m.labels[y * 20 + x] = 3;
  for (int y = 8; y < 11; ++y)
    for (int x = 10; x < 13; ++x) m.labels[y * 20 + x] = 2;
  const auto p = normalize_partition(m, 64);
  EXPECT_EQ(p.count(), 2u);
  EXPECT_EQ(p.content_at(11, 9), p.content_at(0, 0));
  expect_partition(p);
}

TEST(Normalize, RandomMapsAreDeterministicPartitions) {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    LabelMap m = uniform_labels(40, 30, 0);
    for (int r = 0; r < 8; ++r) {
      const int x0 = static_cast<int>(rng.index(35));
      const int y0 = static_cast<int>(rng.index(25));
      const auto id = static_cast<std::uint32_t>(rng.index(5));
      for (int y = y0; y < y0 + 6; ++y)
        for (int x = x0; x < x0 + 6; ++x) m.labels[y * 40 + x] = id;
    }
    const auto a = normalize_partition(m, 10);
    const auto b = normalize_partition(m, 10);
    expect_partition(a);
    EXPECT_EQ(a.pixel_to_content(), b.pixel_to_content());
    for (const auto& c : a.contents()) EXPECT_GE(c.area(), 10u);
  }
}

TEST(Overlap, IdentityCoversEverything) {
  const auto p = normalize_partition(uniform_labels(16, 12, 0));
  const auto o = compute_overlap(p, Homography::identity(), 16, 12);
  EXPECT_EQ(o.overlap_pixel_count(), 16u * 12u);
  ASSERT_EQ(o.overlap_contents.size(), 1u);
  EXPECT_EQ(o.overlap_contents[0].pixels, p.content(1).pixels);
}

TEST(Overlap, FullWidthShiftIsEmpty) {
  const auto p = normalize_partition(uniform_labels(16, 12, 0));
  try {
    compute_overlap(p, Homography::translation(16, 0), 16, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyOverlap);
  }
}

TEST(Overlap, HalfWidthShiftKeepsLeftHalf) {
  const auto p = normalize_partition(uniform_labels(16, 12, 0));
  const auto o = compute_overlap(p, Homography::translation(8, 0), 16, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(o.in_overlap(x, y), x < 8);
}

TEST(Overlap, MaskAgreesWithPerPixelMapping) {
  Rng rng(6);
  const auto p = normalize_partition(uniform_labels(64, 48, 0));
  for (int t = 0; t < 5; ++t) {
    Mat3 m = Mat3::Identity();
    m(0, 2) = rng.uniform(-30, 30);
    m(1, 2) = rng.uniform(-20, 20);
    m(0, 1) = rng.uniform(-0.2, 0.2);
    m(2, 0) = rng.uniform(-2e-3, 2e-3);
    const Homography h = Homography::from_matrix(m);
    const auto o = compute_overlap(p, h, 50, 40);
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 64; ++x) {
        const auto q = h.apply({static_cast<double>(x), static_cast<double>(y)});
        const bool inside = q && q->x >= 0 && q->y >= 0 && q->x < 50 && q->y < 40;
        EXPECT_EQ(o.in_overlap(x, y), inside);
      }
    }
  }
}

TEST(Overlap, OverlapContentsAreIntersections) {
  const Scene scene = generate(preset_two_plane_occlusion(1));
  const auto p = normalize_partition(scene.labels);
  const auto o = compute_overlap(p, scene.gt.homographies[1], 640, 480);
  for (const auto& oc : o.overlap_contents) {
    std::vector<std::uint32_t> expected;
    for (auto i : p.content(oc.content_id).pixels) {
      if (o.mask[i]) expected.push_back(i);
    }
    EXPECT_EQ(oc.pixels, expected);
  }
}

TEST(PointsToContents, FloorConvention) {
  LabelMap m = uniform_labels(20, 10, 1);
  for (int x = 10; x < 20; ++x)
    for (int y = 3; y < 10; ++y) m.labels[y * 20 + x] = 2;
  const auto p = normalize_partition(m, 0);
  const MatchSet matches = {{{10.7, 3.2}, {0, 0}}, {{10.0, 3.0}, {0, 0}},
                            {{9.999, 3.0}, {0, 0}}};
  const auto ids = assign_points_to_contents(p, matches);
  EXPECT_EQ(ids[0], p.content_at(10, 3));
  EXPECT_EQ(ids[1], p.content_at(10, 3));
  EXPECT_EQ(ids[2], p.content_at(9, 3));
}

TEST(PointsToContents, OutOfBoundsDropped) {
  const auto p = normalize_partition(uniform_labels(20, 10, 1));
  const MatchSet matches = {{{1, 1}, {0, 0}}, {{20.0, 1}, {0, 0}}, {{-0.1, 2}, {0, 0}}};
  std::vector<std::size_t> dropped;
  const auto ids = assign_points_to_contents(p, matches, &dropped);
  EXPECT_EQ(dropped, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(ids[0], 1u);
  EXPECT_EQ(ids[1], 0u);
}

TEST(PointsToContents, SyntheticPlaneMatchesLandInTheirContent) {
  const Scene scene = generate(preset_two_plane_occlusion(3));
  const auto p = normalize_partition(scene.labels);
  const auto ids = assign_points_to_contents(p, scene.matches);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& pt = scene.matches[i].target_pt;
    const int plane = scene.gt.target_plane[static_cast<std::size_t>(pt.y) * 640 +
                                            static_cast<std::size_t>(pt.x)];
    EXPECT_EQ(plane, scene.gt.match_plane[i]);
    EXPECT_EQ(ids[i], p.content_at(static_cast<int>(pt.x), static_cast<int>(pt.y)));
  }
}

}  // namespace
}  // namespace parastitch
