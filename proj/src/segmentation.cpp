#include "parastitch/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "parastitch/error.hpp"
#include "parastitch/png_io.hpp"

namespace parastitch {

LabelMap load_label_map(const std::filesystem::path& path, int expected_width,
                        int expected_height) {
  const Gray16Raster raster = read_png_gray16(path);
  if (raster.width != expected_width || raster.height != expected_height) {
    fail(ErrorCode::kDimensionMismatch,
         "label map is " + std::to_string(raster.width) + "x" +
             std::to_string(raster.height) + ", expected " +
             std::to_string(expected_width) + "x" +
             std::to_string(expected_height));
  }
  LabelMap map{raster.width, raster.height,
               std::vector<std::uint32_t>(raster.values.begin(),
                                          raster.values.end())};
  return map;
}

void save_label_map(const std::filesystem::path& path, const LabelMap& map) {
  Gray16Raster raster{map.width, map.height, {}};
  raster.values.reserve(map.labels.size());
  for (auto v : map.labels) {
    require(v <= 0xffff, ErrorCode::kPreconditionViolation,
            "label id does not fit in 16 bits");
    raster.values.push_back(static_cast<std::uint16_t>(v));
  }
  write_png_gray16(path, raster);
}

ContentPartition::ContentPartition(int width, int height,
                                   std::vector<std::uint32_t> pixel_to_content)
    : width_(width),
      height_(height),
      pixel_to_content_(std::move(pixel_to_content)) {
  std::uint32_t max_id = 0;
  for (auto id : pixel_to_content_) {
    require(id != 0, ErrorCode::kPreconditionViolation,
            "partition leaves a pixel unassigned");
    max_id = std::max(max_id, id);
  }
  contents_.resize(max_id);
  for (std::uint32_t k = 0; k < max_id; ++k) {
    contents_[k].id = k + 1;
    contents_[k].bbox = {width, height, -1, -1};
  }
  for (std::size_t i = 0; i < pixel_to_content_.size(); ++i) {
    auto& c = contents_[pixel_to_content_[i] - 1];
    c.pixels.push_back(static_cast<std::uint32_t>(i));
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    c.bbox.x0 = std::min(c.bbox.x0, x);
    c.bbox.y0 = std::min(c.bbox.y0, y);
    c.bbox.x1 = std::max(c.bbox.x1, x);
    c.bbox.y1 = std::max(c.bbox.y1, y);
  }
  for (const auto& c : contents_) {
    require(!c.pixels.empty(), ErrorCode::kPreconditionViolation,
            "content ids must be contiguous");
  }
}

Point2 ContentPartition::centroid(std::uint32_t id) const {
  const auto& c = content(id);
  double sx = 0.0;
  double sy = 0.0;
  for (auto i : c.pixels) {
    sx += static_cast<double>(i % width_);
    sy += static_cast<double>(i / width_);
  }
  const double n = static_cast<double>(c.pixels.size());
  return {sx / n, sy / n};
}

ContentPartition normalize_partition(const LabelMap& raw,
                                     std::size_t min_content_area) {
  require(raw.width > 0 && raw.height > 0 &&
              raw.labels.size() ==
                  static_cast<std::size_t>(raw.width) * raw.height,
          ErrorCode::kPreconditionViolation, "invalid label map");
  const int w = raw.width;
  const int h = raw.height;
  const std::size_t n = raw.labels.size();

  // Regions in first-appearance order: one per raw id, one per 4-connected
  // component of unassigned pixels.
  constexpr std::uint32_t kUnset = UINT32_MAX;
  std::vector<std::uint32_t> region(n, kUnset);
  std::unordered_map<std::uint32_t, std::uint32_t> raw_to_region;
  std::uint32_t regions = 0;
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (region[i] != kUnset) continue;
    const std::uint32_t raw_id = raw.labels[i];
    if (raw_id != 0) {
      auto [it, inserted] = raw_to_region.emplace(raw_id, regions);
      if (inserted) ++regions;
      region[i] = it->second;
      continue;
    }
    const std::uint32_t r = regions++;
    region[i] = r;
    stack.assign(1, static_cast<std::uint32_t>(i));
    while (!stack.empty()) {
      const std::uint32_t j = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(j % w);
      const int y = static_cast<int>(j / w);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (raw.labels[q] == 0 && region[q] == kUnset) {
          region[q] = r;
          stack.push_back(static_cast<std::uint32_t>(q));
        }
      }
    }
  }

  // Small-region merging on the region adjacency graph. Boundary length is
  // the number of 4-adjacent pixel pairs.
  std::vector<std::size_t> area(regions, 0);
  for (auto r : region) ++area[r];
  std::vector<std::map<std::uint32_t, std::size_t>> adjacency(regions);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto a = region[static_cast<std::size_t>(y) * w + x];
      if (x + 1 < w) {
        const auto b = region[static_cast<std::size_t>(y) * w + x + 1];
        if (a != b) {
          ++adjacency[a][b];
          ++adjacency[b][a];
        }
      }
      if (y + 1 < h) {
        const auto b = region[static_cast<std::size_t>(y + 1) * w + x];
        if (a != b) {
          ++adjacency[a][b];
          ++adjacency[b][a];
        }
      }
    }
  }
  std::vector<std::uint32_t> parent(regions);
  std::iota(parent.begin(), parent.end(), 0u);
  std::set<std::pair<std::size_t, std::uint32_t>> small;
  for (std::uint32_t r = 0; r < regions; ++r) {
    if (area[r] < min_content_area) small.emplace(area[r], r);
  }
  while (!small.empty()) {
    const auto [a, r] = *small.begin();
    small.erase(small.begin());
    if (adjacency[r].empty()) continue;  // sole region, nothing to merge into
    std::uint32_t into = 0;
    std::size_t best = 0;
    for (const auto& [nb, len] : adjacency[r]) {
      if (len > best) {  // map order breaks ties toward the earlier region
        best = len;
        into = nb;
      }
    }
    if (area[into] < min_content_area) small.erase({area[into], into});
    area[into] += area[r];
    area[r] = 0;
    parent[r] = into;
    for (const auto& [nb, len] : adjacency[r]) {
      if (nb == into) continue;
      adjacency[into][nb] += len;
      auto& back = adjacency[nb];
      back.erase(r);
      back[into] += len;
    }
    adjacency[into].erase(r);
    adjacency[r].clear();
    if (area[into] < min_content_area) small.emplace(area[into], into);
  }
  auto find = [&](std::uint32_t r) {
    while (parent[r] != r) r = parent[r];
    return r;
  };

  std::vector<std::uint32_t> final_id(regions, 0);
  std::uint32_t next = 1;
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(region[i]);
    if (final_id[root] == 0) final_id[root] = next++;
    out[i] = final_id[root];
  }
  return ContentPartition(w, h, std::move(out));
}

bool OverlapMask::in_overlap(Point2 p) const {
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (!(fx >= 0 && fy >= 0 && fx < width && fy < height)) return false;
  return in_overlap(static_cast<int>(fx), static_cast<int>(fy));
}

std::size_t OverlapMask::overlap_pixel_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

OverlapMask compute_overlap(const ContentPartition& partition,
                            const Homography& h_g, int ref_width,
                            int ref_height) {
  OverlapMask out;
  out.width = partition.width();
  out.height = partition.height();
  out.ref_width = ref_width;
  out.ref_height = ref_height;
  out.mask.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  // Round-off in a fitted H_g must not drop a border row of an exact overlap.
  constexpr double kSlack = 1e-9;
  std::size_t hits = 0;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto q = h_g.apply({static_cast<double>(x), static_cast<double>(y)});
      if (q && q->x >= -kSlack && q->y >= -kSlack && q->x < ref_width - kSlack &&
          q->y < ref_height - kSlack) {
        out.mask[static_cast<std::size_t>(y) * out.width + x] = 1;
        ++hits;
      }
    }
  }
  require(hits > 0, ErrorCode::kEmptyOverlap,
          "no target pixel maps inside the reference image");
  for (const auto& c : partition.contents()) {
    OverlapContent oc{c.id, {}};
    for (auto i : c.pixels) {
      if (out.mask[i]) oc.pixels.push_back(i);
    }
    if (!oc.pixels.empty()) out.overlap_contents.push_back(std::move(oc));
  }
  return out;
}

std::vector<std::uint32_t> assign_points_to_contents(
    const ContentPartition& partition, std::span<const FeatureMatch> matches,
    std::vector<std::size_t>* dropped) {
  std::vector<std::uint32_t> ids(matches.size(), 0);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double fx = std::floor(matches[i].target_pt.x);
    const double fy = std::floor(matches[i].target_pt.y);
    if (fx >= 0 && fy >= 0 && fx < partition.width() &&
        fy < partition.height()) {
      ids[i] = partition.content_at(static_cast<int>(fx), static_cast<int>(fy));
    } else {
      std::clog << "warning: match " << i
                << " lies outside the target image and is dropped\n";
      if (dropped) dropped->push_back(i);
    }
  }
  return ids;
}

}  // namespace parastitch
