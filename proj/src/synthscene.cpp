#include "parastitch/synthscene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "parastitch/error.hpp"
#include "parastitch/match_io.hpp"
#include "parastitch/png_io.hpp"
#include "parastitch/random.hpp"

namespace parastitch {

namespace {

using Json = nlohmann::json;

constexpr int kMaxSceneSide = 8192;
constexpr int kMaxAttempts = 10000;

Mat3 intrinsics(double focal, int width, int height) {
  Mat3 k;
  k << focal, 0.0, width / 2.0, 0.0, focal, height / 2.0, 0.0, 0.0, 1.0;
  return k;
}

double lattice(std::uint64_t key, std::int64_t i, std::int64_t j) {
  std::uint64_t h = mix64(key ^ static_cast<std::uint64_t>(i));
  h = mix64(h ^ (static_cast<std::uint64_t>(j) * 0x9e3779b97f4a7c15ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t key, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double tx = fade(x - fx);
  const double ty = fade(y - fy);
  const double a = lattice(key, i, j);
  const double b = lattice(key, i + 1, j);
  const double c = lattice(key, i, j + 1);
  const double d = lattice(key, i + 1, j + 1);
  return (a + (b - a) * tx) * (1.0 - ty) + (c + (d - c) * tx) * ty;
}

double unit_hash(std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(mix64(mix64(a) ^ b) >> 11) * 0x1.0p-53;
}

bool in_footprint(const PlaneSpec& plane, Point2 p) {
  if (plane.footprint.empty()) return true;
  for (const auto& poly : plane.footprint) {
    if (point_in_polygon(poly, p)) return true;
  }
  return false;
}

struct Geometry {
  const SceneSpec& spec;
  std::vector<Homography> h;

  int target_plane(Point2 p) const {
    for (std::size_t k = 0; k < spec.planes.size(); ++k) {
      if (in_footprint(spec.planes[k], p)) return static_cast<int>(k);
    }
    return -1;
  }

  int reference_plane(Point2 q, Point2* u_out = nullptr) const {
    for (std::size_t k = 0; k < spec.planes.size(); ++k) {
      const auto u = h[k].apply_inverse(q);
      if (u && in_footprint(spec.planes[k], *u)) {
        if (u_out) *u_out = *u;
        return static_cast<int>(k);
      }
    }
    return -1;
  }

  bool in_reference(Point2 q) const {
    return q.x >= 0.0 && q.y >= 0.0 && q.x <= spec.ref_width - 1 &&
           q.y <= spec.ref_height - 1;
  }
};

Json point_json(Point2 p) { return Json::array({p.x, p.y}); }

}  // namespace

bool point_in_polygon(const Polygon& poly, Point2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[i];
    const Point2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

Homography plane_homography(const SceneSpec& spec, const PlaneSpec& plane) {
  const double c = std::cos(spec.roll);
  const double s = std::sin(spec.roll);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  const Eigen::Vector3d t(spec.baseline[0], spec.baseline[1], spec.baseline[2]);
  const Eigen::Vector3d n = plane.normal.normalized();
  const Mat3 kt = intrinsics(spec.focal, spec.width, spec.height);
  const Mat3 kr = intrinsics(spec.focal, spec.ref_width, spec.ref_height);
  return Homography::from_matrix(kr * (r + t * n.transpose() / plane.depth) *
                                 kt.inverse());
}

Rgb plane_texture(std::uint64_t seed, std::size_t index, Point2 u) {
  static constexpr double kSpacing[4] = {64.0, 32.0, 16.0, 8.0};
  static constexpr double kAmplitude[4] = {1.0, 0.5, 0.25, 0.125};
  const std::uint64_t plane_key = mix64(seed ^ mix64(index + 1));
  const double period = 48.0;
  const double phase_x = period * unit_hash(plane_key, 101);
  const double phase_y = period * unit_hash(plane_key, 102);
  const double checker =
      std::tanh(2.5 * std::sin(2.0 * std::numbers::pi * (u.x + phase_x) / period) *
                std::sin(2.0 * std::numbers::pi * (u.y + phase_y) / period));
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    double n = 0.0;
    double norm = 0.0;
    for (int o = 0; o < 4; ++o) {
      const std::uint64_t key = mix64(plane_key ^ static_cast<std::uint64_t>(c * 8 + o + 1));
      n += kAmplitude[o] * value_noise(key, u.x / kSpacing[o], u.y / kSpacing[o]);
      norm += kAmplitude[o];
    }
    n /= norm;
    const double base = 100.0 * (unit_hash(plane_key, 200 + c) - 0.5);
    out[c] = std::clamp(128.0 + base + 220.0 * (n - 0.5) + 30.0 * checker, 0.0, 255.0);
  }
  return out;
}

void validate_scene_spec(const SceneSpec& spec) {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorCode::kInvalidSpec, what);
  };
  check(spec.width > 0 && spec.height > 0 && spec.width <= kMaxSceneSide &&
            spec.height <= kMaxSceneSide,
        "target dimensions out of range");
  check(spec.ref_width > 0 && spec.ref_height > 0 &&
            spec.ref_width <= kMaxSceneSide && spec.ref_height <= kMaxSceneSide,
        "reference dimensions out of range");
  check(spec.focal > 0.0 && std::isfinite(spec.focal), "focal must be positive");
  check(std::isfinite(spec.roll), "roll must be finite");
  for (double b : spec.baseline) check(std::isfinite(b), "baseline must be finite");
  check(!spec.planes.empty(), "scene needs at least one plane");
  check(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0,
        "outlier_fraction must lie in [0, 1)");
  check(spec.noise_sigma >= 0.0 && std::isfinite(spec.noise_sigma),
        "noise_sigma must be nonnegative");
  for (const auto& p : spec.planes) {
    check(p.depth > 0.0 && std::isfinite(p.depth), "plane depth must be positive");
    check(p.normal.allFinite() && p.normal.norm() > 0.0, "plane normal is zero");
    for (const auto& poly : p.footprint) {
      check(poly.size() >= 3, "footprint polygons need 3 vertices");
    }
    try {
      plane_homography(spec, p);
    } catch (const Error&) {
      fail(ErrorCode::kInvalidSpec, "plane homography is singular");
    }
  }
}

Scene generate(const SceneSpec& spec) {
  validate_scene_spec(spec);
  Geometry geo{spec, {}};
  for (const auto& p : spec.planes) geo.h.push_back(plane_homography(spec, p));

  Scene scene;
  scene.gt.homographies = geo.h;
  const int w = spec.width;
  const int h = spec.height;
  scene.target = Image(w, h, true);
  scene.labels = {w, h, std::vector<std::uint32_t>(static_cast<std::size_t>(w) * h)};
  auto& gt = scene.gt;
  gt.target_plane.assign(static_cast<std::size_t>(w) * h, -1);
  gt.correspondence.assign(static_cast<std::size_t>(w) * h, {});
  gt.visibility.assign(static_cast<std::size_t>(w) * h, Visibility::kOutside);

  scene.reference = Image(spec.ref_width, spec.ref_height, false);
  gt.reference_plane.assign(static_cast<std::size_t>(spec.ref_width) * spec.ref_height, -1);
  for (int y = 0; y < spec.ref_height; ++y) {
    for (int x = 0; x < spec.ref_width; ++x) {
      Point2 u;
      const int k = geo.reference_plane({static_cast<double>(x), static_cast<double>(y)}, &u);
      if (k < 0) continue;
      gt.reference_plane[scene.reference.index(x, y)] = k;
      scene.reference.set(x, y, plane_texture(spec.seed, k, u));
      scene.reference.set_covered(x, y, true);
    }
  }

  std::vector<std::vector<std::uint32_t>> candidates(spec.planes.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p{static_cast<double>(x), static_cast<double>(y)};
      const int k = geo.target_plane(p);
      require(k >= 0, ErrorCode::kInvalidSpec, "footprints leave target pixels uncovered");
      const auto i = scene.target.index(x, y);
      gt.target_plane[i] = k;
      scene.labels.labels[i] = static_cast<std::uint32_t>(k + 1);
      scene.target.set(x, y, plane_texture(spec.seed, k, p));
      const auto q = geo.h[k].apply(p);
      if (!q) continue;
      gt.correspondence[i] = *q;
      const double qx = std::round(q->x);
      const double qy = std::round(q->y);
      if (qx < 0 || qy < 0 || qx >= spec.ref_width || qy >= spec.ref_height) continue;
      const int visible = gt.reference_plane[scene.reference.index(
          static_cast<int>(qx), static_cast<int>(qy))];
      gt.visibility[i] = visible == k ? Visibility::kVisible : Visibility::kOccluded;
      if (visible == k) candidates[k].push_back(static_cast<std::uint32_t>(i));
    }
  }

  Rng rng(spec.seed);
  const double sigma = spec.noise_sigma;
  for (std::size_t k = 0; k < spec.planes.size(); ++k) {
    const std::size_t wanted =
        spec.planes[k].match_count.value_or(spec.matches_per_plane);
    if (wanted == 0) continue;
    require(!candidates[k].empty(), ErrorCode::kInvalidSpec,
            "plane " + std::to_string(k) + " has no pixel visible in both views");
    for (std::size_t m = 0; m < wanted; ++m) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        const auto i = candidates[k][rng.index(candidates[k].size())];
        // Stay inside the cell [x, x + 1) so the label map agrees with the plane.
        const Point2 p{static_cast<double>(i % w) + rng.uniform(),
                       static_cast<double>(i / w) + rng.uniform()};
        if (p.x < 0 || p.y < 0 || p.x > w - 1 || p.y > h - 1) continue;
        if (geo.target_plane(p) != static_cast<int>(k)) continue;
        const auto q = geo.h[k].apply(p);
        if (!q || !geo.in_reference(*q) ||
            geo.reference_plane(*q) != static_cast<int>(k)) {
          continue;
        }
        for (int n = 0; n < kMaxAttempts; ++n) {
          Point2 noisy = *q;
          if (sigma > 0.0) {
            noisy.x += sigma * rng.normal();
            noisy.y += sigma * rng.normal();
          }
          if (!geo.in_reference(noisy)) continue;
          if (symmetric_transfer_error(geo.h[k], {p, noisy}) >= 3.0 * sigma + 1e-9) {
            continue;
          }
          scene.matches.push_back({p, noisy});
          gt.match_plane.push_back(static_cast<int>(k));
          gt.is_outlier.push_back(0);
          gt.exact_ref.push_back(*q);
          placed = true;
          break;
        }
      }
      require(placed, ErrorCode::kInvalidSpec,
              "could not place a match on plane " + std::to_string(k));
    }
  }
  const auto outliers = static_cast<std::size_t>(
      std::llround(spec.outlier_fraction * static_cast<double>(scene.matches.size())));
  for (std::size_t o = 0; o < outliers; ++o) {
    const Point2 p{rng.uniform(0.0, w - 1), rng.uniform(0.0, h - 1)};
    const Point2 q{rng.uniform(0.0, spec.ref_width - 1),
                   rng.uniform(0.0, spec.ref_height - 1)};
    scene.matches.push_back({p, q});
    gt.match_plane.push_back(-1);
    gt.is_outlier.push_back(1);
    gt.exact_ref.push_back(q);
  }
  return scene;
}

namespace {

Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace

SceneSpec preset_two_plane_occlusion(std::uint64_t seed) {
  // Shifts: background -200 px, foreground -250 px.
  SceneSpec s;
  s.seed = seed;
  s.planes.push_back({{0, 0, 1}, 1600.0, {rect(379.5, 119.5, 499.5, 359.5)}, std::nullopt});
  s.planes.push_back({{0, 0, 1}, 2000.0, {}, std::nullopt});
  return s;
}

SceneSpec preset_three_plane(std::uint64_t seed) {
  SceneSpec s;
  s.width = s.ref_width = 1000;
  s.height = s.ref_height = 750;
  s.seed = seed;
  s.outlier_fraction = 0.2;
  s.noise_sigma = 0.5;
  s.planes.push_back({{0, 0, 1}, 1100.0, {rect(719.5, 379.5, 899.5, 649.5)}, std::nullopt});
  s.planes.push_back({Eigen::Vector3d(0.15, 0.0, 1.0), 1500.0,
                      {rect(399.5, 99.5, 619.5, 419.5)}, std::nullopt});
  s.planes.push_back({{0, 0, 1}, 2000.0, {}, std::nullopt});
  return s;
}

SceneSpec preset_interleaved(std::uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  PlaneSpec front{{0, 0, 1}, 1600.0, {}, std::nullopt};
  for (int i = 0; i < 5; ++i) {
    const double x0 = 259.5 + 70.0 * i;
    front.footprint.push_back(rect(x0, 59.5, x0 + 35.0, 419.5));
  }
  s.planes.push_back(front);
  s.planes.push_back({{0, 0, 1}, 2000.0, {}, std::nullopt});
  return s;
}

SceneSpec preset_parallax_pair(std::uint64_t seed) {
  SceneSpec s;
  s.width = s.ref_width = 800;
  s.height = s.ref_height = 600;
  s.seed = seed;
  s.roll = 0.02;
  s.baseline = {-450.0, 20.0, 30.0};
  s.outlier_fraction = 0.1;
  s.noise_sigma = 0.5;
  s.planes.push_back({{0, 0, 1}, 1200.0, {rect(459.5, 299.5, 599.5, 539.5)}, 100});
  s.planes.push_back({Eigen::Vector3d(0.2, -0.1, 1.0), 1500.0,
                      {rect(279.5, 79.5, 439.5, 259.5)}, 100});
  s.planes.push_back({Eigen::Vector3d(-0.15, 0.05, 1.0), 2000.0, {}, 400});
  return s;
}

SceneSpec preset_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "two_plane_occlusion") return preset_two_plane_occlusion(seed);
  if (name == "three_plane") return preset_three_plane(seed);
  if (name == "interleaved") return preset_interleaved(seed);
  if (name == "parallax_pair") return preset_parallax_pair(seed);
  fail(ErrorCode::kInvalidSpec, "unknown preset '" + name + "'");
}

SceneSpec parse_scene_spec(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidSpec, std::string("malformed scene JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kInvalidSpec, "scene JSON must be an object");
  try {
    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    SceneSpec s = j.contains("preset")
                      ? preset_by_name(j.at("preset").get<std::string>(), seed)
                      : SceneSpec{};
    s.seed = seed;
    for (const auto& [key, v] : j.items()) {
      if (key == "preset" || key == "seed") continue;
      if (key == "width") s.width = v.get<int>();
      else if (key == "height") s.height = v.get<int>();
      else if (key == "ref_width") s.ref_width = v.get<int>();
      else if (key == "ref_height") s.ref_height = v.get<int>();
      else if (key == "focal") s.focal = v.get<double>();
      else if (key == "roll") s.roll = v.get<double>();
      else if (key == "baseline") s.baseline = v.get<std::array<double, 3>>();
      else if (key == "matches_per_plane") s.matches_per_plane = v.get<std::size_t>();
      else if (key == "outlier_fraction") s.outlier_fraction = v.get<double>();
      else if (key == "noise_sigma") s.noise_sigma = v.get<double>();
      else if (key == "planes") {
        s.planes.clear();
        for (const auto& pj : v) {
          PlaneSpec p;
          const auto n = pj.at("normal").get<std::array<double, 3>>();
          p.normal = {n[0], n[1], n[2]};
          p.depth = pj.at("depth").get<double>();
          if (pj.contains("match_count")) {
            p.match_count = pj.at("match_count").get<std::size_t>();
          }
          if (pj.contains("footprint")) {
            for (const auto& polyj : pj.at("footprint")) {
              Polygon poly;
              for (const auto& pt : polyj) {
                poly.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
              }
              p.footprint.push_back(std::move(poly));
            }
          }
          s.planes.push_back(std::move(p));
        }
      } else {
        fail(ErrorCode::kInvalidSpec, "unknown scene key '" + key + "'");
      }
    }
    validate_scene_spec(s);
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidSpec, std::string("bad scene field: ") + e.what());
  }
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

std::string scene_spec_to_json(const SceneSpec& s) {
  Json j;
  j["width"] = s.width;
  j["height"] = s.height;
  j["ref_width"] = s.ref_width;
  j["ref_height"] = s.ref_height;
  j["focal"] = s.focal;
  j["roll"] = s.roll;
  j["baseline"] = s.baseline;
  j["seed"] = s.seed;
  j["matches_per_plane"] = s.matches_per_plane;
  j["outlier_fraction"] = s.outlier_fraction;
  j["noise_sigma"] = s.noise_sigma;
  j["planes"] = Json::array();
  for (const auto& p : s.planes) {
    Json pj;
    pj["normal"] = {p.normal.x(), p.normal.y(), p.normal.z()};
    pj["depth"] = p.depth;
    if (p.match_count) pj["match_count"] = *p.match_count;
    pj["footprint"] = Json::array();
    for (const auto& poly : p.footprint) {
      Json polyj = Json::array();
      for (const auto& pt : poly) polyj.push_back(point_json(pt));
      pj["footprint"].push_back(polyj);
    }
    j["planes"].push_back(pj);
  }
  return j.dump(2);
}

void write_scene(const Scene& scene, const SceneSpec& spec,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIoError, "cannot create " + dir.string());
  write_png(dir / "target.png", scene.target, false);
  write_png(dir / "reference.png", scene.reference, true);
  write_matches(dir / "matches.txt", scene.matches);
  save_label_map(dir / "labels.png", scene.labels);
  Gray16Raster vis{scene.target.width(), scene.target.height(), {}};
  for (auto v : scene.gt.visibility) vis.values.push_back(static_cast<std::uint16_t>(v));
  write_png_gray16(dir / "gt_occlusion.png", vis);

  Json j;
  j["spec"] = Json::parse(scene_spec_to_json(spec));
  j["homographies"] = Json::array();
  for (const auto& h : scene.gt.homographies) j["homographies"].push_back(h.entries());
  j["match_plane"] = scene.gt.match_plane;
  j["is_outlier"] = scene.gt.is_outlier;
  j["outlier_count"] = std::count(scene.gt.is_outlier.begin(), scene.gt.is_outlier.end(), 1);
  j["visibility_codes"] = {{"visible", 0}, {"occluded", 1}, {"outside", 2}};
  std::ofstream out(dir / "ground_truth.json");
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write ground_truth.json");
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed for ground_truth.json");
}

}  // namespace parastitch
