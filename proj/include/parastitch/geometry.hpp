#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace parastitch {

using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
double distance(Point2 a, Point2 b);

// A correspondence: target_pt in the image being warped, ref_pt in the
// reference image.
struct FeatureMatch {
  Point2 target_pt;
  Point2 ref_pt;

  friend bool operator==(const FeatureMatch&, const FeatureMatch&) = default;
};

using MatchSet = std::vector<FeatureMatch>;

// Throws kPreconditionViolation if the set is empty, holds non-finite
// coordinates, or repeats a (target_pt, ref_pt) pair.
void validate_match_set(std::span<const FeatureMatch> matches);

// Canonical scale: unit Frobenius norm, m(2,2) >= 0 (or, when m(2,2) == 0, the
// first nonzero entry positive).
Mat3 canonicalize(const Mat3& m);

// Invertible planar projective map. Immutable; the inverse is cached.
class Homography {
 public:
  Homography() : Homography(identity()) {}

  static Homography identity();
  static Homography translation(double tx, double ty);
  // Throws kDegenerateConfiguration when m is numerically singular.
  static Homography from_matrix(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  const Mat3& inverse_matrix() const { return inv_; }
  Homography inverse() const;

  // nullopt when the perspective denominator falls below 1e-12.
  std::optional<Point2> apply(Point2 p) const;
  std::optional<Point2> apply_inverse(Point2 q) const;

  // Row-major entries, canonical scale.
  std::vector<double> entries() const;

 private:
  Homography(const Mat3& m, const Mat3& inv) : m_(m), inv_(inv) {}

  Mat3 m_;
  Mat3 inv_;
};

Homography operator*(const Homography& a, const Homography& b);

std::optional<Point2> apply_projective(const Mat3& m, Point2 p);

struct Similarity {
  double scale = 1.0;
  double angle = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;

  Point2 apply(Point2 p) const;
  Mat2 jacobian() const;
  Homography to_homography() const;
};

struct FundamentalMatrix {
  Mat3 m;
  double inlier_threshold = 3.0;  // Sampson distance, pixels
};

// --- estimation ---

// Normalized DLT. Needs >= 4 matches with a rank-8 design matrix.
Homography estimate_homography_dlt(std::span<const FeatureMatch> matches);

struct LmOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-8;
};

struct LmResult {
  Homography h;
  double initial_cost = 0.0;  // total symmetric transfer error
  double final_cost = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  bool singular_fallback = false;
  // Total transfer error after each accepted step (starting with the initial).
  std::vector<double> cost_history;
};

// Levenberg-Marquardt on the total symmetric transfer error. m(2,2) is held at
// its starting value; the remaining eight entries are free.
LmResult refine_homography_lm(const Homography& initial,
                              std::span<const FeatureMatch> matches,
                              const LmOptions& options = {});

// ||Hp - q|| + ||H^-1 q - p||; +infinity if either direction hits the horizon.
double symmetric_transfer_error(const Homography& h, const FeatureMatch& m);
double total_transfer_error(const Homography& h,
                            std::span<const FeatureMatch> matches);

// Normalized 8-point algorithm with rank-2 truncation. Epipolar convention:
// target_pt^T F ref_pt = 0.
FundamentalMatrix estimate_fundamental(std::span<const FeatureMatch> matches,
                                       double inlier_threshold = 3.0);

// Robust variant: 8-point RANSAC on the Sampson distance followed by a
// least-squares refit on the consensus set.
FundamentalMatrix estimate_fundamental_ransac(
    std::span<const FeatureMatch> matches, double inlier_threshold,
    std::uint64_t seed, int max_trials = 2000, double confidence = 0.995);

double sampson_distance(const FundamentalMatrix& f, const FeatureMatch& m);

std::vector<bool> fundamental_inlier_mask(const FundamentalMatrix& f,
                                          std::span<const FeatureMatch> matches);

// Keeps matches with Sampson distance < f.inlier_threshold, order preserved.
// Throws kEmptyResult when nothing survives.
MatchSet fundamental_inlier_filter(const FundamentalMatrix& f,
                                   std::span<const FeatureMatch> matches);

// Least-squares 4-DOF similarity target -> reference.
Similarity estimate_similarity(std::span<const FeatureMatch> matches);

// Jacobian of p -> dehomogenize(H p~) at `at`. Throws kPointAtInfinity.
Mat2 homography_point_jacobian(const Homography& h, Point2 at);

}  // namespace parastitch
