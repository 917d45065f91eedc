#include "parastitch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "parastitch/error.hpp"
#include "parastitch/random.hpp"

namespace parastitch {
namespace {

constexpr double kHorizonEps = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec3 = Eigen::Vector3d;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

// Similarity transform taking the points to zero centroid and mean distance
// sqrt(2) from the origin.
Mat3 hartley_transform(std::span<const Point2> pts) {
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Point2 transform(const Mat3& t, Point2 p) {
  return {t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2),
          t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)};
}

std::vector<Point2> targets(std::span<const FeatureMatch> matches) {
  std::vector<Point2> out;
  out.reserve(matches.size());
  for (const auto& m : matches) out.push_back(m.target_pt);
  return out;
}

std::vector<Point2> refs(std::span<const FeatureMatch> matches) {
  std::vector<Point2> out;
  out.reserve(matches.size());
  for (const auto& m : matches) out.push_back(m.ref_pt);
  return out;
}

bool is_numerically_singular(const Mat3& m) {
  if (!m.allFinite()) return true;
  Eigen::JacobiSVD<Mat3> svd(m);
  const auto& s = svd.singularValues();
  return s(0) == 0.0 || s(2) / s(0) < 1e-13;
}

// Residual norms below this floor (normalized units) get a bounded IRLS
// weight.
constexpr double kIrlsFloor = 1e-10;

// Derivative of dehomogenization at u.
Eigen::Matrix<double, 2, 3> dehomogenize_jacobian(const Vec3& u) {
  Eigen::Matrix<double, 2, 3> d;
  const double w = u(2);
  d << 1.0 / w, 0.0, -u(0) / (w * w), 0.0, 1.0 / w, -u(1) / (w * w);
  return d;
}

// Free parameters: all entries except (2,2), row-major.
constexpr std::array<std::pair<int, int>, 8> kFreeEntries = {
    {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}}};

// Total transfer error of a homography in normalized coordinates; nullopt if
// any point reaches the horizon or the matrix is singular.
std::optional<double> lm_cost(const Mat3& h, std::span<const Point2> p,
                              std::span<const Point2> q) {
  if (is_numerically_singular(h)) return std::nullopt;
  const Mat3 g = h.inverse();
  double ste = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec3 u = h * Vec3(p[i].x, p[i].y, 1.0);
    const Vec3 v = g * Vec3(q[i].x, q[i].y, 1.0);
    if (std::abs(u(2)) < kHorizonEps || std::abs(v(2)) < kHorizonEps) {
      return std::nullopt;
    }
    ste += std::hypot(u(0) / u(2) - q[i].x, u(1) / u(2) - q[i].y) +
           std::hypot(v(0) / v(2) - p[i].x, v(1) / v(2) - p[i].y);
  }
  return ste;
}

}  // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void validate_match_set(std::span<const FeatureMatch> matches) {
  require(!matches.empty(), ErrorCode::kPreconditionViolation,
          "match set is empty");
  std::set<std::tuple<double, double, double, double>> seen;
  for (const auto& m : matches) {
    require(std::isfinite(m.target_pt.x) && std::isfinite(m.target_pt.y) &&
                std::isfinite(m.ref_pt.x) && std::isfinite(m.ref_pt.y),
            ErrorCode::kPreconditionViolation, "non-finite match coordinate");
    const bool inserted =
        seen.emplace(m.target_pt.x, m.target_pt.y, m.ref_pt.x, m.ref_pt.y)
            .second;
    require(inserted, ErrorCode::kPreconditionViolation, "duplicate match");
  }
}

Mat3 canonicalize(const Mat3& m) {
  const double norm = m.norm();
  require(norm > 0.0 && std::isfinite(norm), ErrorCode::kDegenerateConfiguration,
          "cannot canonicalize a zero or non-finite matrix");
  // Already canonical up to rounding: return unchanged so repeated
  // canonicalization is exact.
  Mat3 c = std::abs(norm - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon()
               ? m
               : Mat3(m / norm);
  double pivot = c(2, 2);
  if (pivot == 0.0) {
    for (int i = 0; i < 9 && pivot == 0.0; ++i) pivot = c(i / 3, i % 3);
  }
  if (pivot < 0.0) c = -c;
  return c;
}

Homography Homography::identity() {
  return from_matrix(Mat3::Identity());
}

Homography Homography::translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return from_matrix(m);
}

Homography Homography::from_matrix(const Mat3& m) {
  require(!is_numerically_singular(m), ErrorCode::kDegenerateConfiguration,
          "homography matrix is singular");
  const Mat3 c = canonicalize(m);
  return Homography(c, canonicalize(c.inverse()));
}

Homography Homography::inverse() const { return Homography(inv_, m_); }

std::optional<Point2> apply_projective(const Mat3& m, Point2 p) {
  const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
  if (std::abs(w) < kHorizonEps) return std::nullopt;
  return Point2{(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w,
                (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

std::optional<Point2> Homography::apply(Point2 p) const {
  return apply_projective(m_, p);
}

std::optional<Point2> Homography::apply_inverse(Point2 q) const {
  return apply_projective(inv_, q);
}

std::vector<double> Homography::entries() const {
  std::vector<double> out(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = m_(r, c);
  return out;
}

Homography operator*(const Homography& a, const Homography& b) {
  return Homography::from_matrix(a.matrix() * b.matrix());
}

Point2 Similarity::apply(Point2 p) const {
  const double c = scale * std::cos(angle);
  const double s = scale * std::sin(angle);
  return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
}

Mat2 Similarity::jacobian() const {
  const double c = scale * std::cos(angle);
  const double s = scale * std::sin(angle);
  Mat2 j;
  j << c, -s, s, c;
  return j;
}

Homography Similarity::to_homography() const {
  const Mat2 j = jacobian();
  Mat3 m;
  m << j(0, 0), j(0, 1), tx, j(1, 0), j(1, 1), ty, 0, 0, 1;
  return Homography::from_matrix(m);
}

Homography estimate_homography_dlt(std::span<const FeatureMatch> matches) {
  require(matches.size() >= 4, ErrorCode::kDegenerateConfiguration,
          "DLT needs at least 4 matches");
  const auto tp = targets(matches);
  const auto tq = refs(matches);
  const Mat3 np = hartley_transform(tp);
  const Mat3 nq = hartley_transform(tq);

  Eigen::MatrixXd a(2 * matches.size(), 9);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Point2 p = transform(np, tp[i]);
    const Point2 q = transform(nq, tq[i]);
    a.row(2 * i) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
    a.row(2 * i + 1) << p.x, p.y, 1, 0, 0, 0, -q.x * p.x, -q.x * p.y, -q.x;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  require(s(0) > 0.0 && s(7) / s(0) > 1e-10,
          ErrorCode::kDegenerateConfiguration,
          "DLT design matrix is rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography::from_matrix(nq.inverse() * hn * np);
}

double symmetric_transfer_error(const Homography& h, const FeatureMatch& m) {
  const auto fwd = h.apply(m.target_pt);
  const auto bwd = h.apply_inverse(m.ref_pt);
  if (!fwd || !bwd) return kInf;
  return distance(*fwd, m.ref_pt) + distance(*bwd, m.target_pt);
}

double total_transfer_error(const Homography& h,
                            std::span<const FeatureMatch> matches) {
  double total = 0.0;
  for (const auto& m : matches) total += symmetric_transfer_error(h, m);
  return total;
}

LmResult refine_homography_lm(const Homography& initial,
                              std::span<const FeatureMatch> matches,
                              const LmOptions& options) {
  require(matches.size() >= 4, ErrorCode::kPreconditionViolation,
          "LM refinement needs at least 4 matches");

  // One similarity normalization shared by both point sets scales every
  // distance by the same factor, so the normalized problem has the same
  // minimizer as the pixel one.
  std::vector<Point2> all = targets(matches);
  const auto rq = refs(matches);
  all.insert(all.end(), rq.begin(), rq.end());
  const Mat3 shared = hartley_transform(all);
  const double s = shared(0, 0);
  auto centered = [&](std::span<const Point2> pts) {
    const Mat3 t = hartley_transform(pts);
    Mat3 n;
    n << s, 0, t(0, 2) / t(0, 0) * s, 0, s, t(1, 2) / t(1, 1) * s, 0, 0, 1;
    return n;
  };
  const auto tp = targets(matches);
  const Mat3 np = centered(tp);
  const Mat3 nq = centered(rq);
  std::vector<Point2> p(matches.size());
  std::vector<Point2> q(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    p[i] = transform(np, tp[i]);
    q[i] = transform(nq, rq[i]);
  }
  auto to_pixels = [&](const Mat3& hn) { return nq.inverse() * hn * np; };

  LmResult result;
  result.h = initial;
  result.initial_cost = total_transfer_error(initial, matches);
  result.final_cost = result.initial_cost;
  result.cost_history.push_back(result.initial_cost);
  if (!std::isfinite(result.initial_cost) ||
      result.initial_cost <= 1e-12 * static_cast<double>(matches.size())) {
    return result;
  }

  Mat3 h = nq * initial.matrix() * np.inverse();
  h /= h.norm();
  if (h(2, 2) < 0.0) h = -h;

  auto current = lm_cost(h, p, q);
  if (!current) {
    result.singular_fallback = true;
    return result;
  }

  // Iteratively reweighted Gauss-Newton: each residual vector e is weighted
  // by 1/|e| at the linearization point, so the weighted squared cost there
  // equals the transfer error and majorizes it nearby.
  Mat8 jtj;
  Vec8 jtr;
  auto linearize = [&] {
    const Mat3 g = h.inverse();
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Vec3 pt(p[i].x, p[i].y, 1.0);
      const Vec3 qt(q[i].x, q[i].y, 1.0);
      const Vec3 u = h * pt;
      const Vec3 v = g * qt;
      const auto du = dehomogenize_jacobian(u);
      const auto dv = dehomogenize_jacobian(v);
      const Eigen::Vector2d ef(u(0) / u(2) - q[i].x, u(1) / u(2) - q[i].y);
      const Eigen::Vector2d eb(v(0) / v(2) - p[i].x, v(1) / v(2) - p[i].y);
      const double wf = 1.0 / std::max(ef.norm(), kIrlsFloor);
      const double wb = 1.0 / std::max(eb.norm(), kIrlsFloor);

      Eigen::Matrix<double, 2, 8> jf;
      Eigen::Matrix<double, 2, 8> jb;
      for (int k = 0; k < 8; ++k) {
        const auto [r, c] = kFreeEntries[k];
        Vec3 d_u = Vec3::Zero();
        d_u(r) = pt(c);
        // d(H^-1) = -H^-1 dH H^-1, so d(H^-1 q) = -G e_r v_c.
        const Vec3 d_v = -g.col(r) * v(c);
        jf.col(k) = du * d_u;
        jb.col(k) = dv * d_v;
      }
      jtj += wf * jf.transpose() * jf + wb * jb.transpose() * jb;
      jtr += wf * jf.transpose() * ef + wb * jb.transpose() * eb;
    }
  };

  linearize();
  double mu = 1e-3 * jtj.trace() / 8.0;
  while (result.iterations < options.max_iterations) {
    ++result.iterations;
    const Mat8 damped = jtj + mu * Mat8::Identity();
    const Vec8 step = -damped.ldlt().solve(jtr);
    Mat3 candidate = h;
    for (int k = 0; k < 8; ++k) {
      const auto [r, c] = kFreeEntries[k];
      candidate(r, c) += step(k);
    }
    const auto next = lm_cost(candidate, p, q);
    if (!next) {
      // Fall back to the last valid iterate.
      result.singular_fallback = true;
      return result;
    }
    if (*next < *current) {
      const double rel = (*current - *next) / *current;
      h = candidate;
      current = next;
      mu = std::max(mu / 10.0, 1e-12 * jtj.trace());
      ++result.accepted_steps;
      const Homography hp = Homography::from_matrix(to_pixels(h));
      const double cost = total_transfer_error(hp, matches);
      if (cost <= result.final_cost) {
        result.h = hp;
        result.final_cost = cost;
      }
      result.cost_history.push_back(result.final_cost);
      if (rel < options.relative_tolerance ||
          result.final_cost <= 1e-12 * static_cast<double>(matches.size())) {
        break;
      }
      linearize();
    } else {
      mu *= 10.0;
      if (mu > 1e32) break;
    }
  }
  return result;
}

FundamentalMatrix estimate_fundamental(std::span<const FeatureMatch> matches,
                                       double inlier_threshold) {
  require(matches.size() >= 8, ErrorCode::kDegenerateConfiguration,
          "8-point algorithm needs at least 8 matches");
  const auto tp = targets(matches);
  const auto tq = refs(matches);
  const Mat3 np = hartley_transform(tp);
  const Mat3 nq = hartley_transform(tq);

  Eigen::MatrixXd a(matches.size(), 9);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Point2 p = transform(np, tp[i]);
    const Point2 q = transform(nq, tq[i]);
    a.row(i) << p.x * q.x, p.x * q.y, p.x, p.y * q.x, p.y * q.y, p.y, q.x, q.y,
        1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  require(s(0) > 0.0 && s(7) / s(0) > 1e-12,
          ErrorCode::kDegenerateConfiguration,
          "8-point design matrix is ill-conditioned");
  const Eigen::VectorXd f = svd.matrixV().col(8);
  Mat3 fn;
  fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  auto truncate = [](const Mat3& m) {
    Eigen::JacobiSVD<Mat3> d(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d sv = d.singularValues();
    sv(2) = 0.0;
    return Mat3(d.matrixU() * sv.asDiagonal() * d.matrixV().transpose());
  };
  // p^T F q with p = Tp^-1 pn, q = Tq^-1 qn  =>  F = Tp^T Fn Tq.
  const Mat3 full = np.transpose() * truncate(fn) * nq;
  FundamentalMatrix out;
  out.m = truncate(full / full.norm());
  out.m /= out.m.norm();
  out.inlier_threshold = inlier_threshold;
  return out;
}

double sampson_distance(const FundamentalMatrix& f, const FeatureMatch& m) {
  const Vec3 p(m.target_pt.x, m.target_pt.y, 1.0);
  const Vec3 q(m.ref_pt.x, m.ref_pt.y, 1.0);
  const Vec3 fq = f.m * q;
  const Vec3 ftp = f.m.transpose() * p;
  const double r = p.dot(fq);
  const double denom =
      fq(0) * fq(0) + fq(1) * fq(1) + ftp(0) * ftp(0) + ftp(1) * ftp(1);
  if (denom <= 0.0) return r == 0.0 ? 0.0 : kInf;
  return std::abs(r) / std::sqrt(denom);
}

std::vector<bool> fundamental_inlier_mask(const FundamentalMatrix& f,
                                          std::span<const FeatureMatch> matches) {
  std::vector<bool> mask(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    mask[i] = sampson_distance(f, matches[i]) < f.inlier_threshold;
  }
  return mask;
}

MatchSet fundamental_inlier_filter(const FundamentalMatrix& f,
                                   std::span<const FeatureMatch> matches) {
  const auto mask = fundamental_inlier_mask(f, matches);
  MatchSet out;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (mask[i]) out.push_back(matches[i]);
  }
  require(!out.empty(), ErrorCode::kEmptyResult,
          "no match passes the epipolar test");
  return out;
}

FundamentalMatrix estimate_fundamental_ransac(
    std::span<const FeatureMatch> matches, double inlier_threshold,
    std::uint64_t seed, int max_trials, double confidence) {
  require(matches.size() >= 8, ErrorCode::kDegenerateConfiguration,
          "8-point RANSAC needs at least 8 matches");
  Rng rng(seed);
  std::optional<FundamentalMatrix> best;
  std::size_t best_count = 0;
  double needed = static_cast<double>(max_trials);
  std::vector<FeatureMatch> sample(8);
  std::vector<std::size_t> idx;

  auto count_inliers = [&](const FundamentalMatrix& f) {
    const auto mask = fundamental_inlier_mask(f, matches);
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  };
  // Local optimization: least-squares refits on the consensus set while it
  // keeps growing. Samples drawn from few planes give near-degenerate
  // hypotheses that only the refit escapes.
  auto polish = [&](FundamentalMatrix f, std::size_t count) {
    MatchSet consensus;
    for (int round = 0; round < 10; ++round) {
      const auto mask = fundamental_inlier_mask(f, matches);
      consensus.clear();
      for (std::size_t i = 0; i < matches.size(); ++i) {
        if (mask[i]) consensus.push_back(matches[i]);
      }
      if (consensus.size() < 8) break;
      FundamentalMatrix refit;
      try {
        refit = estimate_fundamental(consensus, inlier_threshold);
      } catch (const Error&) {
        break;
      }
      const std::size_t refit_count = count_inliers(refit);
      if (refit_count < count) break;
      const bool grew = refit_count > count;
      f = refit;
      count = refit_count;
      if (!grew) break;
    }
    return std::pair{f, count};
  };

  for (int trial = 0; trial < max_trials && trial < needed; ++trial) {
    idx.clear();
    while (idx.size() < 8) {
      const std::size_t k = rng.index(matches.size());
      if (std::find(idx.begin(), idx.end(), k) == idx.end()) idx.push_back(k);
    }
    for (int i = 0; i < 8; ++i) sample[i] = matches[idx[i]];
    FundamentalMatrix f;
    try {
      f = estimate_fundamental(sample, inlier_threshold);
    } catch (const Error&) {
      continue;
    }
    std::size_t count = count_inliers(f);
    if (count > best_count) {
      std::tie(f, count) = polish(f, count);
      best_count = count;
      best = f;
      const double w =
          static_cast<double>(count) / static_cast<double>(matches.size());
      const double miss = 1.0 - std::pow(w, 8.0);
      needed = miss <= 0.0 ? 0.0
                           : std::log(1.0 - confidence) / std::log(miss);
    }
  }
  require(best.has_value(), ErrorCode::kDegenerateConfiguration,
          "every 8-point sample was degenerate");
  return *best;
}

Similarity estimate_similarity(std::span<const FeatureMatch> matches) {
  require(matches.size() >= 2, ErrorCode::kDegenerateConfiguration,
          "similarity needs at least 2 matches");
  // Complex form: w = a z + b with a = s e^{i theta}.
  double zx = 0, zy = 0, wx = 0, wy = 0;
  for (const auto& m : matches) {
    zx += m.target_pt.x;
    zy += m.target_pt.y;
    wx += m.ref_pt.x;
    wy += m.ref_pt.y;
  }
  const double n = static_cast<double>(matches.size());
  zx /= n;
  zy /= n;
  wx /= n;
  wy /= n;
  double num_re = 0, num_im = 0, den = 0;
  for (const auto& m : matches) {
    const double ax = m.target_pt.x - zx, ay = m.target_pt.y - zy;
    const double bx = m.ref_pt.x - wx, by = m.ref_pt.y - wy;
    // conj(z) * w
    num_re += ax * bx + ay * by;
    num_im += ax * by - ay * bx;
    den += ax * ax + ay * ay;
  }
  require(den > 0.0, ErrorCode::kDegenerateConfiguration,
          "all target points coincide");
  const double are = num_re / den;
  const double aim = num_im / den;
  Similarity s;
  s.scale = std::hypot(are, aim);
  require(s.scale > 0.0, ErrorCode::kDegenerateConfiguration,
          "similarity collapses to zero scale");
  s.angle = std::atan2(aim, are);
  s.tx = wx - (are * zx - aim * zy);
  s.ty = wy - (aim * zx + are * zy);
  return s;
}

Mat2 homography_point_jacobian(const Homography& h, Point2 at) {
  const Mat3& m = h.matrix();
  const Vec3 u = m * Vec3(at.x, at.y, 1.0);
  if (std::abs(u(2)) < kHorizonEps) {
    fail(ErrorCode::kPointAtInfinity, "Jacobian evaluated on the horizon line");
  }
  const auto d = dehomogenize_jacobian(u);
  return d * m.leftCols<2>();
}

}  // namespace parastitch
