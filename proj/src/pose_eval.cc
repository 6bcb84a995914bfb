#include "occmatch/pose_eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "occmatch/error.h"
#include "occmatch/random.h"

namespace occmatch {

namespace {

constexpr int kMinimalSample = 8;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d NormalizingTransform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d ToNormalized(const PixelPoint& px, const CameraIntrinsics& k) {
  return {(px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy};
}

int CountInliers(const Eigen::Matrix3d& e, std::span<const Eigen::Vector2d> xa,
                 std::span<const Eigen::Vector2d> xb, double threshold,
                 std::vector<bool>* mask) {
  int count = 0;
  if (mask) mask->assign(xa.size(), false);
  for (size_t i = 0; i < xa.size(); ++i) {
    if (SampsonDistance(e, xa[i], xb[i]) <= threshold) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

// Depths of the two-view linear triangulation d_b x_b = R d_a x_a + t.
bool InFrontOfBoth(const RelativeMotion& m, const Eigen::Vector2d& xa, const Eigen::Vector2d& xb) {
  const Eigen::Vector3d ra = m.rotation * xa.homogeneous();
  const Eigen::Vector3d rb = xb.homogeneous();
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = ra;
  a.col(1) = -rb;
  const Eigen::Vector2d d = a.colPivHouseholderQr().solve(-m.translation);
  return d.x() > 0.0 && d.y() > 0.0;
}

}  // namespace

void RansacConfig::Validate() const {
  OCCMATCH_CHECK(max_iterations > 0, ErrorCode::kInvalidArgument,
                 "RANSAC iterations must be positive");
  OCCMATCH_CHECK(inlier_threshold > 0.0, ErrorCode::kInvalidArgument,
                 "RANSAC inlier threshold must be positive");
  OCCMATCH_CHECK(confidence > 0.0 && confidence < 1.0, ErrorCode::kInvalidArgument,
                 "RANSAC confidence must lie in (0, 1)");
}

Eigen::Matrix3d EssentialFromPose(const Eigen::Matrix3d& rotation,
                                  const Eigen::Vector3d& translation) {
  return Skew(translation) * rotation;
}

double SampsonDistance(const Eigen::Matrix3d& e, const Eigen::Vector2d& xa,
                       const Eigen::Vector2d& xb) {
  const Eigen::Vector3d ha = xa.homogeneous();
  const Eigen::Vector3d hb = xb.homogeneous();
  const Eigen::Vector3d ex = e * ha;
  const Eigen::Vector3d etx = e.transpose() * hb;
  const double num = hb.dot(ex);
  const double den = ex.x() * ex.x() + ex.y() * ex.y() + etx.x() * etx.x() + etx.y() * etx.y();
  if (den <= 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(num) / std::sqrt(den);
}

Eigen::Matrix3d EightPointEssential(std::span<const Eigen::Vector2d> xa,
                                    std::span<const Eigen::Vector2d> xb) {
  OCCMATCH_CHECK(xa.size() == xb.size(), ErrorCode::kLengthMismatch,
                 "point lists differ in length");
  OCCMATCH_CHECK(xa.size() >= kMinimalSample, ErrorCode::kInsufficientMatches,
                 "8-point solver needs at least 8 correspondences");
  const Eigen::Matrix3d ta = NormalizingTransform(xa);
  const Eigen::Matrix3d tb = NormalizingTransform(xb);
  Eigen::MatrixXd a(xa.size(), 9);
  for (size_t i = 0; i < xa.size(); ++i) {
    const Eigen::Vector3d p = ta * xa[i].homogeneous();
    const Eigen::Vector3d q = tb * xb[i].homogeneous();
    a.row(static_cast<Eigen::Index>(i)) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(),
        q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> e = svd.matrixV().col(8);
  const Eigen::Matrix3d en = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(e.data());

  // Project onto the essential manifold.
  const Eigen::JacobiSVD<Eigen::Matrix3d> esvd(tb.transpose() * en * ta,
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = esvd.singularValues();
  const double sigma = 0.5 * (s(0) + s(1));
  const Eigen::Matrix3d out = esvd.matrixU() * Eigen::Vector3d(sigma, sigma, 0.0).asDiagonal() *
                              esvd.matrixV().transpose();
  return out / out.norm();
}

std::vector<RelativeMotion> DecomposeEssential(const Eigen::Matrix3d& essential) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2).normalized();
  return {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}};
}

EssentialEstimate EssentialFromMatches(std::span<const Correspondence> matches,
                                       const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                       const RansacConfig& cfg) {
  cfg.Validate();
  const size_t n = matches.size();
  OCCMATCH_CHECK(n >= kMinimalSample, ErrorCode::kInsufficientMatches,
                 std::to_string(n) + " matches, need at least 8");
  std::vector<Eigen::Vector2d> xa(n);
  std::vector<Eigen::Vector2d> xb(n);
  for (size_t i = 0; i < n; ++i) {
    xa[i] = ToNormalized(matches[i].a, k_a);
    xb[i] = ToNormalized(matches[i].b, k_b);
  }

  SeededRng rng(cfg.seed);
  std::vector<size_t> order(n);
  std::vector<Eigen::Vector2d> sa(kMinimalSample);
  std::vector<Eigen::Vector2d> sb(kMinimalSample);
  Eigen::Matrix3d best_e = Eigen::Matrix3d::Zero();
  int best_count = -1;
  long needed = cfg.max_iterations;
  for (long iter = 0; iter < std::min<long>(needed, cfg.max_iterations); ++iter) {
    for (size_t i = 0; i < n; ++i) order[i] = i;
    for (int k = 0; k < kMinimalSample; ++k) {
      const size_t pick = k + static_cast<size_t>(rng.Below(n - k));
      std::swap(order[k], order[pick]);
      sa[k] = xa[order[k]];
      sb[k] = xb[order[k]];
    }
    const Eigen::Matrix3d e = EightPointEssential(sa, sb);
    if (!e.allFinite()) continue;
    const int count = CountInliers(e, xa, xb, cfg.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best_e = e;
      const double ratio = static_cast<double>(count) / static_cast<double>(n);
      const double miss = 1.0 - std::pow(ratio, kMinimalSample);
      if (miss <= 0.0) {
        needed = iter + 1;
      } else if (miss < 1.0) {
        needed = static_cast<long>(std::ceil(std::log(1.0 - cfg.confidence) / std::log(miss)));
      }
    }
  }

  EssentialEstimate out;
  out.essential = best_e;
  out.num_inliers = CountInliers(best_e, xa, xb, cfg.inlier_threshold, &out.inliers);
  // Least-squares refit on the consensus set, kept only if it does not lose support.
  for (int round = 0; round < 2 && out.num_inliers >= kMinimalSample; ++round) {
    std::vector<Eigen::Vector2d> ia;
    std::vector<Eigen::Vector2d> ib;
    for (size_t i = 0; i < n; ++i) {
      if (out.inliers[i]) {
        ia.push_back(xa[i]);
        ib.push_back(xb[i]);
      }
    }
    const Eigen::Matrix3d refit = EightPointEssential(ia, ib);
    std::vector<bool> mask;
    const int count = CountInliers(refit, xa, xb, cfg.inlier_threshold, &mask);
    if (!refit.allFinite() || count < out.num_inliers) break;
    out.essential = refit;
    out.inliers = std::move(mask);
    out.num_inliers = count;
  }

  int best_front = 0;
  for (const RelativeMotion& m : DecomposeEssential(out.essential)) {
    int front = 0;
    for (size_t i = 0; i < n; ++i) {
      if (out.inliers[i] && InFrontOfBoth(m, xa[i], xb[i])) ++front;
    }
    if (front > best_front) {
      best_front = front;
      out.rotation = m.rotation;
      out.translation = m.translation;
    }
  }
  OCCMATCH_CHECK(best_front > 0, ErrorCode::kDegenerateConfiguration,
                 "no decomposition places the inliers in front of both cameras");
  return out;
}

PoseErrorReport PoseError(const Eigen::Matrix3d& r_est, const Eigen::Vector3d& t_est,
                          const Eigen::Matrix3d& r_gt, const Eigen::Vector3d& t_gt) {
  OCCMATCH_CHECK(t_est.norm() > 0.0 && t_gt.norm() > 0.0, ErrorCode::kZeroTranslation,
                 "translation direction undefined for a zero vector");
  PoseErrorReport out;
  out.rotation_error_deg =
      Eigen::AngleAxisd(Eigen::Matrix3d(r_est.transpose() * r_gt)).angle() * kRadToDeg;
  const double angle =
      std::atan2(t_est.cross(t_gt).norm(), t_est.dot(t_gt)) * kRadToDeg;
  out.translation_angle_error_deg = std::min(angle, 180.0 - angle);
  out.pose_error_deg = std::max(out.rotation_error_deg, out.translation_angle_error_deg);
  const Eigen::Vector3d scaled = t_est.normalized() * t_gt.norm();
  out.translation_metric_error = std::min((scaled - t_gt).norm(), (-scaled - t_gt).norm());
  return out;
}

std::vector<double> PoseAuc(std::span<const double> errors_deg,
                            std::span<const double> thresholds_deg) {
  OCCMATCH_CHECK(!errors_deg.empty(), ErrorCode::kEmptyErrorList, "no pose errors");
  for (double e : errors_deg) {
    OCCMATCH_CHECK(e >= 0.0, ErrorCode::kInvalidArgument, "pose errors must be non-negative");
  }
  // Summing in sorted order makes the result independent of input order.
  std::vector<double> sorted(errors_deg.begin(), errors_deg.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> out;
  out.reserve(thresholds_deg.size());
  for (double t : thresholds_deg) {
    OCCMATCH_CHECK(t > 0.0, ErrorCode::kInvalidArgument, "AUC thresholds must be positive");
    // recall(e) steps up by 1/n at each error, so its integral over [0, t]
    // is sum_i max(0, t - e_i) / n.
    double area = 0.0;
    for (double e : sorted) {
      if (e >= t) break;
      area += t - e;
    }
    out.push_back(100.0 * area / (n * t));
  }
  return out;
}

std::vector<CurvePoint> CumulativeOcclusionCurve(std::span<const OcclusionSample> samples) {
  OCCMATCH_CHECK(!samples.empty(), ErrorCode::kEmptyList, "no samples for the occlusion curve");
  std::vector<OcclusionSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const OcclusionSample& x, const OcclusionSample& y) {
    if (x.occlusion_ratio != y.occlusion_ratio) return x.occlusion_ratio < y.occlusion_ratio;
    return x.pose_error_deg < y.pose_error_deg;
  });
  std::vector<CurvePoint> out;
  out.reserve(sorted.size());
  double sum = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    sum += sorted[i].pose_error_deg;
    out.push_back({static_cast<int>(i + 1), sum / static_cast<double>(i + 1)});
  }
  return out;
}

}  // namespace occmatch
