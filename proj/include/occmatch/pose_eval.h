#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "occmatch/geometry.h"

namespace occmatch {

struct RansacConfig {
  int max_iterations = 2000;
  // Threshold on the (unsquared) Sampson distance in normalized coordinates.
  double inlier_threshold = 1e-3;
  double confidence = 0.999;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct Correspondence {
  PixelPoint a;
  PixelPoint b;
};

struct EssentialEstimate {
  Eigen::Matrix3d essential;
  // x_b ~ R x_a + t in camera coordinates, ||t|| = 1.
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
  std::vector<bool> inliers;
  int num_inliers = 0;
};

// [t]_x R.
Eigen::Matrix3d EssentialFromPose(const Eigen::Matrix3d& rotation,
                                  const Eigen::Vector3d& translation);

// First-order geometric error of x_b^T E x_a = 0 for normalized points.
double SampsonDistance(const Eigen::Matrix3d& essential, const Eigen::Vector2d& xa,
                       const Eigen::Vector2d& xb);

// Hartley-normalized linear 8-point estimate projected onto the essential
// manifold (two equal singular values, one zero). Needs >= 8 points.
Eigen::Matrix3d EightPointEssential(std::span<const Eigen::Vector2d> xa,
                                    std::span<const Eigen::Vector2d> xb);

struct RelativeMotion {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

// The four (R, t) candidates of an essential matrix.
std::vector<RelativeMotion> DecomposeEssential(const Eigen::Matrix3d& essential);

// Robust essential-matrix estimate from pixel matches. Throws
// kInsufficientMatches (< 8) and kDegenerateConfiguration.
EssentialEstimate EssentialFromMatches(std::span<const Correspondence> matches,
                                       const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                       const RansacConfig& cfg);

struct PoseErrorReport {
  double rotation_error_deg = 0.0;
  double translation_angle_error_deg = 0.0;
  double pose_error_deg = 0.0;
  int inlier_count = 0;
  // ||s t_est - t_gt|| with s = +-||t_gt|| picked to minimize the error.
  double translation_metric_error = 0.0;
};

// Translation error is sign-invariant. Throws kZeroTranslation.
PoseErrorReport PoseError(const Eigen::Matrix3d& r_est, const Eigen::Vector3d& t_est,
                          const Eigen::Matrix3d& r_gt, const Eigen::Vector3d& t_gt);

// Percentage area under the recall curve up to each threshold, integrated
// exactly over the piecewise-constant recall. Infinite errors never count.
// Throws kEmptyErrorList.
std::vector<double> PoseAuc(std::span<const double> errors_deg,
                            std::span<const double> thresholds_deg);

struct OcclusionSample {
  double occlusion_ratio = 0.0;
  double pose_error_deg = 0.0;
};

struct CurvePoint {
  int count = 0;
  double mean_error_deg = 0.0;
};

// Running mean of pose error after sorting by occlusion ratio (ties by
// error). Throws kEmptyList.
std::vector<CurvePoint> CumulativeOcclusionCurve(std::span<const OcclusionSample> samples);

}  // namespace occmatch
