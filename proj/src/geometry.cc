#include "occmatch/geometry.h"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "occmatch/error.h"

namespace occmatch {

void CameraIntrinsics::Validate() const {
  OCCMATCH_CHECK(fx > 0.0 && fy > 0.0, ErrorCode::kInvalidArgument,
                 "focal lengths must be positive");
  OCCMATCH_CHECK(width >= 1 && height >= 1, ErrorCode::kInvalidArgument,
                 "image size must be at least 1x1");
  OCCMATCH_CHECK(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height,
                 ErrorCode::kInvalidArgument, "principal point outside the image");
}

bool CameraIntrinsics::Contains(const PixelPoint& px) const {
  return px.u >= -0.5 && px.u < width - 0.5 && px.v >= -0.5 && px.v < height - 0.5;
}

Eigen::Matrix3d CameraIntrinsics::Matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

PoseSE3::PoseSE3()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

PoseSE3::PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho_err =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det_err = std::abs(rotation.determinant() - 1.0);
  if (!(ortho_err <= 1e-9 && det_err <= 1e-9) || !translation.allFinite()) {
    std::ostringstream msg;
    msg << "rotation is not in SO(3): |R^T R - I| = " << ortho_err
        << ", |det R - 1| = " << det_err;
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
}

PoseSE3 PoseSE3::Inverse() const {
  PoseSE3 inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

PoseSE3 PoseSE3::operator*(const PoseSE3& other) const {
  PoseSE3 out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

DepthMap::DepthMap(int width, int height, float fill)
    : width_(width), height_(height),
      data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {
  OCCMATCH_CHECK(width >= 0 && height >= 0, ErrorCode::kInvalidArgument,
                 "negative depth map size");
}

DepthMap::DepthMap(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  OCCMATCH_CHECK(width >= 0 && height >= 0 &&
                     data_.size() == static_cast<size_t>(width) * static_cast<size_t>(height),
                 ErrorCode::kInvalidArgument, "depth data length != width * height");
  for (float d : data_) {
    OCCMATCH_CHECK(std::isfinite(d) && d >= 0.0f, ErrorCode::kInvalidArgument,
                   "depth values must be finite and non-negative");
  }
}

size_t DepthMap::CountValid() const {
  size_t n = 0;
  for (float d : data_) n += d > 0.0f;
  return n;
}

Projection Project(const Eigen::Vector3d& point, const CameraIntrinsics& k) {
  OCCMATCH_CHECK(point.z() > 0.0, ErrorCode::kNonPositiveDepth, "point behind the camera");
  const double inv_z = 1.0 / point.z();
  return {{k.fx * point.x() * inv_z + k.cx, k.fy * point.y() * inv_z + k.cy}, point.z()};
}

Eigen::Vector3d Unproject(const PixelPoint& px, double depth, const CameraIntrinsics& k) {
  OCCMATCH_CHECK(depth > 0.0, ErrorCode::kNonPositiveDepth, "depth must be positive");
  return {(px.u - k.cx) / k.fx * depth, (px.v - k.cy) / k.fy * depth, depth};
}

PoseSE3 RelativePose(const PoseSE3& pose_a, const PoseSE3& pose_b) {
  return pose_b.Inverse() * pose_a;
}

Reprojection Reproject(const PixelPoint& px, double depth_a, const CameraIntrinsics& k_a,
                       const CameraIntrinsics& k_b, const PoseSE3& t_ba) {
  const Eigen::Vector3d p_b = t_ba * Unproject(px, depth_a, k_a);
  Reprojection out;
  if (p_b.z() <= 0.0) {
    out.behind_camera = true;
    out.depth = p_b.z();
    return out;
  }
  const Projection proj = Project(p_b, k_b);
  out.px = proj.px;
  out.depth = proj.depth;
  return out;
}

std::optional<double> SampleDepthBilinear(const DepthMap& depth, const PixelPoint& px) {
  const double fx = std::floor(px.u);
  const double fy = std::floor(px.v);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = px.u - fx;
  const double ay = px.v - fy;
  const double weights[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  double acc = 0.0;
  double wsum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (weights[n] <= 0.0) continue;
    if (xs[n] < 0 || ys[n] < 0 || xs[n] >= depth.width() || ys[n] >= depth.height()) continue;
    const float d = depth.at(xs[n], ys[n]);
    if (d <= 0.0f) continue;
    acc += weights[n] * d;
    wsum += weights[n];
  }
  if (wsum <= 0.0) return std::nullopt;
  return acc / wsum;
}

}  // namespace occmatch
