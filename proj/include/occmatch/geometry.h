#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace occmatch {

// Continuous pixel coordinates. (0, 0) is the center of the top-left pixel,
// so pixel (x, y) covers [x - 0.5, x + 0.5) x [y - 0.5, y + 0.5).
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws kInvalidArgument when an invariant is violated.
  void Validate() const;

  // True when the point lies inside the footprint of some pixel.
  bool Contains(const PixelPoint& px) const;

  Eigen::Matrix3d Matrix() const;
};

// Integer pixel containing a continuous point.
inline int PixelColumn(double u) { return static_cast<int>(std::floor(u + 0.5)); }
inline int PixelRow(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Rigid transform. Poses of cameras are stored camera-to-world.
class PoseSE3 {
 public:
  PoseSE3();
  // Throws kInvalidArgument unless R is orthonormal with det +1 (1e-9).
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static PoseSE3 Identity() { return PoseSE3(); }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  PoseSE3 Inverse() const;
  PoseSE3 operator*(const PoseSE3& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const {
    return rotation_ * point + translation_;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

// Row-major metric depth. 0 marks an invalid pixel.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, float fill = 0.0f);
  DepthMap(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  float at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
  size_t CountValid() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

struct Projection {
  PixelPoint px;
  double depth = 0.0;
};

// Throws kNonPositiveDepth when point.z() <= 0.
Projection Project(const Eigen::Vector3d& point, const CameraIntrinsics& k);

// Throws kNonPositiveDepth when depth <= 0.
Eigen::Vector3d Unproject(const PixelPoint& px, double depth, const CameraIntrinsics& k);

// Transform mapping camera-A coordinates into camera-B coordinates.
PoseSE3 RelativePose(const PoseSE3& pose_a, const PoseSE3& pose_b);

struct Reprojection {
  bool behind_camera = false;
  PixelPoint px;
  double depth = 0.0;
};

Reprojection Reproject(const PixelPoint& px, double depth_a, const CameraIntrinsics& k_a,
                       const CameraIntrinsics& k_b, const PoseSE3& t_ba);

// Bilinear depth lookup that ignores invalid or out-of-image neighbors and
// renormalizes the remaining weights. Empty when no neighbor with positive
// weight is valid.
std::optional<double> SampleDepthBilinear(const DepthMap& depth, const PixelPoint& px);

}  // namespace occmatch
