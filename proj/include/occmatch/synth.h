#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "occmatch/geometry.h"
#include "occmatch/matching.h"
#include "occmatch/supervision.h"

namespace occmatch::synth {

struct Plane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
};

struct Primitive {
  std::variant<Plane, Box> shape;
  int texture = 0;
};

struct SceneSpec {
  std::vector<Primitive> primitives;

  void Validate() const;
};

struct RayHit {
  double t = 0.0;  // ray parameter; equals camera depth for z-unit camera rays
  int primitive = -1;
  int texture = 0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

// Nearest intersection with t > 1e-9, if any.
std::optional<RayHit> CastRay(const SceneSpec& scene, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& direction);

// Casts the ray through a continuous pixel of a camera (camera-to-world pose).
// The direction has unit camera-z, so the hit parameter is the pixel depth.
std::optional<RayHit> CastPixel(const SceneSpec& scene, const PoseSE3& pose,
                                const CameraIntrinsics& k, const PixelPoint& px);

// Per-pixel nearest-hit depth, 0 where the ray escapes. Rows run in parallel.
DepthMap RenderDepth(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k);

// Ray-cast occlusion oracle: every pixel of `src` is classified against the
// scene as seen from `dst`, without consulting any depth map.
ClassMap AnalyticClassMap(const SceneSpec& scene, const PoseSE3& pose_src,
                          const PoseSE3& pose_dst, const CameraIntrinsics& k,
                          const OcclusionMargin& margin);

// Patch labels from the ray-cast oracle using the same center-pixel rule as
// the depth-based supervision.
CoarseMatchSet AnalyticCoarseMatches(const SceneSpec& scene, const PoseSE3& pose_a,
                                     const PoseSE3& pose_b, const CameraIntrinsics& k,
                                     const OcclusionMargin& margin, int patch_stride);

struct FeatureOptions {
  // Random Fourier features of the world point approximating a Gaussian
  // kernel of the given length scale (meters).
  int position_channels = 64;
  int texture_channels = 8;
  double length_scale = 0.25;
  double texture_weight = 0.3;
  double amplitude = 10.0;
  // Position features are averaged over a footprint_samples^2 grid of rays
  // spread over the patch instead of the center ray alone.
  int footprint_samples = 1;
  // Pixel offset of the sample inside each patch; negative selects the
  // integer center pixel used by the supervision.
  double sample_offset = -1.0;
  // MakePair samples B at its patch centroids instead: the supervision
  // reprojects A's center pixels and assigns each to the B patch whose
  // region contains it.
  bool b_at_patch_centroid = true;
  std::uint64_t seed = 7;
  // Fine grids hold world coordinates plus a scaled texture channel.
  double fine_texture_scale = 1.0;
  double fine_miss_value = 1000.0;

  void Validate() const;
};

// Coarse features at the patch-center pixels (stride 8).
FeatureGrid CoarseFeatures(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k,
                           const FeatureOptions& options, int stride = 8);
// Fine features at the centers of stride-2 cells.
FeatureGrid FineFeatures(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k,
                         const FeatureOptions& options, int stride = 2);

struct SyntheticPair {
  DepthMap depth_a;
  DepthMap depth_b;
  PoseSE3 pose_a;
  PoseSE3 pose_b;
  CameraIntrinsics k;
  ClassMap classes_ab;  // pixels of A against B
  ClassMap classes_ba;  // pixels of B against A
  FeatureGrid coarse_a;
  FeatureGrid coarse_b;
  FeatureGrid fine_a;
  FeatureGrid fine_b;
};

SyntheticPair MakePair(const SceneSpec& scene, const PoseSE3& pose_a, const PoseSE3& pose_b,
                       const CameraIntrinsics& k, const OcclusionMargin& margin = {},
                       const FeatureOptions& features = {});

struct Fixture {
  std::string name;
  SceneSpec scene;
  PoseSE3 pose_a;
  PoseSE3 pose_b;
  CameraIntrinsics k;
  // Zero-baseline pairs have no defined essential matrix.
  bool has_baseline = true;
};

CameraIntrinsics DefaultIntrinsics();  // 640x480, f = 500
// Camera-to-world pose from a rotation about an axis (degrees) and a center.
PoseSE3 MakePose(const Eigen::Vector3d& axis, double angle_deg, const Eigen::Vector3d& center);

// Background plane at depth `z_back` plus a thin slab at depth `z_front`
// covering x >= `front_edge_x`; camera B shifted by `baseline` along +x.
Fixture TwoPlaneFixture(double z_front, double z_back, double front_edge_x, double baseline,
                        const CameraIntrinsics& k);

// identity, pure_rotation, stereo, two_plane, box_roll30
std::vector<Fixture> StandardFixtures();
std::optional<Fixture> FindFixture(const std::string& name);

}  // namespace occmatch::synth
