#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

#include "occmatch/geometry.h"

namespace occmatch {

enum class PixelClass : std::uint8_t {
  kCovisible = 0,
  kOccludedInOther = 1,
  kOutOfBounds = 2,
  kInvalidDepth = 3,
  kBehindCamera = 4,
};
inline constexpr int kNumPixelClasses = 5;

const char* PixelClassName(PixelClass cls);

// Depth-dependent occlusion tolerance: max(absolute, relative * depth).
struct OcclusionMargin {
  double absolute = 0.05;
  double relative = 0.05;

  double operator()(double depth) const {
    return std::max(absolute, relative * depth);
  }
  void Validate() const;
};

// Which depth is reprojected for a patch.
enum class PatchDepthMode {
  kCenterPixel,
  // Mean of the valid depths inside the patch, placed at the center pixel.
  kPatchMean,
};

struct PairGeometry {
  CameraIntrinsics k_a;
  CameraIntrinsics k_b;
  PoseSE3 t_ba;  // camera A -> camera B
};

struct PixelClassification {
  PixelClass cls = PixelClass::kInvalidDepth;
  PixelPoint reprojected;       // meaningful for kCovisible and kOccludedInOther
  double projected_depth = 0.0;
};

// Classifies one pixel of image A against image B using its own depth.
PixelClassification ClassifyPixel(const PixelPoint& px, const DepthMap& depth_a,
                                  const DepthMap& depth_b, const PairGeometry& geom,
                                  const OcclusionMargin& margin);

// Same test with an explicit depth for the point in A.
PixelClassification ClassifyPoint(const PixelPoint& px, double depth, const DepthMap& depth_b,
                                  const PairGeometry& geom, const OcclusionMargin& margin);

struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<PixelClassification> pixels;  // row-major

  const PixelClassification& at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
};

// Classifies every pixel of A. Rows are processed in parallel.
ClassMap ClassifyImage(const DepthMap& depth_a, const DepthMap& depth_b, const PairGeometry& geom,
                       const OcclusionMargin& margin);

struct PairStats {
  double occlusion_ratio = 0.0;
  double overlap_score = 0.0;
  std::array<std::size_t, kNumPixelClasses> counts{};
  std::size_t total_pixels = 0;

  std::size_t count(PixelClass cls) const { return counts[static_cast<int>(cls)]; }
  double fraction(PixelClass cls) const {
    return total_pixels ? static_cast<double>(count(cls)) / total_pixels : 0.0;
  }
};

// Throws kEmptyDepth when A has no valid pixel.
PairStats ComputePairStats(const DepthMap& depth_a, const DepthMap& depth_b,
                           const PairGeometry& geom, const OcclusionMargin& margin);
PairStats PairStatsFromClassMap(const ClassMap& classes);

struct PatchPair {
  int a = 0;
  int b = 0;
  auto operator<=>(const PatchPair&) const = default;
};

struct PatchGrid {
  int stride = 8;
  int rows = 0;
  int cols = 0;

  static PatchGrid ForImage(int width, int height, int stride);
  int count() const { return rows * cols; }
  // Index of the patch containing a continuous pixel location.
  int IndexOf(const PixelPoint& px) const;
  // Integer center pixel of a (possibly partial) edge patch.
  PixelPoint CenterPixel(int index, int width, int height) const;
};

struct CoarseMatchSet {
  int patch_stride = 8;
  PatchGrid grid_a;
  PatchGrid grid_b;
  std::vector<PatchPair> vv;
  std::vector<PatchPair> vo;
  std::vector<PatchPair> ov;

  bool empty() const { return vv.empty() && vo.empty() && ov.empty(); }
};

struct SupervisionOptions {
  OcclusionMargin margin;
  int patch_stride = 8;
  PatchDepthMode depth_mode = PatchDepthMode::kCenterPixel;
};

// vv/vo from A's patch centers, ov from B's patch centers with the roles
// swapped. Throws kEmptyDepth when A has no valid pixel.
CoarseMatchSet CoarseMatchGroundTruth(const DepthMap& depth_a, const DepthMap& depth_b,
                                      const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                      const PoseSE3& t_ba, const PoseSE3& t_ab,
                                      const SupervisionOptions& options);

}  // namespace occmatch
