#include "occmatch/supervision.h"

#include <algorithm>

#include "occmatch/error.h"

namespace occmatch {

const char* PixelClassName(PixelClass cls) {
  switch (cls) {
    case PixelClass::kCovisible: return "covisible";
    case PixelClass::kOccludedInOther: return "occluded";
    case PixelClass::kOutOfBounds: return "out_of_bounds";
    case PixelClass::kInvalidDepth: return "invalid_depth";
    case PixelClass::kBehindCamera: return "behind_camera";
  }
  return "unknown";
}

void OcclusionMargin::Validate() const {
  OCCMATCH_CHECK(absolute >= 0.0 && relative >= 0.0, ErrorCode::kInvalidArgument,
                 "occlusion margin terms must be non-negative");
}

PixelClassification ClassifyPoint(const PixelPoint& px, double depth, const DepthMap& depth_b,
                                  const PairGeometry& geom, const OcclusionMargin& margin) {
  PixelClassification out;
  if (!(depth > 0.0)) {
    out.cls = PixelClass::kInvalidDepth;
    return out;
  }
  const Reprojection rep = Reproject(px, depth, geom.k_a, geom.k_b, geom.t_ba);
  if (rep.behind_camera) {
    out.cls = PixelClass::kBehindCamera;
    return out;
  }
  out.reprojected = rep.px;
  out.projected_depth = rep.depth;
  if (!geom.k_b.Contains(rep.px)) {
    out.cls = PixelClass::kOutOfBounds;
    return out;
  }
  const std::optional<double> observed = SampleDepthBilinear(depth_b, rep.px);
  if (!observed) {
    out.cls = PixelClass::kOutOfBounds;
    return out;
  }
  out.cls = rep.depth - *observed > margin(*observed) ? PixelClass::kOccludedInOther
                                                      : PixelClass::kCovisible;
  return out;
}

PixelClassification ClassifyPixel(const PixelPoint& px, const DepthMap& depth_a,
                                  const DepthMap& depth_b, const PairGeometry& geom,
                                  const OcclusionMargin& margin) {
  const int x = PixelColumn(px.u);
  const int y = PixelRow(px.v);
  OCCMATCH_CHECK(x >= 0 && y >= 0 && x < depth_a.width() && y < depth_a.height(),
                 ErrorCode::kInvalidArgument, "pixel outside image A");
  return ClassifyPoint(px, depth_a.at(x, y), depth_b, geom, margin);
}

ClassMap ClassifyImage(const DepthMap& depth_a, const DepthMap& depth_b, const PairGeometry& geom,
                       const OcclusionMargin& margin) {
  ClassMap out;
  out.width = depth_a.width();
  out.height = depth_a.height();
  out.pixels.resize(static_cast<size_t>(out.width) * out.height);
  const int width = out.width;
  const int height = out.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.pixels[static_cast<size_t>(y) * width + x] =
          ClassifyPoint({static_cast<double>(x), static_cast<double>(y)}, depth_a.at(x, y),
                        depth_b, geom, margin);
    }
  }
  return out;
}

PairStats PairStatsFromClassMap(const ClassMap& classes) {
  PairStats stats;
  stats.total_pixels = classes.pixels.size();
  for (const auto& p : classes.pixels) ++stats.counts[static_cast<int>(p.cls)];
  if (stats.total_pixels > 0) {
    const double n = static_cast<double>(stats.total_pixels);
    stats.occlusion_ratio = stats.count(PixelClass::kOccludedInOther) / n;
    stats.overlap_score =
        (stats.count(PixelClass::kCovisible) + stats.count(PixelClass::kOccludedInOther)) / n;
  }
  return stats;
}

PairStats ComputePairStats(const DepthMap& depth_a, const DepthMap& depth_b,
                           const PairGeometry& geom, const OcclusionMargin& margin) {
  OCCMATCH_CHECK(depth_a.width() > 0 && depth_a.height() > 0, ErrorCode::kEmptyDepth,
                 "image A is empty");
  OCCMATCH_CHECK(depth_a.CountValid() > 0, ErrorCode::kEmptyDepth,
                 "image A has no valid depth");
  return PairStatsFromClassMap(ClassifyImage(depth_a, depth_b, geom, margin));
}

PatchGrid PatchGrid::ForImage(int width, int height, int stride) {
  OCCMATCH_CHECK(stride >= 1, ErrorCode::kInvalidArgument, "patch stride must be >= 1");
  PatchGrid g;
  g.stride = stride;
  g.rows = (height + stride - 1) / stride;
  g.cols = (width + stride - 1) / stride;
  return g;
}

int PatchGrid::IndexOf(const PixelPoint& px) const {
  const int col = std::clamp(PixelColumn(px.u) / stride, 0, cols - 1);
  const int row = std::clamp(PixelRow(px.v) / stride, 0, rows - 1);
  return row * cols + col;
}

PixelPoint PatchGrid::CenterPixel(int index, int width, int height) const {
  const int x0 = (index % cols) * stride;
  const int y0 = (index / cols) * stride;
  const int ex = std::min(stride, width - x0);
  const int ey = std::min(stride, height - y0);
  return {static_cast<double>(x0 + ex / 2), static_cast<double>(y0 + ey / 2)};
}

namespace {

double PatchDepth(const DepthMap& depth, const PatchGrid& grid, int index, PatchDepthMode mode) {
  const PixelPoint c = grid.CenterPixel(index, depth.width(), depth.height());
  if (mode == PatchDepthMode::kCenterPixel) {
    return depth.at(PixelColumn(c.u), PixelRow(c.v));
  }
  const int x0 = (index % grid.cols) * grid.stride;
  const int y0 = (index / grid.cols) * grid.stride;
  const int x1 = std::min(x0 + grid.stride, depth.width());
  const int y1 = std::min(y0 + grid.stride, depth.height());
  double sum = 0.0;
  int n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (depth.valid(x, y)) {
        sum += depth.at(x, y);
        ++n;
      }
    }
  }
  return n ? sum / n : 0.0;
}

// Labels every patch of `src` against `dst`. Index i of the result holds the
// classification of patch i's center.
std::vector<PixelClassification> ClassifyPatches(const DepthMap& src, const DepthMap& dst,
                                                 const PairGeometry& geom, const PatchGrid& grid,
                                                 const SupervisionOptions& options) {
  std::vector<PixelClassification> out(static_cast<size_t>(grid.count()));
  const int n = grid.count();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const PixelPoint c = grid.CenterPixel(i, src.width(), src.height());
    out[i] = ClassifyPoint(c, PatchDepth(src, grid, i, options.depth_mode), dst, geom,
                           options.margin);
  }
  return out;
}

}  // namespace

CoarseMatchSet CoarseMatchGroundTruth(const DepthMap& depth_a, const DepthMap& depth_b,
                                      const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                      const PoseSE3& t_ba, const PoseSE3& t_ab,
                                      const SupervisionOptions& options) {
  options.margin.Validate();
  OCCMATCH_CHECK(depth_a.width() == k_a.width && depth_a.height() == k_a.height &&
                     depth_b.width() == k_b.width && depth_b.height() == k_b.height,
                 ErrorCode::kShapeMismatch, "depth map size differs from intrinsics");
  OCCMATCH_CHECK(depth_a.CountValid() > 0, ErrorCode::kEmptyDepth, "image A has no valid depth");

  CoarseMatchSet out;
  out.patch_stride = options.patch_stride;
  out.grid_a = PatchGrid::ForImage(depth_a.width(), depth_a.height(), options.patch_stride);
  out.grid_b = PatchGrid::ForImage(depth_b.width(), depth_b.height(), options.patch_stride);

  const auto forward =
      ClassifyPatches(depth_a, depth_b, {k_a, k_b, t_ba}, out.grid_a, options);
  for (int i = 0; i < out.grid_a.count(); ++i) {
    const auto& c = forward[i];
    if (c.cls == PixelClass::kCovisible) {
      out.vv.push_back({i, out.grid_b.IndexOf(c.reprojected)});
    } else if (c.cls == PixelClass::kOccludedInOther) {
      out.vo.push_back({i, out.grid_b.IndexOf(c.reprojected)});
    }
  }

  const auto backward =
      ClassifyPatches(depth_b, depth_a, {k_b, k_a, t_ab}, out.grid_b, options);
  for (int j = 0; j < out.grid_b.count(); ++j) {
    const auto& c = backward[j];
    if (c.cls == PixelClass::kOccludedInOther) {
      out.ov.push_back({out.grid_a.IndexOf(c.reprojected), j});
    }
  }
  std::sort(out.ov.begin(), out.ov.end());
  out.ov.erase(std::unique(out.ov.begin(), out.ov.end()), out.ov.end());
  return out;
}

}  // namespace occmatch
