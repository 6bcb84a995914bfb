#include "occmatch/occupancy.h"

#include <algorithm>
#include <limits>
#include <cmath>

#include "occmatch/error.h"

namespace occmatch {

void OccupancyConfig::Validate() const {
  OCCMATCH_CHECK(depth_bins >= 2, ErrorCode::kInvalidArgument, "occupancy needs >= 2 depth bins");
  OCCMATCH_CHECK(d_min > 0.0 && d_min < d_max, ErrorCode::kInvalidArgument,
                 "occupancy depth range must satisfy 0 < d_min < d_max");
  OCCMATCH_CHECK(spatial_stride >= 1, ErrorCode::kInvalidArgument,
                 "occupancy spatial stride must be >= 1");
}

int OccupancyConfig::BinOf(double depth) const {
  if (!(depth >= d_min && depth < d_max)) return -1;
  const int k = static_cast<int>(std::floor(depth_bins * (depth - d_min) / (d_max - d_min)));
  return std::clamp(k, 0, depth_bins - 1);
}

OccupancyGrid::OccupancyGrid(int rows, int cols, int bins, double fill)
    : rows_(rows), cols_(cols), bins_(bins),
      values_(static_cast<size_t>(rows) * cols * bins, fill) {
  OCCMATCH_CHECK(rows >= 0 && cols >= 0 && bins >= 0, ErrorCode::kInvalidArgument,
                 "negative occupancy grid size");
}

double OccupancyGrid::ColumnSum(int r, int c) const {
  double s = 0.0;
  for (int k = 0; k < bins_; ++k) s += at(r, c, k);
  return s;
}

void OccupancyFactors::Validate() const {
  OCCMATCH_CHECK(channels >= 1 && rows >= 1 && cols >= 1 && bins >= 1,
                 ErrorCode::kInvalidArgument, "occupancy factors must be non-empty");
  OCCMATCH_CHECK(feat.size() == static_cast<size_t>(channels) * rows * cols &&
                     vis.size() == static_cast<size_t>(rows) * cols * bins,
                 ErrorCode::kShapeMismatch, "occupancy factor sizes disagree with the shape");
  for (double x : feat) {
    OCCMATCH_CHECK(std::isfinite(x), ErrorCode::kInvalidArgument, "non-finite O^F entry");
  }
  for (double x : vis) {
    OCCMATCH_CHECK(std::isfinite(x), ErrorCode::kInvalidArgument, "non-finite O^V entry");
  }
}

OccupancyGrid BuildGroundTruthOccupancy(const DepthMap& depth_a, const DepthMap& depth_b,
                                        const PoseSE3& pose_a, const PoseSE3& pose_b,
                                        const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                        OccupancyTarget target, const OccupancyConfig& cfg) {
  cfg.Validate();
  OCCMATCH_CHECK(depth_a.CountValid() + depth_b.CountValid() > 0, ErrorCode::kEmptyCloud,
                 "no valid depth in either map");

  const bool to_a = target == OccupancyTarget::kA;
  const CameraIntrinsics& k_t = to_a ? k_a : k_b;
  const PoseSE3 world_to_target = (to_a ? pose_a : pose_b).Inverse();
  const int s = cfg.spatial_stride;
  OccupancyGrid grid((k_t.height + s - 1) / s, (k_t.width + s - 1) / s, cfg.depth_bins);

  auto mark = [&](int x, int y, double z) {
    const int k = cfg.BinOf(z);
    if (k >= 0) grid.at(y / s, x / s, k) = 1.0;
  };

  struct Source {
    const DepthMap* depth;
    const CameraIntrinsics* k;
    const PoseSE3* pose;
    bool is_target;
  };
  const Source sources[2] = {{&depth_a, &k_a, &pose_a, to_a}, {&depth_b, &k_b, &pose_b, !to_a}};
  for (const Source& src : sources) {
    const DepthMap& depth = *src.depth;
    // Points of the target image bin at their own pixel without a round trip.
    if (src.is_target) {
      for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
          if (depth.valid(x, y)) mark(x, y, depth.at(x, y));
        }
      }
      continue;
    }
    const PoseSE3 source_to_target = world_to_target * *src.pose;
    for (int y = 0; y < depth.height(); ++y) {
      for (int x = 0; x < depth.width(); ++x) {
        if (!depth.valid(x, y)) continue;
        const Eigen::Vector3d p =
            source_to_target * Unproject({static_cast<double>(x), static_cast<double>(y)},
                                         depth.at(x, y), *src.k);
        if (p.z() <= 0.0) continue;
        const PixelPoint px = Project(p, k_t).px;
        if (!k_t.Contains(px)) continue;
        mark(PixelColumn(px.u), PixelRow(px.v), p.z());
      }
    }
  }

  if (cfg.normalize) {
    const int rows = grid.rows();
    const int cols = grid.cols();
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double sum = grid.ColumnSum(r, c);
        if (sum <= 0.0) continue;
        for (int k = 0; k < grid.bins(); ++k) grid.at(r, c, k) /= sum;
      }
    }
  }
  return grid;
}

OccupancyGrid EstimateOccupancy(const OccupancyFactors& factors) {
  factors.Validate();
  OccupancyGrid out(factors.rows, factors.cols, factors.bins);
  const int rows = factors.rows;
  const int cols = factors.cols;
  const int bins = factors.bins;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    std::vector<double> logits(bins);
    for (int c = 0; c < cols; ++c) {
      double scale = 0.0;
      for (int ch = 0; ch < factors.channels; ++ch) scale += factors.feat_at(ch, r, c);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < bins; ++k) {
        logits[k] = scale * factors.vis_at(r, c, k);
        max_logit = std::max(max_logit, logits[k]);
      }
      double sum = 0.0;
      for (int k = 0; k < bins; ++k) {
        logits[k] = std::exp(logits[k] - max_logit);
        sum += logits[k];
      }
      for (int k = 0; k < bins; ++k) out.at(r, c, k) = logits[k] / sum;
    }
  }
  return out;
}

OccupancyFactorGrads EstimateOccupancyBackward(const OccupancyFactors& factors,
                                               const OccupancyGrid& output,
                                               const OccupancyGrid& grad_output) {
  OCCMATCH_CHECK(output.SameShape(grad_output) && output.rows() == factors.rows &&
                     output.cols() == factors.cols && output.bins() == factors.bins,
                 ErrorCode::kShapeMismatch, "gradient shape differs from the factors");
  OccupancyFactorGrads grads;
  grads.feat.assign(factors.feat.size(), 0.0);
  grads.vis.assign(factors.vis.size(), 0.0);
  const int rows = factors.rows;
  const int cols = factors.cols;
  const int bins = factors.bins;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double scale = 0.0;
      for (int ch = 0; ch < factors.channels; ++ch) scale += factors.feat_at(ch, r, c);
      double dot = 0.0;
      for (int k = 0; k < bins; ++k) dot += grad_output.at(r, c, k) * output.at(r, c, k);
      double grad_scale = 0.0;
      for (int k = 0; k < bins; ++k) {
        const double grad_logit = output.at(r, c, k) * (grad_output.at(r, c, k) - dot);
        grads.vis[(static_cast<size_t>(r) * cols + c) * bins + k] = scale * grad_logit;
        grad_scale += factors.vis_at(r, c, k) * grad_logit;
      }
      for (int ch = 0; ch < factors.channels; ++ch) {
        grads.feat[(static_cast<size_t>(ch) * rows + r) * cols + c] = grad_scale;
      }
    }
  }
  return grads;
}

double OccupancyLoss(const OccupancyGrid& estimate, const OccupancyGrid& ground_truth) {
  OCCMATCH_CHECK(estimate.SameShape(ground_truth), ErrorCode::kShapeMismatch,
                 "occupancy grids differ in shape");
  double sum = 0.0;
  size_t cells = 0;
  for (int r = 0; r < estimate.rows(); ++r) {
    for (int c = 0; c < estimate.cols(); ++c) {
      bool occupied = false;
      for (int k = 0; k < estimate.bins() && !occupied; ++k) {
        occupied = estimate.at(r, c, k) != 0.0 || ground_truth.at(r, c, k) != 0.0;
      }
      if (!occupied) continue;
      for (int k = 0; k < estimate.bins(); ++k) {
        sum += std::abs(estimate.at(r, c, k) - ground_truth.at(r, c, k));
      }
      cells += estimate.bins();
    }
  }
  return cells ? sum / static_cast<double>(cells) : 0.0;
}

}  // namespace occmatch
