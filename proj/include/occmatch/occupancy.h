#pragma once

#include <vector>

#include "occmatch/geometry.h"

namespace occmatch {

struct OccupancyConfig {
  int depth_bins = 64;
  double d_min = 0.1;
  double d_max = 10.0;
  int spatial_stride = 2;
  // Normalize each occupied ground-truth column to sum 1. When false the
  // ground truth stays binary.
  bool normalize = true;

  void Validate() const;
  // Half-open uniform binning over [d_min, d_max); -1 outside the range.
  int BinOf(double depth) const;
};

// Per-column depth distributions on the half-resolution grid, stored in
// (row, col, bin) order.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int rows, int cols, int bins, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int bins() const { return bins_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at(int r, int c, int k) const { return values_[Offset(r, c, k)]; }
  double& at(int r, int c, int k) { return values_[Offset(r, c, k)]; }
  double ColumnSum(int r, int c) const;
  bool SameShape(const OccupancyGrid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && bins_ == other.bins_;
  }

 private:
  size_t Offset(int r, int c, int k) const {
    return (static_cast<size_t>(r) * cols_ + c) * bins_ + k;
  }

  int rows_ = 0;
  int cols_ = 0;
  int bins_ = 0;
  std::vector<double> values_;
};

// feat: C x rows x cols (channel-major); vis: rows x cols x D.
struct OccupancyFactors {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  int bins = 0;
  std::vector<double> feat;
  std::vector<double> vis;

  void Validate() const;
  double feat_at(int ch, int r, int c) const {
    return feat[(static_cast<size_t>(ch) * rows + r) * cols + c];
  }
  double vis_at(int r, int c, int k) const {
    return vis[(static_cast<size_t>(r) * cols + c) * bins + k];
  }
};

enum class OccupancyTarget { kA, kB };

// Fuses both depth maps into a world cloud and bins it into the target
// camera's frustum voxels. Throws kEmptyCloud when neither map has a valid
// pixel.
OccupancyGrid BuildGroundTruthOccupancy(const DepthMap& depth_a, const DepthMap& depth_b,
                                        const PoseSE3& pose_a, const PoseSE3& pose_b,
                                        const CameraIntrinsics& k_a, const CameraIntrinsics& k_b,
                                        OccupancyTarget target, const OccupancyConfig& cfg);

// Per-column softmax over depth of the channel-summed outer product.
OccupancyGrid EstimateOccupancy(const OccupancyFactors& factors);

struct OccupancyFactorGrads {
  std::vector<double> feat;
  std::vector<double> vis;
};

// Vector-Jacobian product of EstimateOccupancy: given dL/dO, returns dL/dO^F
// and dL/dO^V.
OccupancyFactorGrads EstimateOccupancyBackward(const OccupancyFactors& factors,
                                               const OccupancyGrid& output,
                                               const OccupancyGrid& grad_output);

// Mean absolute difference over the columns where either grid is non-zero.
// Columns empty in both grids are masked out; all-empty inputs give 0.
// Throws kShapeMismatch.
double OccupancyLoss(const OccupancyGrid& estimate, const OccupancyGrid& ground_truth);

}  // namespace occmatch
