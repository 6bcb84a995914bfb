#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "occmatch/geometry.h"
#include "occmatch/random.h"
#include "occmatch/supervision.h"

namespace occmatch {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// n_a x n_b matrix with entries in [0, 1].
using ConfidenceMatrix = RowMatrix;

// Channel-major C x rows x cols feature tensor sampled every `stride` source
// pixels (8 for coarse grids, 2 for fine grids).
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int channels, int rows, int cols, int stride, double fill = 0.0);
  FeatureGrid(int channels, int rows, int cols, int stride, std::vector<double> values);

  int channels() const { return channels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int stride() const { return stride_; }
  int cells() const { return rows_ * cols_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at(int ch, int r, int c) const { return values_[Offset(ch, r, c)]; }
  double& at(int ch, int r, int c) { return values_[Offset(ch, r, c)]; }
  bool SameShape(const FeatureGrid& o) const {
    return channels_ == o.channels_ && rows_ == o.rows_ && cols_ == o.cols_;
  }
  // Feature vector of one cell copied out of the channel-major layout.
  std::vector<double> Cell(int r, int c) const;

 private:
  size_t Offset(int ch, int r, int c) const {
    return (static_cast<size_t>(ch) * rows_ + r) * cols_ + c;
  }

  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  int stride_ = 8;
  std::vector<double> values_;
};

enum class GumbelGranularity {
  kPerEntry,
  // One draw per candidate matrix, scored by its mean log row maximum.
  kPerMatrix,
};

struct GumbelOptions {
  double temperature = 1.0;
  bool hard = true;
  GumbelGranularity granularity = GumbelGranularity::kPerEntry;
  std::uint64_t seed = 0;
};

struct MatchingConfig {
  double temperature = 0.1;
  std::vector<double> angles = {0.0, 30.0};
  GumbelOptions gumbel;
  double match_threshold = 0.2;
  bool mutual = false;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 0.1;

  void Validate() const;
};

// Five-point cross mean with replicate padding.
FeatureGrid NeighborhoodMean(const FeatureGrid& f);

// Averages each cell with its four neighbors sampled at offsets rotated by
// theta (degrees, row index paired with cos, column with sin) using bilinear
// interpolation and replicate padding. Cell indices do not move.
FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg);
// Same, but throws kUnknownAngle unless theta is one of `allowed_angles`.
FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg,
                          std::span<const double> allowed_angles);

// S(i, j) = <fa_i, fb_j> / tau over flattened cell indices.
RowMatrix ScoreMatrix(const FeatureGrid& fa, const FeatureGrid& fb, double tau);

// Per-row and per-column max and exp-sum of a score matrix.
struct SoftmaxStats {
  std::vector<double> row_max, row_sum, col_max, col_sum;
};
SoftmaxStats ComputeSoftmaxStats(const RowMatrix& scores);

// exp(x) with the call skipped where the result underflows to exactly 0.
inline double ExpOrZero(double x) { return x < -746.0 ? 0.0 : std::exp(x); }

// One dual-softmax entry from the statistics of its row and column.
inline double DualSoftmaxEntry(double s, const SoftmaxStats& st, Eigen::Index i, Eigen::Index j) {
  return ExpOrZero(2.0 * s - st.row_max[i] - st.col_max[j]) / (st.row_sum[i] * st.col_sum[j]);
}

// Row softmax times column softmax, elementwise.
ConfidenceMatrix DualSoftmax(const RowMatrix& scores);
// Overwrites `scores` with its dual softmax; avoids a second n_a x n_b buffer.
void DualSoftmaxInPlace(RowMatrix& scores);
// Vector-Jacobian product: dL/dS given dL/dP.
RowMatrix DualSoftmaxBackward(const RowMatrix& scores, const RowMatrix& grad_confidence);

struct GumbelSelection {
  ConfidenceMatrix confidence;
  // Per-entry index of the candidate with the largest perturbed log value.
  std::vector<std::uint8_t> branch;
};

struct EntrySelection {
  double confidence = 0.0;
  int branch = 0;
};

// Per-entry selection among `num` candidate values; `entry` keys the random
// stream so any evaluation order gives the same result.
EntrySelection GumbelSelectEntry(const double* values, int num, std::uint64_t entry,
                                 const CounterRng& rng, const GumbelOptions& options);

// Throws kEmptyCandidates or kShapeMismatch. Deterministic for a fixed seed.
GumbelSelection GumbelSelect(std::span<const ConfidenceMatrix> candidates,
                             const GumbelOptions& options);

struct CoarseMatch {
  int a = 0;
  int b = 0;
  double confidence = 0.0;
};

// Entries with confidence >= threshold, optionally restricted to mutual
// row/column maxima (ties go to the smaller index). Ordered by (a, b).
std::vector<CoarseMatch> ExtractMatches(const ConfidenceMatrix& p_hat, double threshold,
                                        bool mutual);

struct CoarseLossResult {
  double value = 0.0;
  // Some referenced confidence was <= 1e-12 and was clamped before the log.
  bool clamped = false;
};

// L_c = g(vv) + lambda1 * (g(vo) + g(ov)), g = mean negative log confidence.
CoarseLossResult CoarseLoss(const ConfidenceMatrix& p_hat, const CoarseMatchSet& gt,
                            double lambda1);

// Odd square window of non-negative weights, row-major.
struct Heatmap {
  int size = 1;
  std::vector<double> weights;

  int radius() const { return size / 2; }
  double at(int dy, int dx) const {
    return weights[static_cast<size_t>(dy + radius()) * size + (dx + radius())];
  }
};

// window_center + cell_size * E[offset] under the sum-normalized heatmap.
// Throws kInvalidArgument for even/mismatched windows and kDegenerateHeatmap
// for a non-positive sum.
PixelPoint RefineFineMatch(const Heatmap& heatmap, const PixelPoint& window_center,
                           double cell_size = 1.0);

enum class MatchLabel : std::uint8_t { kVV, kVO, kOV };
const char* MatchLabelName(MatchLabel label);

// Per class mean squared pixel error, weighted (1, lambda2, lambda2).
double FineLoss(std::span<const PixelPoint> predicted, std::span<const PixelPoint> ground_truth,
                std::span<const MatchLabel> labels, double lambda2);

double TotalLoss(double coarse, double fine, double occupancy, double lambda3, double lambda4);

}  // namespace occmatch
