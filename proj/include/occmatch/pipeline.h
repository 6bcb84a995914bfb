#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occmatch/geometry.h"
#include "occmatch/matching.h"

namespace occmatch {

// One coarse comparison: A aligned at angle_a, B at angle_b.
struct Branch {
  double angle_a = 0.0;
  double angle_b = 0.0;
};

// (0, 0) first, then (theta, 0) and (0, theta) for every non-zero angle.
std::vector<Branch> MatchingBranches(const std::vector<double>& angles);

struct FineOptions {
  // Search for the closest fine cell within this many cells of the coarse
  // B patch center, then build the heatmap around it.
  int search_radius = 6;
  int window_radius = 4;
};

struct PairFeatures {
  const FeatureGrid* coarse_a = nullptr;
  const FeatureGrid* coarse_b = nullptr;
  const FeatureGrid* fine_a = nullptr;
  const FeatureGrid* fine_b = nullptr;
  int width_a = 0;
  int height_a = 0;
  int width_b = 0;
  int height_b = 0;
};

struct PipelineMatch {
  int patch_a = 0;
  int patch_b = 0;
  double confidence = 0.0;
  int branch = 0;
  PixelPoint a;  // keypoint in A
  PixelPoint b;  // refined location in B
};

struct PipelineResult {
  std::vector<Branch> branches;
  std::vector<PipelineMatch> matches;
};

// Gaussian correlation heatmap of `query` against the fine cells of `fine`
// around (row, col). Cells outside the grid get weight 0. The bandwidth is
// the median squared feature step between the center cell and its neighbors.
Heatmap FineHeatmap(const FeatureGrid& fine, const std::vector<double>& query, int row, int col,
                    int radius);

// Per-entry gumbel selection over the dual-softmax confidences of each
// (aligned A, aligned B) branch without materializing the per-branch
// confidence matrices. Scores are produced in row blocks, so only one score
// matrix and the output are alive at a time. Agrees with
// GumbelSelect(DualSoftmax(ScoreMatrix(...))) up to rounding of the product.
// Entries whose candidates all lie below `min_confidence` skip the draw and
// are left at confidence 0, branch 0; at a match threshold of at least
// `min_confidence` they could never have been extracted anyway.
GumbelSelection SelectBranchesStreaming(std::span<const FeatureGrid> aligned_a,
                                        std::span<const FeatureGrid> aligned_b, double tau,
                                        const GumbelOptions& options,
                                        double min_confidence = 0.0);

// Coarse matching over all branches followed by fine refinement. Matches are
// ordered by (patch_a, patch_b).
PipelineResult MatchPair(const PairFeatures& input, const MatchingConfig& config,
                         const FineOptions& fine = {});

}  // namespace occmatch
