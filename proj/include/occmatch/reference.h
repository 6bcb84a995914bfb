#pragma once

// Serial, deliberately plain versions of the parallel kernels. Tests compare
// the optimized paths against these; the benchmark times both.

#include "occmatch/geometry.h"
#include "occmatch/matching.h"
#include "occmatch/occupancy.h"
#include "occmatch/supervision.h"
#include "occmatch/synth.h"

namespace occmatch::reference {

ClassMap ClassifyImage(const DepthMap& depth_a, const DepthMap& depth_b, const PairGeometry& geom,
                       const OcclusionMargin& margin);

DepthMap RenderDepth(const synth::SceneSpec& scene, const PoseSE3& pose,
                     const CameraIntrinsics& k);

// Bilinear sampling written out per tap with explicit clamping.
FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg);

// Triple loop.
RowMatrix ScoreMatrix(const FeatureGrid& fa, const FeatureGrid& fb, double tau);

// Separate row and column softmax matrices, multiplied at the end.
ConfidenceMatrix DualSoftmax(const RowMatrix& scores);

OccupancyGrid EstimateOccupancy(const OccupancyFactors& factors);

}  // namespace occmatch::reference
