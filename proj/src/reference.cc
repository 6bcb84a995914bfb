#include "occmatch/reference.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occmatch/error.h"

namespace occmatch::reference {

ClassMap ClassifyImage(const DepthMap& depth_a, const DepthMap& depth_b, const PairGeometry& geom,
                       const OcclusionMargin& margin) {
  ClassMap out;
  out.width = depth_a.width();
  out.height = depth_a.height();
  for (int y = 0; y < depth_a.height(); ++y) {
    for (int x = 0; x < depth_a.width(); ++x) {
      out.pixels.push_back(ClassifyPixel({static_cast<double>(x), static_cast<double>(y)},
                                         depth_a, depth_b, geom, margin));
    }
  }
  return out;
}

DepthMap RenderDepth(const synth::SceneSpec& scene, const PoseSE3& pose,
                     const CameraIntrinsics& k) {
  DepthMap depth(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const auto hit =
          synth::CastPixel(scene, pose, k, {static_cast<double>(x), static_cast<double>(y)});
      if (hit) depth.at(x, y) = static_cast<float>(hit->t);
    }
  }
  return depth;
}

namespace {

double Sample(const FeatureGrid& f, int ch, double r, double c) {
  r = std::min(std::max(r, 0.0), f.rows() - 1.0);
  c = std::min(std::max(c, 0.0), f.cols() - 1.0);
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  double acc = 0.0;
  for (int dr = 0; dr <= 1; ++dr) {
    for (int dc = 0; dc <= 1; ++dc) {
      const double w = (dr ? r - r0 : 1.0 - (r - r0)) * (dc ? c - c0 : 1.0 - (c - c0));
      if (w == 0.0) continue;
      acc += w * f.at(ch, std::min(r0 + dr, f.rows() - 1), std::min(c0 + dc, f.cols() - 1));
    }
  }
  return acc;
}

}  // namespace

FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg) {
  FeatureGrid out = f;
  const double theta = theta_deg * std::numbers::pi / 180.0;
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int r = 0; r < f.rows(); ++r) {
      for (int c = 0; c < f.cols(); ++c) {
        double acc = f.at(ch, r, c);
        for (int k = 0; k < 4; ++k) {
          const double a = theta + k * std::numbers::pi / 2.0;
          acc += Sample(f, ch, r + std::cos(a), c + std::sin(a));
        }
        out.at(ch, r, c) = acc / 5.0;
      }
    }
  }
  return out;
}

RowMatrix ScoreMatrix(const FeatureGrid& fa, const FeatureGrid& fb, double tau) {
  OCCMATCH_CHECK(fa.channels() == fb.channels(), ErrorCode::kChannelMismatch,
                 "feature grids have different channel counts");
  RowMatrix s(fa.cells(), fb.cells());
  for (int i = 0; i < fa.cells(); ++i) {
    for (int j = 0; j < fb.cells(); ++j) {
      double dot = 0.0;
      for (int ch = 0; ch < fa.channels(); ++ch) {
        dot += fa.at(ch, i / fa.cols(), i % fa.cols()) * fb.at(ch, j / fb.cols(), j % fb.cols());
      }
      s(i, j) = dot / tau;
    }
  }
  return s;
}

ConfidenceMatrix DualSoftmax(const RowMatrix& scores) {
  const Eigen::Index rows = scores.rows();
  const Eigen::Index cols = scores.cols();
  RowMatrix by_row(rows, cols);
  RowMatrix by_col(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double m = scores.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) sum += std::exp(scores(i, j) - m);
    for (Eigen::Index j = 0; j < cols; ++j) by_row(i, j) = std::exp(scores(i, j) - m) / sum;
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double m = scores.col(j).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) sum += std::exp(scores(i, j) - m);
    for (Eigen::Index i = 0; i < rows; ++i) by_col(i, j) = std::exp(scores(i, j) - m) / sum;
  }
  return by_row.cwiseProduct(by_col);
}

OccupancyGrid EstimateOccupancy(const OccupancyFactors& factors) {
  OccupancyGrid out(factors.rows, factors.cols, factors.bins);
  for (int r = 0; r < factors.rows; ++r) {
    for (int c = 0; c < factors.cols; ++c) {
      double scale = 0.0;
      for (int ch = 0; ch < factors.channels; ++ch) scale += factors.feat_at(ch, r, c);
      double m = scale * factors.vis_at(r, c, 0);
      for (int k = 1; k < factors.bins; ++k) m = std::max(m, scale * factors.vis_at(r, c, k));
      double sum = 0.0;
      for (int k = 0; k < factors.bins; ++k) sum += std::exp(scale * factors.vis_at(r, c, k) - m);
      for (int k = 0; k < factors.bins; ++k) {
        out.at(r, c, k) = std::exp(scale * factors.vis_at(r, c, k) - m) / sum;
      }
    }
  }
  return out;
}

}  // namespace occmatch::reference
