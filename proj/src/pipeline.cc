#include "occmatch/pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "occmatch/error.h"
#include "occmatch/supervision.h"

namespace occmatch {

namespace {

double SquaredDistance(const FeatureGrid& f, const std::vector<double>& q, int r, int c) {
  double d = 0.0;
  for (int ch = 0; ch < f.channels(); ++ch) {
    const double x = f.at(ch, r, c) - q[ch];
    d += x * x;
  }
  return d;
}

bool InGrid(const FeatureGrid& f, int r, int c) {
  return r >= 0 && c >= 0 && r < f.rows() && c < f.cols();
}

// Fine cell containing a pixel and that cell's center in pixel coordinates.
struct FineCell {
  int row = 0;
  int col = 0;
};

FineCell CellOf(const FeatureGrid& fine, const PixelPoint& px) {
  return {std::clamp(PixelRow(px.v) / fine.stride(), 0, fine.rows() - 1),
          std::clamp(PixelColumn(px.u) / fine.stride(), 0, fine.cols() - 1)};
}

PixelPoint CellCenter(const FeatureGrid& fine, int r, int c) {
  const double s = fine.stride();
  return {s * c + 0.5 * (s - 1.0), s * r + 0.5 * (s - 1.0)};
}

using CellMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

CellMatrix CellMajor(const FeatureGrid& f) {
  return Eigen::Map<const CellMatrix>(f.values().data(), f.channels(), f.cells()).transpose();
}

constexpr Eigen::Index kRowBlock = 128;

// Rows [r0, r0 + n) of a^T b / tau. Every caller uses the same blocks, so
// recomputed blocks are bitwise identical.
void ScoreBlock(const CellMatrix& a, const CellMatrix& b, double tau, Eigen::Index r0,
                Eigen::Index n, RowMatrix& out) {
  out.resize(n, b.rows());
  out.noalias() = (1.0 / tau) * a.middleRows(r0, n) * b.transpose();
}

}  // namespace

GumbelSelection SelectBranchesStreaming(std::span<const FeatureGrid> aligned_a,
                                        std::span<const FeatureGrid> aligned_b, double tau,
                                        const GumbelOptions& options,
                                        double min_confidence) {
  OCCMATCH_CHECK(!aligned_a.empty(), ErrorCode::kEmptyCandidates, "no branches");
  OCCMATCH_CHECK(aligned_a.size() == aligned_b.size(), ErrorCode::kShapeMismatch,
                 "branch lists differ in length");
  OCCMATCH_CHECK(aligned_a.size() <= 255, ErrorCode::kInvalidArgument, "too many branches");
  OCCMATCH_CHECK(tau > 0.0, ErrorCode::kInvalidArgument, "temperature must be > 0");
  OCCMATCH_CHECK(min_confidence >= 0.0 && min_confidence <= 1.0, ErrorCode::kInvalidArgument,
                 "min_confidence must lie in [0, 1]");
  OCCMATCH_CHECK(options.temperature > 0.0, ErrorCode::kInvalidArgument,
                 "gumbel temperature must be > 0");
  OCCMATCH_CHECK(options.granularity == GumbelGranularity::kPerEntry,
                 ErrorCode::kInvalidArgument, "streaming selection is per entry only");
  const int num = static_cast<int>(aligned_a.size());
  std::vector<CellMatrix> a(num), b(num);
  for (int k = 0; k < num; ++k) {
    OCCMATCH_CHECK(aligned_a[k].SameShape(aligned_a[0]) && aligned_b[k].SameShape(aligned_b[0]),
                   ErrorCode::kShapeMismatch, "branches differ in grid shape");
    OCCMATCH_CHECK(aligned_a[k].channels() == aligned_b[k].channels(),
                   ErrorCode::kChannelMismatch, "A and B differ in channel count");
    a[k] = CellMajor(aligned_a[k]);
    b[k] = CellMajor(aligned_b[k]);
  }
  const Eigen::Index rows = a[0].rows();
  const Eigen::Index cols = b[0].rows();
  OCCMATCH_CHECK(rows > 0 && cols > 0, ErrorCode::kInvalidArgument, "empty feature grid");

  // Pass 1: softmax statistics per branch from the blocked scores.
  std::vector<SoftmaxStats> stats(num);
  {
    RowMatrix s(rows, cols);
    RowMatrix block;
    for (int k = 0; k < num; ++k) {
      for (Eigen::Index r0 = 0; r0 < rows; r0 += kRowBlock) {
        const Eigen::Index n = std::min(kRowBlock, rows - r0);
        ScoreBlock(a[k], b[k], tau, r0, n, block);
        s.middleRows(r0, n) = block;
      }
      OCCMATCH_CHECK(s.allFinite(), ErrorCode::kInvalidArgument, "non-finite score");
      stats[k] = ComputeSoftmaxStats(s);
    }
  }

  // Pass 2: recompute each block, convert to confidences, select.
  GumbelSelection out;
  out.confidence.resize(rows, cols);
  out.branch.assign(static_cast<size_t>(rows * cols), 0);
  const CounterRng rng(options.seed);
  // P <= exp(2 s - row_max - col_max) because both exp-sums are >= 1.
  const double log_floor =
      min_confidence > 0.0 ? std::log(min_confidence) : -std::numeric_limits<double>::infinity();
  std::vector<RowMatrix> blocks(num);
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kRowBlock) {
    const Eigen::Index n = std::min(kRowBlock, rows - r0);
    for (int k = 0; k < num; ++k) {
      ScoreBlock(a[k], b[k], tau, r0, n, blocks[k]);
      RowMatrix& blk = blocks[k];
#pragma omp parallel for schedule(static)
      for (Eigen::Index i = 0; i < n; ++i) {
        const SoftmaxStats& st = stats[k];
        const double rm = st.row_max[r0 + i];
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double s = blk(i, j);
          const double x = 2.0 * s - rm - st.col_max[j];
          // Below the floor keep the (strictly negative) exponent so the
          // entry can still be finished if another branch keeps it alive.
          blk(i, j) = x < log_floor ? x : DualSoftmaxEntry(s, st, r0 + i, j);
        }
      }
    }
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      double values[256];
      for (Eigen::Index j = 0; j < cols; ++j) {
        const std::int64_t e = (r0 + i) * cols + j;
        if (num == 1) {
          out.confidence.data()[e] = std::max(blocks[0](i, j), 0.0);
          continue;
        }
        bool any = false;
        for (int k = 0; k < num; ++k) {
          values[k] = blocks[k](i, j);
          any = any || values[k] >= min_confidence;
        }
        if (!any) {
          out.confidence.data()[e] = 0.0;
          continue;
        }
        for (int k = 0; k < num; ++k) {
          if (values[k] < 0.0) {
            values[k] = ExpOrZero(values[k]) / (stats[k].row_sum[r0 + i] * stats[k].col_sum[j]);
          }
        }
        const EntrySelection pick =
            GumbelSelectEntry(values, num, static_cast<std::uint64_t>(e), rng, options);
        out.branch[e] = static_cast<std::uint8_t>(pick.branch);
        out.confidence.data()[e] = pick.confidence;
      }
    }
  }
  return out;
}

std::vector<Branch> MatchingBranches(const std::vector<double>& angles) {
  std::vector<Branch> out = {{0.0, 0.0}};
  for (double a : angles) {
    if (a == 0.0) continue;
    out.push_back({a, 0.0});
    out.push_back({0.0, a});
  }
  return out;
}

Heatmap FineHeatmap(const FeatureGrid& fine, const std::vector<double>& query, int row, int col,
                    int radius) {
  OCCMATCH_CHECK(radius >= 0, ErrorCode::kInvalidArgument, "heatmap radius must be >= 0");
  OCCMATCH_CHECK(static_cast<int>(query.size()) == fine.channels(), ErrorCode::kChannelMismatch,
                 "query length differs from the fine channel count");
  OCCMATCH_CHECK(InGrid(fine, row, col), ErrorCode::kInvalidArgument,
                 "heatmap center outside the fine grid");
  std::vector<double> steps;
  const std::vector<double> center = fine.Cell(row, col);
  const int nbr[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (const auto& o : nbr) {
    if (InGrid(fine, row + o[0], col + o[1])) {
      steps.push_back(SquaredDistance(fine, center, row + o[0], col + o[1]));
    }
  }
  double sigma2 = 1.0;
  if (!steps.empty()) {
    std::sort(steps.begin(), steps.end());
    const size_t m = steps.size();
    const double med = m % 2 ? steps[m / 2] : 0.5 * (steps[m / 2 - 1] + steps[m / 2]);
    if (med > 0.0) sigma2 = med;
  }

  Heatmap h;
  h.size = 2 * radius + 1;
  h.weights.assign(static_cast<size_t>(h.size) * h.size, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (InGrid(fine, row + dy, col + dx)) {
        best = std::min(best, SquaredDistance(fine, query, row + dy, col + dx));
      }
    }
  }
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (!InGrid(fine, row + dy, col + dx)) continue;
      const double d = SquaredDistance(fine, query, row + dy, col + dx);
      h.weights[static_cast<size_t>(dy + radius) * h.size + (dx + radius)] =
          std::exp(-(d - best) / (2.0 * sigma2));
    }
  }
  return h;
}

PipelineResult MatchPair(const PairFeatures& in, const MatchingConfig& config,
                         const FineOptions& fine) {
  config.Validate();
  OCCMATCH_CHECK(in.coarse_a && in.coarse_b, ErrorCode::kInvalidArgument,
                 "coarse feature grids are required");
  OCCMATCH_CHECK(fine.search_radius >= 0 && fine.window_radius >= 0, ErrorCode::kInvalidArgument,
                 "fine radii must be >= 0");
  const FeatureGrid& ca = *in.coarse_a;
  const FeatureGrid& cb = *in.coarse_b;
  const PatchGrid grid_a{ca.stride(), ca.rows(), ca.cols()};
  const PatchGrid grid_b{cb.stride(), cb.rows(), cb.cols()};

  PipelineResult out;
  out.branches = MatchingBranches(config.angles);
  std::vector<FeatureGrid> aligned_a;
  std::vector<FeatureGrid> aligned_b;
  for (const Branch& br : out.branches) {
    aligned_a.push_back(RotationAlign(ca, br.angle_a, config.angles));
    aligned_b.push_back(RotationAlign(cb, br.angle_b, config.angles));
  }
  GumbelSelection sel;
  if (config.gumbel.granularity == GumbelGranularity::kPerEntry) {
    sel = SelectBranchesStreaming(aligned_a, aligned_b, config.temperature, config.gumbel,
                                  config.match_threshold);
  } else {
    std::vector<ConfidenceMatrix> candidates;
    for (size_t k = 0; k < aligned_a.size(); ++k) {
      candidates.push_back(ScoreMatrix(aligned_a[k], aligned_b[k], config.temperature));
      DualSoftmaxInPlace(candidates.back());
    }
    sel = GumbelSelect(candidates, config.gumbel);
  }
  const std::vector<CoarseMatch> coarse =
      ExtractMatches(sel.confidence, config.match_threshold, config.mutual);
  const Eigen::Index n_b = sel.confidence.cols();

  out.matches.resize(coarse.size());
  const bool refine = in.fine_a && in.fine_b;
  if (refine) {
    OCCMATCH_CHECK(in.fine_a->channels() == in.fine_b->channels(), ErrorCode::kChannelMismatch,
                   "fine grids differ in channel count");
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t m = 0; m < static_cast<std::int64_t>(coarse.size()); ++m) {
    const CoarseMatch& c = coarse[m];
    PipelineMatch& pm = out.matches[m];
    pm.patch_a = c.a;
    pm.patch_b = c.b;
    pm.confidence = c.confidence;
    pm.branch = sel.branch[static_cast<size_t>(c.a) * n_b + c.b];
    pm.a = grid_a.CenterPixel(c.a, in.width_a, in.height_a);
    pm.b = grid_b.CenterPixel(c.b, in.width_b, in.height_b);
    if (!refine) continue;
    const FeatureGrid& fa = *in.fine_a;
    const FeatureGrid& fb = *in.fine_b;
    const FineCell qa = CellOf(fa, pm.a);
    pm.a = CellCenter(fa, qa.row, qa.col);
    const std::vector<double> query = fa.Cell(qa.row, qa.col);

    const FineCell start = CellOf(fb, pm.b);
    FineCell best = start;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dy = -fine.search_radius; dy <= fine.search_radius; ++dy) {
      for (int dx = -fine.search_radius; dx <= fine.search_radius; ++dx) {
        const int r = start.row + dy;
        const int col = start.col + dx;
        if (!InGrid(fb, r, col)) continue;
        const double d = SquaredDistance(fb, query, r, col);
        if (d < best_d) {
          best_d = d;
          best = {r, col};
        }
      }
    }
    // A window cut by the grid edge biases the expectation toward the
    // interior, so shrink it symmetrically until it fits.
    const int radius = std::min({fine.window_radius, best.row, best.col, fb.rows() - 1 - best.row,
                                 fb.cols() - 1 - best.col});
    const Heatmap h = FineHeatmap(fb, query, best.row, best.col, radius);
    pm.b = RefineFineMatch(h, CellCenter(fb, best.row, best.col), fb.stride());
  }
  return out;
}

}  // namespace occmatch
