#include "occmatch/matching.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "occmatch/error.h"
#include "occmatch/random.h"

namespace occmatch {

FeatureGrid::FeatureGrid(int channels, int rows, int cols, int stride, double fill)
    : channels_(channels), rows_(rows), cols_(cols), stride_(stride),
      values_(static_cast<size_t>(channels) * rows * cols, fill) {
  OCCMATCH_CHECK(channels >= 1 && rows >= 1 && cols >= 1, ErrorCode::kInvalidArgument,
                 "feature grid dimensions must be positive");
  OCCMATCH_CHECK(stride == 2 || stride == 8, ErrorCode::kInvalidArgument,
                 "feature grid stride must be 2 or 8");
}

FeatureGrid::FeatureGrid(int channels, int rows, int cols, int stride, std::vector<double> values)
    : FeatureGrid(channels, rows, cols, stride) {
  OCCMATCH_CHECK(values.size() == values_.size(), ErrorCode::kShapeMismatch,
                 "feature value count != C * rows * cols");
  for (double x : values) {
    OCCMATCH_CHECK(std::isfinite(x), ErrorCode::kInvalidArgument, "non-finite feature value");
  }
  values_ = std::move(values);
}

std::vector<double> FeatureGrid::Cell(int r, int c) const {
  std::vector<double> out(channels_);
  for (int ch = 0; ch < channels_; ++ch) out[ch] = at(ch, r, c);
  return out;
}

void MatchingConfig::Validate() const {
  OCCMATCH_CHECK(temperature > 0.0, ErrorCode::kInvalidArgument, "temperature must be > 0");
  OCCMATCH_CHECK(!angles.empty(), ErrorCode::kInvalidArgument, "rotation angle set is empty");
  OCCMATCH_CHECK(gumbel.temperature > 0.0, ErrorCode::kInvalidArgument,
                 "gumbel temperature must be > 0");
  OCCMATCH_CHECK(match_threshold > 0.0 && match_threshold < 1.0, ErrorCode::kInvalidArgument,
                 "match threshold must lie in (0, 1)");
  OCCMATCH_CHECK(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0 && lambda4 >= 0.0,
                 ErrorCode::kInvalidArgument, "loss weights must be non-negative");
}

FeatureGrid NeighborhoodMean(const FeatureGrid& f) {
  FeatureGrid out = f;
  const int rows = f.rows();
  const int cols = f.cols();
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double self = f.at(ch, r, c);
        const double up = r > 0 ? f.at(ch, r - 1, c) : self;
        const double down = r + 1 < rows ? f.at(ch, r + 1, c) : self;
        const double left = c > 0 ? f.at(ch, r, c - 1) : self;
        const double right = c + 1 < cols ? f.at(ch, r, c + 1) : self;
        out.at(ch, r, c) = (self + up + down + left + right) / 5.0;
      }
    }
  }
  return out;
}

namespace {

struct BilinearTap {
  int r0, r1, c0, c1;
  double wr, wc;  // weights of r1 and c1
};

// Replicate padding: the sample position is clamped into the grid first.
BilinearTap MakeTap(double r, double c, int rows, int cols) {
  r = std::clamp(r, 0.0, static_cast<double>(rows - 1));
  c = std::clamp(c, 0.0, static_cast<double>(cols - 1));
  BilinearTap t;
  t.r0 = static_cast<int>(std::floor(r));
  t.c0 = static_cast<int>(std::floor(c));
  t.r1 = std::min(t.r0 + 1, rows - 1);
  t.c1 = std::min(t.c0 + 1, cols - 1);
  t.wr = r - t.r0;
  t.wc = c - t.c0;
  return t;
}

}  // namespace

FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg) {
  const double theta = theta_deg * std::numbers::pi / 180.0;
  double dr[4];
  double dc[4];
  for (int k = 0; k < 4; ++k) {
    dr[k] = std::cos(theta + k * std::numbers::pi / 2.0);
    dc[k] = std::sin(theta + k * std::numbers::pi / 2.0);
  }
  FeatureGrid out = f;
  const int rows = f.rows();
  const int cols = f.cols();
  const int channels = f.channels();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    BilinearTap taps[4];
    for (int c = 0; c < cols; ++c) {
      for (int k = 0; k < 4; ++k) taps[k] = MakeTap(r + dr[k], c + dc[k], rows, cols);
      for (int ch = 0; ch < channels; ++ch) {
        double acc = f.at(ch, r, c);
        for (const BilinearTap& t : taps) {
          const double top = (1 - t.wc) * f.at(ch, t.r0, t.c0) + t.wc * f.at(ch, t.r0, t.c1);
          const double bottom = (1 - t.wc) * f.at(ch, t.r1, t.c0) + t.wc * f.at(ch, t.r1, t.c1);
          acc += (1 - t.wr) * top + t.wr * bottom;
        }
        out.at(ch, r, c) = acc / 5.0;
      }
    }
  }
  return out;
}

FeatureGrid RotationAlign(const FeatureGrid& f, double theta_deg,
                          std::span<const double> allowed_angles) {
  const bool known = std::any_of(allowed_angles.begin(), allowed_angles.end(),
                                 [&](double a) { return std::abs(a - theta_deg) < 1e-9; });
  OCCMATCH_CHECK(known, ErrorCode::kUnknownAngle,
                 "rotation angle " + std::to_string(theta_deg) + " is not configured");
  return RotationAlign(f, theta_deg);
}

namespace {

// cells x C matrix so each patch vector is a row.
RowMatrix CellMajor(const FeatureGrid& f) {
  return Eigen::Map<const RowMatrix>(f.values().data(), f.channels(), f.cells()).transpose();
}

}  // namespace

RowMatrix ScoreMatrix(const FeatureGrid& fa, const FeatureGrid& fb, double tau) {
  OCCMATCH_CHECK(fa.channels() == fb.channels(), ErrorCode::kChannelMismatch,
                 "feature grids have different channel counts");
  OCCMATCH_CHECK(tau > 0.0, ErrorCode::kInvalidArgument, "temperature must be > 0");
  const RowMatrix a = CellMajor(fa);
  const RowMatrix b = CellMajor(fb);
  RowMatrix s(a.rows(), b.rows());
  s.noalias() = (1.0 / tau) * a * b.transpose();
  return s;
}

SoftmaxStats ComputeSoftmaxStats(const RowMatrix& s) {
  const int rows = static_cast<int>(s.rows());
  const int cols = static_cast<int>(s.cols());
  SoftmaxStats st;
  st.row_max.assign(rows, -std::numeric_limits<double>::infinity());
  st.row_sum.assign(rows, 0.0);
  st.col_max.assign(cols, -std::numeric_limits<double>::infinity());
  st.col_sum.assign(cols, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* row = s.data() + static_cast<size_t>(i) * cols;
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cols; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += ExpOrZero(row[j] - m);
    st.row_max[i] = m;
    st.row_sum[i] = sum;
  }
  // Column statistics sweep rows in order inside fixed column blocks, so the
  // floating-point summation order does not depend on the thread count.
  constexpr int kBlock = 256;
  const int blocks = (cols + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < blocks; ++blk) {
    const int j0 = blk * kBlock;
    const int j1 = std::min(cols, j0 + kBlock);
    for (int i = 0; i < rows; ++i) {
      const double* row = s.data() + static_cast<size_t>(i) * cols;
      for (int j = j0; j < j1; ++j) st.col_max[j] = std::max(st.col_max[j], row[j]);
    }
    for (int i = 0; i < rows; ++i) {
      const double* row = s.data() + static_cast<size_t>(i) * cols;
      for (int j = j0; j < j1; ++j) st.col_sum[j] += ExpOrZero(row[j] - st.col_max[j]);
    }
  }
  return st;
}

void DualSoftmaxInPlace(RowMatrix& scores) {
  OCCMATCH_CHECK(scores.size() > 0, ErrorCode::kInvalidArgument, "empty score matrix");
  OCCMATCH_CHECK(scores.allFinite(), ErrorCode::kInvalidArgument, "non-finite score");
  const SoftmaxStats st = ComputeSoftmaxStats(scores);
  const int rows = static_cast<int>(scores.rows());
  const int cols = static_cast<int>(scores.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    double* row = scores.data() + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) row[j] = DualSoftmaxEntry(row[j], st, i, j);
  }
}

ConfidenceMatrix DualSoftmax(const RowMatrix& scores) {
  ConfidenceMatrix p = scores;
  DualSoftmaxInPlace(p);
  return p;
}

RowMatrix DualSoftmaxBackward(const RowMatrix& scores, const RowMatrix& grad_confidence) {
  OCCMATCH_CHECK(scores.rows() == grad_confidence.rows() &&
                     scores.cols() == grad_confidence.cols(),
                 ErrorCode::kShapeMismatch, "gradient shape differs from the scores");
  const SoftmaxStats st = ComputeSoftmaxStats(scores);
  const Eigen::Index rows = scores.rows();
  const Eigen::Index cols = scores.cols();
  RowMatrix by_row(rows, cols);
  RowMatrix by_col(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      by_row(i, j) = std::exp(scores(i, j) - st.row_max[i]) / st.row_sum[i];
      by_col(i, j) = std::exp(scores(i, j) - st.col_max[j]) / st.col_sum[j];
    }
  }
  // P = R .* C, so dL/dR = G .* C and dL/dC = G .* R; then the softmax VJPs.
  const RowMatrix grad_row = grad_confidence.cwiseProduct(by_col);
  const RowMatrix grad_col = grad_confidence.cwiseProduct(by_row);
  const Eigen::VectorXd row_dot = grad_row.cwiseProduct(by_row).rowwise().sum();
  const Eigen::RowVectorXd col_dot = grad_col.cwiseProduct(by_col).colwise().sum();
  RowMatrix grad(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      grad(i, j) = by_row(i, j) * (grad_row(i, j) - row_dot(i)) +
                   by_col(i, j) * (grad_col(i, j) - col_dot(j));
    }
  }
  return grad;
}

namespace {

double SafeLog(double p) { return std::log(std::max(p, std::numeric_limits<double>::min())); }

double Gumbel(double u) { return -std::log(-std::log(u)); }

}  // namespace

EntrySelection GumbelSelectEntry(const double* values, int num, std::uint64_t entry,
                                 const CounterRng& rng, const GumbelOptions& options) {
  // exp(g) = 1 / (-log u), so argmax(log p + g) = argmax(p / (-log u)).
  double neg_log_u[256];
  int best = 0;
  double best_key = 0.0;
  for (int k = 0; k < num; ++k) {
    neg_log_u[k] = -std::log(rng.Uniform(entry * static_cast<std::uint64_t>(num) + k));
    const double key = std::max(values[k], std::numeric_limits<double>::min()) / neg_log_u[k];
    if (k == 0 || key > best_key) {
      best = k;
      best_key = key;
    }
  }
  if (options.hard) return {values[best], best};
  const double inv_t = 1.0 / options.temperature;
  const double top = SafeLog(values[best]) - std::log(neg_log_u[best]);
  double sum = 0.0;
  double mix = 0.0;
  for (int k = 0; k < num; ++k) {
    const double w = std::exp((SafeLog(values[k]) - std::log(neg_log_u[k]) - top) * inv_t);
    sum += w;
    mix += w * values[k];
  }
  return {mix / sum, best};
}

GumbelSelection GumbelSelect(std::span<const ConfidenceMatrix> candidates,
                             const GumbelOptions& options) {
  OCCMATCH_CHECK(!candidates.empty(), ErrorCode::kEmptyCandidates, "no candidate matrices");
  OCCMATCH_CHECK(candidates.size() <= 255, ErrorCode::kInvalidArgument, "too many candidates");
  OCCMATCH_CHECK(options.temperature > 0.0, ErrorCode::kInvalidArgument,
                 "gumbel temperature must be > 0");
  const Eigen::Index rows = candidates[0].rows();
  const Eigen::Index cols = candidates[0].cols();
  for (const auto& c : candidates) {
    OCCMATCH_CHECK(c.rows() == rows && c.cols() == cols, ErrorCode::kShapeMismatch,
                   "candidate matrices differ in shape");
  }
  const int num = static_cast<int>(candidates.size());
  const std::int64_t n = static_cast<std::int64_t>(rows) * cols;
  GumbelSelection out;
  out.branch.assign(static_cast<size_t>(n), 0);
  if (num == 1) {
    out.confidence = candidates[0];
    return out;
  }
  out.confidence.resize(rows, cols);
  const CounterRng rng(options.seed);

  if (options.granularity == GumbelGranularity::kPerMatrix) {
    std::vector<double> perturbed(num);
    for (int k = 0; k < num; ++k) {
      const auto& c = candidates[k];
      double score = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) score += SafeLog(c.row(i).maxCoeff());
      perturbed[k] = score / static_cast<double>(rows) + Gumbel(rng.Uniform(k));
    }
    const int best = static_cast<int>(
        std::max_element(perturbed.begin(), perturbed.end()) - perturbed.begin());
    std::fill(out.branch.begin(), out.branch.end(), static_cast<std::uint8_t>(best));
    if (options.hard) {
      out.confidence = candidates[best];
      return out;
    }
    const double m = perturbed[best];
    const double inv_t = 1.0 / options.temperature;
    double sum = 0.0;
    for (double& x : perturbed) sum += (x = std::exp((x - m) * inv_t));
    out.confidence.setZero();
    for (int k = 0; k < num; ++k) out.confidence += (perturbed[k] / sum) * candidates[k];
    return out;
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t e = 0; e < n; ++e) {
    double values[256];
    for (int k = 0; k < num; ++k) values[k] = candidates[k].data()[e];
    const EntrySelection pick =
        GumbelSelectEntry(values, num, static_cast<std::uint64_t>(e), rng, options);
    out.branch[e] = static_cast<std::uint8_t>(pick.branch);
    out.confidence.data()[e] = pick.confidence;
  }
  return out;
}

std::vector<CoarseMatch> ExtractMatches(const ConfidenceMatrix& p_hat, double threshold,
                                        bool mutual) {
  OCCMATCH_CHECK(threshold > 0.0 && threshold < 1.0, ErrorCode::kInvalidArgument,
                 "match threshold must lie in (0, 1)");
  const int rows = static_cast<int>(p_hat.rows());
  const int cols = static_cast<int>(p_hat.cols());
  std::vector<int> row_best(rows, 0);
  std::vector<int> col_best(cols, 0);
  if (mutual) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 1; j < cols; ++j) {
        if (p_hat(i, j) > p_hat(i, row_best[i])) row_best[i] = j;
      }
    }
    for (int i = 1; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (p_hat(i, j) > p_hat(col_best[j], j)) col_best[j] = i;
      }
    }
  }
  std::vector<CoarseMatch> out;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double p = p_hat(i, j);
      if (p < threshold) continue;
      if (mutual && (row_best[i] != j || col_best[j] != i)) continue;
      out.push_back({i, j, p});
    }
  }
  return out;
}

namespace {

constexpr double kLogClamp = 1e-12;

double NegLogLikelihood(const ConfidenceMatrix& p, const std::vector<PatchPair>& pairs,
                        bool& clamped) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const PatchPair& m : pairs) {
    OCCMATCH_CHECK(m.a >= 0 && m.b >= 0 && m.a < p.rows() && m.b < p.cols(),
                   ErrorCode::kShapeMismatch, "ground-truth pair outside the confidence matrix");
    double v = p(m.a, m.b);
    if (v <= kLogClamp) {
      v = kLogClamp;
      clamped = true;
    }
    sum -= std::log(v);
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

CoarseLossResult CoarseLoss(const ConfidenceMatrix& p_hat, const CoarseMatchSet& gt,
                            double lambda1) {
  OCCMATCH_CHECK(!gt.empty(), ErrorCode::kEmptyGroundTruth, "all ground-truth classes are empty");
  CoarseLossResult out;
  out.value = NegLogLikelihood(p_hat, gt.vv, out.clamped) +
              lambda1 * NegLogLikelihood(p_hat, gt.vo, out.clamped) +
              lambda1 * NegLogLikelihood(p_hat, gt.ov, out.clamped);
  return out;
}

PixelPoint RefineFineMatch(const Heatmap& heatmap, const PixelPoint& window_center,
                           double cell_size) {
  OCCMATCH_CHECK(heatmap.size >= 1 && heatmap.size % 2 == 1, ErrorCode::kInvalidArgument,
                 "heatmap window must be an odd square");
  OCCMATCH_CHECK(heatmap.weights.size() == static_cast<size_t>(heatmap.size) * heatmap.size,
                 ErrorCode::kInvalidArgument, "heatmap weight count != size^2");
  const int r = heatmap.radius();
  double sum = 0.0;
  double ex = 0.0;
  double ey = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = heatmap.at(dy, dx);
      OCCMATCH_CHECK(w >= 0.0, ErrorCode::kInvalidArgument, "negative heatmap weight");
      sum += w;
      ex += w * dx;
      ey += w * dy;
    }
  }
  OCCMATCH_CHECK(sum > 0.0, ErrorCode::kDegenerateHeatmap, "heatmap sums to zero");
  return {window_center.u + cell_size * ex / sum, window_center.v + cell_size * ey / sum};
}

const char* MatchLabelName(MatchLabel label) {
  switch (label) {
    case MatchLabel::kVV: return "vv";
    case MatchLabel::kVO: return "vo";
    case MatchLabel::kOV: return "ov";
  }
  return "vv";
}

double FineLoss(std::span<const PixelPoint> predicted, std::span<const PixelPoint> ground_truth,
                std::span<const MatchLabel> labels, double lambda2) {
  OCCMATCH_CHECK(predicted.size() == ground_truth.size() && predicted.size() == labels.size(),
                 ErrorCode::kLengthMismatch, "fine loss inputs differ in length");
  double sums[3] = {0.0, 0.0, 0.0};
  size_t counts[3] = {0, 0, 0};
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double du = predicted[i].u - ground_truth[i].u;
    const double dv = predicted[i].v - ground_truth[i].v;
    const int cls = static_cast<int>(labels[i]);
    sums[cls] += du * du + dv * dv;
    ++counts[cls];
  }
  auto mean = [&](int cls) { return counts[cls] ? sums[cls] / counts[cls] : 0.0; };
  return mean(0) + lambda2 * mean(1) + lambda2 * mean(2);
}

double TotalLoss(double coarse, double fine, double occupancy, double lambda3, double lambda4) {
  OCCMATCH_CHECK(coarse >= 0.0 && fine >= 0.0 && occupancy >= 0.0, ErrorCode::kInvalidArgument,
                 "loss terms must be non-negative");
  return coarse + lambda3 * fine + lambda4 * occupancy;
}

}  // namespace occmatch
