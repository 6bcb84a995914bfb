#include "occmatch/matching.h"

#include <array>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "test_util.h"

namespace occmatch {
namespace {

using testing::ExpectError;
using testing::RandomGrid;
using testing::RandomMatrix;

double MaxAbsDiff(const FeatureGrid& a, const FeatureGrid& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

// Bilinear sample at a fractional (row, col) with each tap clamped into the
// grid, written independently of the library's tap tables.
double SampleClamped(const FeatureGrid& f, int ch, double r, double c) {
  const int r0 = static_cast<int>(std::floor(r)), c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0, fc = c - c0;
  auto tap = [&](int rr, int cc) {
    rr = std::clamp(rr, 0, f.rows() - 1);
    cc = std::clamp(cc, 0, f.cols() - 1);
    return f.at(ch, rr, cc);
  };
  return (1 - fr) * (1 - fc) * tap(r0, c0) + (1 - fr) * fc * tap(r0, c0 + 1) +
         fr * (1 - fc) * tap(r0 + 1, c0) + fr * fc * tap(r0 + 1, c0 + 1);
}

FeatureGrid BruteRotationAlign(const FeatureGrid& f, double theta_deg) {
  FeatureGrid out(f.channels(), f.rows(), f.cols(), f.stride());
  const double theta = theta_deg * M_PI / 180.0;
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int i = 0; i < f.rows(); ++i) {
      for (int j = 0; j < f.cols(); ++j) {
        double s = f.at(ch, i, j);
        for (int k = 0; k < 4; ++k) {
          const double a = theta + k * M_PI / 2.0;
          s += SampleClamped(f, ch, i + std::cos(a), j + std::sin(a));
        }
        out.at(ch, i, j) = s / 5.0;
      }
    }
  }
  return out;
}

FeatureGrid Ramp(int channels, int rows, int cols) {
  FeatureGrid f(channels, rows, cols, 8);
  for (int ch = 0; ch < channels; ++ch) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) f.at(ch, r, c) = (ch + 1) * (0.7 * r - 0.3 * c) + ch;
    }
  }
  return f;
}

TEST(FeatureGrid, CellCopiesChannels) {
  FeatureGrid f(2, 2, 3, 8);
  f.at(0, 1, 2) = 4.0;
  f.at(1, 1, 2) = -1.0;
  EXPECT_EQ(f.Cell(1, 2), (std::vector<double>{4.0, -1.0}));
  EXPECT_EQ(f.cells(), 6);
  EXPECT_THROW(FeatureGrid(2, 2, 2, 8, std::vector<double>(7, 0.0)), Error);
}

TEST(MatchingConfig, Validate) {
  EXPECT_NO_THROW(MatchingConfig{}.Validate());
  MatchingConfig c;
  c.temperature = 0.0;
  ExpectError(ErrorCode::kInvalidArgument, [&] { c.Validate(); });
  c = MatchingConfig{};
  c.angles.clear();
  ExpectError(ErrorCode::kInvalidArgument, [&] { c.Validate(); });
  c = MatchingConfig{};
  c.lambda4 = -0.1;
  ExpectError(ErrorCode::kInvalidArgument, [&] { c.Validate(); });
  c = MatchingConfig{};
  c.gumbel.temperature = 0.0;
  ExpectError(ErrorCode::kInvalidArgument, [&] { c.Validate(); });
}

TEST(NeighborhoodMean, HandSummedRamp) {
  FeatureGrid f(1, 3, 3, 8);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) f.at(0, r, c) = 3 * r + c;  // 0..8
  }
  const FeatureGrid m = NeighborhoodMean(f);
  EXPECT_DOUBLE_EQ(m.at(0, 1, 1), (4 + 1 + 7 + 3 + 5) / 5.0);
  // Corner (0, 0): up and left replicate the center.
  EXPECT_DOUBLE_EQ(m.at(0, 0, 0), (0 + 0 + 3 + 0 + 1) / 5.0);
  // Edge (0, 1).
  EXPECT_DOUBLE_EQ(m.at(0, 0, 1), (1 + 1 + 4 + 0 + 2) / 5.0);
  EXPECT_DOUBLE_EQ(m.at(0, 2, 2), (8 + 5 + 8 + 7 + 8) / 5.0);
}

TEST(NeighborhoodMean, ConstantAndSingleCell) {
  const FeatureGrid c(3, 4, 5, 8, 2.5);
  EXPECT_EQ(MaxAbsDiff(NeighborhoodMean(c), c), 0.0);
  const FeatureGrid one(2, 1, 1, 8, std::vector<double>{1.5, -3.0});
  EXPECT_EQ(NeighborhoodMean(one).values(), one.values());
}

TEST(RotationAlign, ZeroDegreesIsNeighborhoodMean) {
  const FeatureGrid f = RandomGrid(4, 7, 9, 1);
  EXPECT_LT(MaxAbsDiff(RotationAlign(f, 0.0), NeighborhoodMean(f)), 1e-9);
  // A quarter turn permutes the same four integer offsets.
  EXPECT_LT(MaxAbsDiff(RotationAlign(f, 90.0), NeighborhoodMean(f)), 1e-9);
}

TEST(RotationAlign, ConstantGridAnyAngle) {
  const FeatureGrid c(2, 5, 6, 8, -1.25);
  for (double theta : {0.0, 17.0, 30.0, 45.0, 200.0}) {
    EXPECT_LT(MaxAbsDiff(RotationAlign(c, theta), c), 1e-12) << theta;
  }
}

TEST(RotationAlign, ThirtyDegreesMatchesBruteForceBilinear) {
  const FeatureGrid ramp = Ramp(3, 6, 7);
  EXPECT_LT(MaxAbsDiff(RotationAlign(ramp, 30.0), BruteRotationAlign(ramp, 30.0)), 1e-9);
  const FeatureGrid rnd = RandomGrid(5, 8, 6, 2);
  for (double theta : {30.0, -30.0, 12.5, 135.0}) {
    EXPECT_LT(MaxAbsDiff(RotationAlign(rnd, theta), BruteRotationAlign(rnd, theta)), 1e-9) << theta;
  }
}

TEST(RotationAlign, InteriorOfLinearRampIsUnchanged) {
  // Four samples symmetric about the center average to the center value on a
  // linear field, so interior cells (all taps inside the grid) are fixed.
  const FeatureGrid ramp = Ramp(1, 6, 6);
  const FeatureGrid out = RotationAlign(ramp, 30.0);
  for (int r = 2; r < 4; ++r) {
    for (int c = 2; c < 4; ++c) EXPECT_NEAR(out.at(0, r, c), ramp.at(0, r, c), 1e-12);
  }
}

TEST(RotationAlign, CommutesWithPerChannelAffineMaps) {
  const FeatureGrid f = RandomGrid(3, 5, 5, 3);
  const std::array<double, 3> a{2.0, -0.5, 3.0}, b{1.0, 4.0, -2.0};
  FeatureGrid g = f;
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) g.at(ch, r, c) = a[ch] * f.at(ch, r, c) + b[ch];
    }
  }
  const FeatureGrid lhs = RotationAlign(g, 30.0);
  FeatureGrid rhs = RotationAlign(f, 30.0);
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) rhs.at(ch, r, c) = a[ch] * rhs.at(ch, r, c) + b[ch];
    }
  }
  EXPECT_LT(MaxAbsDiff(lhs, rhs), 1e-12);
}

TEST(RotationAlign, RejectsUnknownAngles) {
  const FeatureGrid f = RandomGrid(1, 3, 3, 4);
  const std::vector<double> allowed{0.0, 30.0};
  EXPECT_NO_THROW(RotationAlign(f, 30.0, allowed));
  ExpectError(ErrorCode::kUnknownAngle, [&] { RotationAlign(f, 45.0, allowed); });
}

TEST(ScoreMatrix, UnitFeaturesAndTemperature) {
  FeatureGrid f(2, 1, 2, 8);
  f.at(0, 0, 0) = 1.0;
  f.at(1, 0, 1) = 1.0;
  const RowMatrix s = ScoreMatrix(f, f, 1.0);
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(1, 1), 1.0);
  EXPECT_EQ(s(0, 1), 0.0);
  const FeatureGrid a = RandomGrid(4, 3, 3, 5), b = RandomGrid(4, 2, 4, 6);
  EXPECT_TRUE(ScoreMatrix(a, b, 0.1).isApprox(10.0 * ScoreMatrix(a, b, 1.0), 1e-14));
  ExpectError(ErrorCode::kChannelMismatch, [&] { ScoreMatrix(a, RandomGrid(3, 2, 2, 7), 1.0); });
  ExpectError(ErrorCode::kInvalidArgument, [&] { ScoreMatrix(a, b, 0.0); });
}

TEST(ScoreMatrix, MatchesNaiveLoopAndTransposes) {
  const FeatureGrid a = RandomGrid(16, 4, 5, 8), b = RandomGrid(16, 3, 6, 9);
  const double tau = 0.1;
  const RowMatrix s = ScoreMatrix(a, b, tau);
  ASSERT_EQ(s.rows(), 20);
  ASSERT_EQ(s.cols(), 18);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 18; ++j) {
      double dot = 0.0;
      for (int ch = 0; ch < 16; ++ch) dot += a.at(ch, i / 5, i % 5) * b.at(ch, j / 6, j % 6);
      EXPECT_LE(std::abs(s(i, j) - dot / tau), 1e-9 * std::max(1.0, std::abs(dot / tau)));
    }
  }
  EXPECT_TRUE(ScoreMatrix(b, a, tau).isApprox(s.transpose(), 1e-14));
}

TEST(DualSoftmax, ClosedFormCases) {
  EXPECT_EQ(DualSoftmax(RowMatrix::Constant(1, 1, 3.7))(0, 0), 1.0);
  const ConfidenceMatrix u = DualSoftmax(RowMatrix::Constant(3, 4, 0.2));
  for (Eigen::Index i = 0; i < u.size(); ++i) EXPECT_NEAR(u.data()[i], 1.0 / 12.0, 1e-15);

  RowMatrix s(2, 2);
  s << 10, 0, 0, 10;
  const ConfidenceMatrix p = DualSoftmax(s);
  const double e = std::exp(10.0);
  // Row and column softmax agree here, so each entry is a square.
  const double diag = std::pow(e / (e + 1.0), 2), off = std::pow(1.0 / (e + 1.0), 2);
  EXPECT_NEAR(diag, 0.99990921, 1e-8);
  EXPECT_NEAR(off, 2.0610e-9, 1e-12);
  EXPECT_NEAR(p(0, 0), diag, 1e-15);
  EXPECT_NEAR(p(1, 1), diag, 1e-15);
  EXPECT_NEAR(p(0, 1), off, 1e-20);
  EXPECT_NEAR(p(1, 0), off, 1e-20);
}

TEST(DualSoftmax, MatchesExplicitSoftmaxProduct) {
  const RowMatrix s = RandomMatrix(5, 7, 10, 3.0);
  const ConfidenceMatrix p = DualSoftmax(s);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 7; ++j) {
      double rs = 0.0, cs = 0.0;
      for (int k = 0; k < 7; ++k) rs += std::exp(s(i, k));
      for (int k = 0; k < 5; ++k) cs += std::exp(s(k, j));
      const double expect = std::exp(s(i, j)) / rs * std::exp(s(i, j)) / cs;
      EXPECT_NEAR(p(i, j), expect, 1e-14);
      EXPECT_GT(p(i, j), 0.0);
      EXPECT_LT(p(i, j), 1.0);
    }
  }
  RowMatrix in_place = s;
  DualSoftmaxInPlace(in_place);
  EXPECT_EQ(in_place, p);
}

TEST(DualSoftmax, ShiftInvariantAndStableForLargeScores) {
  const RowMatrix s = RandomMatrix(4, 6, 11, 5.0);
  const ConfidenceMatrix p = DualSoftmax(s);
  EXPECT_TRUE(DualSoftmax((s.array() + 123.0).matrix()).isApprox(p, 1e-12));
  const ConfidenceMatrix big = DualSoftmax((s * 200.0).eval());
  EXPECT_TRUE(big.allFinite());
  EXPECT_GE(big.minCoeff(), 0.0);
  EXPECT_LE(big.maxCoeff(), 1.0);
  ExpectError(ErrorCode::kInvalidArgument, [] { DualSoftmax(RowMatrix(0, 3)); });
  RowMatrix bad = s;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  ExpectError(ErrorCode::kInvalidArgument, [&] { DualSoftmax(bad); });
}

TEST(DualSoftmax, RowArgmaxFollowsRowFactorWhenColumnsAreFlat) {
  // Every column holds the same multiset (a circulant), so all column
  // softmax sums agree and the column factor only rescales by exp(s).
  RowMatrix s(3, 3);
  s << 3, 1, 0, 0, 3, 1, 1, 0, 3;
  const ConfidenceMatrix p = DualSoftmax(s);
  for (int i = 0; i < 3; ++i) {
    Eigen::Index pa, sa;
    p.row(i).maxCoeff(&pa);
    s.row(i).maxCoeff(&sa);
    EXPECT_EQ(pa, sa);
  }
}

TEST(DualSoftmax, BackwardMatchesFiniteDifferences) {
  const RowMatrix s = RandomMatrix(4, 4, 12);
  const RowMatrix w = RandomMatrix(4, 4, 13);
  auto loss = [&](const RowMatrix& x) { return (DualSoftmax(x).array() * w.array()).sum(); };
  const RowMatrix g = DualSoftmaxBackward(s, w);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      RowMatrix p = s, m = s;
      p(i, j) += h;
      m(i, j) -= h;
      const double fd = (loss(p) - loss(m)) / (2 * h);
      EXPECT_LE(std::abs(g(i, j) - fd), 1e-4 * std::max(std::abs(fd), 1e-3)) << i << "," << j;
    }
  }
}

GumbelOptions Hard(std::uint64_t seed) {
  GumbelOptions o;
  o.seed = seed;
  return o;
}

TEST(GumbelSelect, SingleCandidateIsReturnedUnchanged) {
  const ConfidenceMatrix p = DualSoftmax(RandomMatrix(3, 4, 14));
  const std::vector<ConfidenceMatrix> c{p};
  for (bool hard : {true, false}) {
    GumbelOptions o = Hard(1);
    o.hard = hard;
    const GumbelSelection s = GumbelSelect(c, o);
    EXPECT_EQ(s.confidence, p);
    for (auto b : s.branch) EXPECT_EQ(b, 0);
  }
}

TEST(GumbelSelect, Errors) {
  ExpectError(ErrorCode::kEmptyCandidates, [] { GumbelSelect({}, Hard(0)); });
  const std::vector<ConfidenceMatrix> c{ConfidenceMatrix::Constant(2, 2, 0.5),
                                        ConfidenceMatrix::Constant(2, 3, 0.5)};
  ExpectError(ErrorCode::kShapeMismatch, [&] { GumbelSelect(c, Hard(0)); });
}

TEST(GumbelSelect, DominantCandidateFrequencyMatchesGumbelArgmax) {
  // With p_0 = 100 p_1 the gumbel-argmax picks candidate 0 with probability
  // p_0 / (p_0 + p_1) = 100/101 ~ 0.9901. 1000 seeded trials of a 10x10
  // matrix give 1e5 draws, so the observed rate must sit within 4 sigma.
  const std::vector<ConfidenceMatrix> c{ConfidenceMatrix::Constant(10, 10, 0.5),
                                        ConfidenceMatrix::Constant(10, 10, 0.005)};
  long picked = 0, total = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    const GumbelSelection s = GumbelSelect(c, Hard(trial));
    for (Eigen::Index i = 0; i < s.confidence.size(); ++i) {
      picked += s.confidence.data()[i] == 0.5;
      ++total;
    }
  }
  const double expect = 100.0 / 101.0;
  const double sigma = std::sqrt(expect * (1 - expect) / total);
  const double rate = static_cast<double>(picked) / total;
  EXPECT_NEAR(rate, expect, 4 * sigma);
  EXPECT_GT(rate, 0.985);
}

TEST(GumbelSelect, EqualInputsAreUniform) {
  const int k = 3;
  const std::vector<ConfidenceMatrix> c(k, ConfidenceMatrix::Constant(100, 100, 0.2));
  const GumbelSelection s = GumbelSelect(c, Hard(77));
  std::array<long, k> counts{};
  for (auto b : s.branch) ++counts[b];
  const double n = 10000.0, p = 1.0 / k;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (long cnt : counts) EXPECT_NEAR(cnt, n * p, 3 * sigma);
}

TEST(GumbelSelect, PicksFromCandidatesAndIsDeterministic) {
  std::vector<ConfidenceMatrix> c;
  for (int k = 0; k < 3; ++k) c.push_back(DualSoftmax(RandomMatrix(6, 5, 20 + k, 2.0)));
  const GumbelSelection a = GumbelSelect(c, Hard(5)), b = GumbelSelect(c, Hard(5));
  EXPECT_EQ(a.confidence, b.confidence);
  EXPECT_EQ(a.branch, b.branch);
  for (Eigen::Index e = 0; e < a.confidence.size(); ++e) {
    EXPECT_EQ(a.confidence.data()[e], c[a.branch[e]].data()[e]);
  }
  EXPECT_NE(GumbelSelect(c, Hard(6)).branch, a.branch);
}

TEST(GumbelSelect, HardKeyEqualsLogPlusGumbel) {
  // p / (-log u) ranks candidates exactly as log p - log(-log u).
  const CounterRng rng(9);
  const std::array<double, 3> p{0.2, 0.5, 0.3};
  for (std::uint64_t e = 0; e < 500; ++e) {
    int best = 0;
    double best_key = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const double key = std::log(p[k]) - std::log(-std::log(rng.Uniform(e * 3 + k)));
      if (key > best_key) {
        best_key = key;
        best = k;
      }
    }
    const EntrySelection s = GumbelSelectEntry(p.data(), 3, e, rng, Hard(9));
    EXPECT_EQ(s.branch, best);
    EXPECT_EQ(s.confidence, p[best]);
  }
}

TEST(GumbelSelect, SoftModeMixesWithGumbelSoftmaxWeights) {
  const CounterRng rng(4);
  GumbelOptions o = Hard(4);
  o.hard = false;
  o.temperature = 0.7;
  const std::array<double, 3> p{0.1, 0.6, 0.3};
  for (std::uint64_t e = 0; e < 50; ++e) {
    std::array<double, 3> logits;
    double m = -1e300;
    for (int k = 0; k < 3; ++k) {
      logits[k] = (std::log(p[k]) - std::log(-std::log(rng.Uniform(e * 3 + k)))) / o.temperature;
      m = std::max(m, logits[k]);
    }
    double z = 0.0, mix = 0.0;
    for (int k = 0; k < 3; ++k) {
      z += std::exp(logits[k] - m);
      mix += std::exp(logits[k] - m) * p[k];
    }
    const EntrySelection s = GumbelSelectEntry(p.data(), 3, e, rng, o);
    EXPECT_NEAR(s.confidence, mix / z, 1e-14);
    EXPECT_GE(s.confidence, 0.1);
    EXPECT_LE(s.confidence, 0.6);
  }
}

TEST(GumbelSelect, PerMatrixGranularityPicksWholeMatrices) {
  std::vector<ConfidenceMatrix> c{ConfidenceMatrix::Constant(4, 4, 1e-6),
                                  DualSoftmax(RandomMatrix(4, 4, 30, 0.1)),
                                  DualSoftmax((20.0 * RowMatrix::Identity(4, 4)).eval())};
  GumbelOptions o = Hard(3);
  o.granularity = GumbelGranularity::kPerMatrix;
  const GumbelSelection s = GumbelSelect(c, o);
  for (auto b : s.branch) EXPECT_EQ(b, s.branch[0]);
  EXPECT_EQ(s.confidence, c[s.branch[0]]);
  // The sharp identity has by far the largest mean log row maximum.
  EXPECT_EQ(s.branch[0], 2);
}

TEST(ExtractMatches, Cases) {
  ConfidenceMatrix near_id = ConfidenceMatrix::Constant(3, 3, 0.001);
  near_id.diagonal().setConstant(0.9);
  for (bool mutual : {false, true}) {
    const auto m = ExtractMatches(near_id, 0.5, mutual);
    ASSERT_EQ(m.size(), 3u);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(m[i].a, i);
      EXPECT_EQ(m[i].b, i);
      EXPECT_EQ(m[i].confidence, 0.9);
    }
  }
  EXPECT_TRUE(ExtractMatches(ConfidenceMatrix::Constant(4, 4, 1.0 / 16), 0.999, false).empty());

  // (1, 0) clears the threshold and is its row's maximum, but column 0
  // belongs to row 0.
  ConfidenceMatrix p(3, 3);
  p << 0.6, 0.1, 0.0,
       0.4, 0.3, 0.0,
       0.0, 0.0, 0.5;
  const auto loose = ExtractMatches(p, 0.35, false);
  const auto strict = ExtractMatches(p, 0.35, true);
  ASSERT_EQ(loose.size(), 3u);
  EXPECT_EQ(loose[1].a, 1);
  EXPECT_EQ(loose[1].b, 0);
  ASSERT_EQ(strict.size(), 2u);
  EXPECT_EQ(strict[0].a, 0);
  EXPECT_EQ(strict[1].a, 2);

  ExpectError(ErrorCode::kInvalidArgument, [&] { ExtractMatches(p, 1.0, false); });
  ExpectError(ErrorCode::kInvalidArgument, [&] { ExtractMatches(p, 0.0, false); });
}

TEST(ExtractMatches, MutualTiesGoToSmallerIndex) {
  ConfidenceMatrix p = ConfidenceMatrix::Constant(2, 2, 0.4);
  const auto m = ExtractMatches(p, 0.3, true);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].a, 0);
  EXPECT_EQ(m[0].b, 0);
}

CoarseMatchSet Gt(std::vector<PatchPair> vv, std::vector<PatchPair> vo = {},
                  std::vector<PatchPair> ov = {}) {
  CoarseMatchSet gt;
  gt.vv = std::move(vv);
  gt.vo = std::move(vo);
  gt.ov = std::move(ov);
  return gt;
}

TEST(CoarseLoss, Cases) {
  ConfidenceMatrix p = ConfidenceMatrix::Constant(3, 3, 1.0);
  EXPECT_EQ(CoarseLoss(p, Gt({{0, 0}, {1, 2}}, {{2, 1}}), 1.0).value, 0.0);

  p.setConstant(std::exp(-1.0));
  EXPECT_NEAR(CoarseLoss(p, Gt({{0, 0}, {1, 1}, {2, 0}}), 1.0).value, 1.0, 1e-15);

  // Per-class losses 0.5, 0.2, 0.3 with lambda1 = 1.
  p(0, 0) = std::exp(-0.5);
  p(1, 2) = std::exp(-0.2);
  p(2, 1) = std::exp(-0.3);
  const CoarseMatchSet gt = Gt({{0, 0}}, {{1, 2}}, {{2, 1}});
  EXPECT_NEAR(CoarseLoss(p, gt, 1.0).value, 1.0, 1e-15);
  EXPECT_NEAR(CoarseLoss(p, gt, 0.5).value, 0.5 + 0.5 * 0.5, 1e-15);

  ExpectError(ErrorCode::kEmptyGroundTruth, [&] { CoarseLoss(p, Gt({}), 1.0); });
  ExpectError(ErrorCode::kShapeMismatch, [&] { CoarseLoss(p, Gt({{3, 0}}), 1.0); });
}

TEST(CoarseLoss, StrictlyDecreasesInEachEntryAndClamps) {
  ConfidenceMatrix p = DualSoftmax(RandomMatrix(4, 4, 40));
  const CoarseMatchSet gt = Gt({{0, 1}, {2, 2}}, {{1, 3}}, {{3, 0}});
  double prev = CoarseLoss(p, gt, 1.0).value;
  for (const PatchPair& m : {PatchPair{0, 1}, PatchPair{1, 3}, PatchPair{3, 0}}) {
    p(m.a, m.b) *= 1.5;
    const double now = CoarseLoss(p, gt, 1.0).value;
    EXPECT_LT(now, prev);
    prev = now;
  }
  ConfidenceMatrix zero = ConfidenceMatrix::Constant(2, 2, 0.5);
  zero(1, 1) = 0.0;
  const CoarseLossResult r = CoarseLoss(zero, Gt({{1, 1}}), 1.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_NEAR(r.value, -std::log(1e-12), 1e-9);
  EXPECT_FALSE(CoarseLoss(zero, Gt({{0, 0}}), 1.0).clamped);
}

Heatmap OneHot(int size, int dy, int dx) {
  Heatmap h{size, std::vector<double>(static_cast<size_t>(size) * size, 0.0)};
  h.weights[static_cast<size_t>(dy + size / 2) * size + dx + size / 2] = 1.0;
  return h;
}

TEST(RefineFineMatch, Cases) {
  const PixelPoint c{10.0, 20.0};
  PixelPoint r = RefineFineMatch(OneHot(3, 0, 0), c);
  EXPECT_EQ(r.u, 10.0);
  EXPECT_EQ(r.v, 20.0);
  // Offsets are (dy, dx); (+1, 0) moves one row down.
  r = RefineFineMatch(OneHot(3, 1, 0), c);
  EXPECT_EQ(r.u, 10.0);
  EXPECT_EQ(r.v, 21.0);
  r = RefineFineMatch(OneHot(5, 0, -2), c, 2.0);
  EXPECT_EQ(r.u, 6.0);
  EXPECT_EQ(r.v, 20.0);

  Heatmap two = OneHot(5, -1, -2);
  two.weights[static_cast<size_t>(1 + 2) * 5 + 2 + 2] = 1.0;  // (+1, +2)
  r = RefineFineMatch(two, c);
  EXPECT_NEAR(r.u, 10.0, 1e-15);
  EXPECT_NEAR(r.v, 20.0, 1e-15);
  Heatmap skew = OneHot(3, 0, 1);
  skew.weights[0] = 3.0;  // (-1, -1) with weight 3
  r = RefineFineMatch(skew, c);
  EXPECT_NEAR(r.u, 10.0 + (1.0 - 3.0) / 4.0, 1e-15);
  EXPECT_NEAR(r.v, 20.0 - 3.0 / 4.0, 1e-15);
}

TEST(RefineFineMatch, Errors) {
  ExpectError(ErrorCode::kDegenerateHeatmap,
              [] { RefineFineMatch(Heatmap{3, std::vector<double>(9, 0.0)}, {}); });
  ExpectError(ErrorCode::kInvalidArgument,
              [] { RefineFineMatch(Heatmap{2, std::vector<double>(4, 1.0)}, {}); });
  ExpectError(ErrorCode::kInvalidArgument,
              [] { RefineFineMatch(Heatmap{3, std::vector<double>(8, 1.0)}, {}); });
  Heatmap neg{3, std::vector<double>(9, 1.0)};
  neg.weights[4] = -1.0;
  ExpectError(ErrorCode::kInvalidArgument, [&] { RefineFineMatch(neg, {}); });
}

TEST(FineLoss, Cases) {
  const std::vector<PixelPoint> gt{{1, 1}, {5, 5}, {2, 8}};
  const std::vector<MatchLabel> labels{MatchLabel::kVV, MatchLabel::kVO, MatchLabel::kOV};
  EXPECT_EQ(FineLoss(gt, gt, labels, 1.0), 0.0);

  const std::vector<PixelPoint> one_pred{{4, 5}}, one_gt{{1, 1}};
  const std::vector<MatchLabel> one_label{MatchLabel::kVV};
  EXPECT_EQ(FineLoss(one_pred, one_gt, one_label, 1.0), 25.0);

  // vv errors 25 and 1 (mean 13), vo error 4, ov error 9 + 16 = 25.
  const std::vector<PixelPoint> pred{{4, 5}, {6, 5}, {5, 7}, {5, 12}};
  const std::vector<PixelPoint> truth{{1, 1}, {5, 5}, {5, 5}, {2, 8}};
  const std::vector<MatchLabel> mixed{MatchLabel::kVV, MatchLabel::kVV, MatchLabel::kVO,
                                      MatchLabel::kOV};
  EXPECT_DOUBLE_EQ(FineLoss(pred, truth, mixed, 1.0), 13.0 + 4.0 + 25.0);
  EXPECT_DOUBLE_EQ(FineLoss(pred, truth, mixed, 0.5), 13.0 + 0.5 * (4.0 + 25.0));

  ExpectError(ErrorCode::kLengthMismatch, [&] { FineLoss(pred, gt, mixed, 1.0); });
  EXPECT_STREQ(MatchLabelName(MatchLabel::kOV), "ov");
}

TEST(TotalLoss, Cases) {
  EXPECT_DOUBLE_EQ(TotalLoss(1, 1, 1, 1.0, 0.1), 2.1);
  EXPECT_EQ(TotalLoss(0, 0, 0, 1.0, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(TotalLoss(2, 0.5, 1.0, 1.0, 0.1), 2.6);
}

}  // namespace
}  // namespace occmatch
