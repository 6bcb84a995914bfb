#include "occmatch/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "occmatch/io.h"
#include "occmatch/supervision.h"
#include "test_util.h"

namespace occmatch::synth {
namespace {

using testing::ExpectError;

SceneSpec PlaneAt(double z) {
  SceneSpec s;
  s.primitives.push_back({Plane{{0.0, 0.0, z}, {0.0, 0.0, -1.0}}, 0});
  return s;
}

CameraIntrinsics Small() {
  CameraIntrinsics k;
  k.fx = k.fy = 100.0;
  k.cx = 39.5;
  k.cy = 29.5;
  k.width = 80;
  k.height = 60;
  return k;
}

// Slab-method ray/box intersection, entry parameter only.
std::optional<double> RayBox(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& b) {
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) return std::nullopt;
      continue;
    }
    double a = (b.min[i] - o[i]) / d[i], c = (b.max[i] - o[i]) / d[i];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
  }
  if (t0 > t1 || t0 <= 0.0) return std::nullopt;
  return t0;
}

TEST(SceneSpec, Validate) {
  ExpectError(ErrorCode::kInvalidArgument, [] { SceneSpec{}.Validate(); });
  SceneSpec s;
  s.primitives.push_back({Plane{{0, 0, 1}, {0, 0, 0}}, 0});
  ExpectError(ErrorCode::kInvalidArgument, [&] { s.Validate(); });
  s.primitives[0] = {Box{{0, 0, 0}, {1, 0, 1}}, 0};
  ExpectError(ErrorCode::kInvalidArgument, [&] { s.Validate(); });
  s.primitives[0] = {Box{{0, 0, 0}, {1, 1, 1}}, -1};
  ExpectError(ErrorCode::kInvalidArgument, [&] { s.Validate(); });
}

TEST(FeatureOptions, Validate) {
  EXPECT_NO_THROW(FeatureOptions{}.Validate());
  FeatureOptions o;
  o.position_channels = 3;
  ExpectError(ErrorCode::kInvalidArgument, [&] { o.Validate(); });
  o = FeatureOptions{};
  o.texture_weight = 1.5;
  ExpectError(ErrorCode::kInvalidArgument, [&] { o.Validate(); });
  o = FeatureOptions{};
  o.length_scale = 0.0;
  ExpectError(ErrorCode::kInvalidArgument, [&] { o.Validate(); });
}

TEST(RenderDepth, FrontoParallelPlane) {
  const DepthMap d = RenderDepth(PlaneAt(2.0), PoseSE3::Identity(), Small());
  for (float v : d.data()) EXPECT_FLOAT_EQ(v, 2.0f);
}

TEST(RenderDepth, FacingAwayIsInvalid) {
  const PoseSE3 away(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitY()).toRotationMatrix(),
                     Eigen::Vector3d::Zero());
  const DepthMap d = RenderDepth(PlaneAt(2.0), away, Small());
  EXPECT_EQ(d.CountValid(), 0u);
}

TEST(RenderDepth, BoxOverridesPlaneLikeRayOracle) {
  SceneSpec s = PlaneAt(3.0);
  const Box box{{-0.3, -0.2, 1.5}, {0.2, 0.25, 2.0}};
  s.primitives.push_back({box, 1});
  const PoseSE3 pose(Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitY()).toRotationMatrix(),
                     Eigen::Vector3d(0.05, -0.02, 0.1));
  const CameraIntrinsics k = Small();
  const DepthMap d = RenderDepth(s, pose, k);
  int on_box = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      // Camera ray with unit z, so ray parameters are depths.
      const Eigen::Vector3d dir_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d o = pose.translation(), dir = pose.rotation() * dir_cam;
      double t = (3.0 - o.z()) / dir.z();
      if (const auto tb = RayBox(o, dir, box); tb && *tb < t) {
        t = *tb;
        ++on_box;
      }
      EXPECT_NEAR(d.at(x, y), t, 1e-5 * t) << x << "," << y;
    }
  }
  EXPECT_GT(on_box, 100);
}

TEST(RenderDepth, ViewConsistent) {
  for (const Fixture& fx : StandardFixtures()) {
    const DepthMap db = RenderDepth(fx.scene, fx.pose_b, fx.k);
    const PoseSE3 b_to_a = RelativePose(fx.pose_b, fx.pose_a);
    int visible = 0;
    for (int y = 0; y < fx.k.height; y += 7) {
      for (int x = 0; x < fx.k.width; x += 7) {
        if (!db.valid(x, y)) continue;
        const Eigen::Vector3d world = fx.pose_b * Unproject({1.0 * x, 1.0 * y}, db.at(x, y), fx.k);
        const Eigen::Vector3d in_a = b_to_a * Unproject({1.0 * x, 1.0 * y}, db.at(x, y), fx.k);
        if (in_a.z() <= 0) continue;
        const PixelPoint pa = Project(in_a, fx.k).px;
        if (!fx.k.Contains(pa)) continue;
        const auto hit = CastPixel(fx.scene, fx.pose_a, fx.k, pa);
        ASSERT_TRUE(hit.has_value());
        if ((hit->point - world).norm() > 1e-5) continue;  // hidden from A
        ++visible;
        EXPECT_NEAR(hit->t, in_a.z(), 1e-6);
      }
    }
    EXPECT_GT(visible, 1000) << fx.name;
  }
}

TEST(MakePair, IdentityPairIsAllCovisible) {
  const Fixture fx = *FindFixture("identity");
  const SyntheticPair p = MakePair(fx.scene, fx.pose_a, fx.pose_a, fx.k);
  for (const auto& c : p.classes_ab.pixels) EXPECT_EQ(c.cls, PixelClass::kCovisible);
  EXPECT_EQ(PairStatsFromClassMap(p.classes_ab).occlusion_ratio, 0.0);
  EXPECT_EQ(p.depth_a.data(), p.depth_b.data());
  EXPECT_EQ(p.coarse_a.rows(), 60);
  EXPECT_EQ(p.coarse_a.cols(), 80);
  EXPECT_EQ(p.fine_a.rows(), 240);
  EXPECT_EQ(p.fine_a.stride(), 2);
}

TEST(MakePair, TwoPlaneOccludedBandIsSilhouetteProjection) {
  // Background z_b, slab at z_f covering x >= e, B moved by baseline b.
  // A background pixel with slope s is hidden from B when the segment to B
  // crosses the slab: s >= (b + (e - b) z_b / z_f) / z_b; it is hidden from
  // A itself when s >= e / z_f.
  const double zf = 1.5, zb = 3.0, e = 0.3, b = 0.3;
  const Fixture fx = *FindFixture("two_plane");
  const CameraIntrinsics& k = fx.k;
  const double s_lo = (b + (e - b) * zb / zf) / zb, s_hi = e / zf;
  const double u_lo = k.fx * s_lo + k.cx, u_hi = k.fx * s_hi + k.cx;
  ASSERT_DOUBLE_EQ(u_lo, 369.5);
  ASSERT_DOUBLE_EQ(u_hi, 419.5);
  const ClassMap cm = AnalyticClassMap(fx.scene, fx.pose_a, fx.pose_b, k, OcclusionMargin{});
  for (int y = 0; y < k.height; y += 5) {
    for (int x = 0; x < k.width; ++x) {
      const bool in_band = x > u_lo && x < u_hi;
      EXPECT_EQ(cm.at(x, y).cls == PixelClass::kOccludedInOther, in_band) << x << "," << y;
    }
  }
}

TEST(MakePair, AnalyticClassesAgreeWithDepthSupervision) {
  for (const Fixture& fx : StandardFixtures()) {
    const SyntheticPair p = MakePair(fx.scene, fx.pose_a, fx.pose_b, fx.k);
    const ClassMap depth_based =
        ClassifyImage(p.depth_a, p.depth_b, {fx.k, fx.k, RelativePose(fx.pose_a, fx.pose_b)}, {});
    size_t agree = 0, valid = 0;
    for (size_t i = 0; i < depth_based.pixels.size(); ++i) {
      if (p.classes_ab.pixels[i].cls == PixelClass::kInvalidDepth) continue;
      ++valid;
      agree += p.classes_ab.pixels[i].cls == depth_based.pixels[i].cls;
    }
    EXPECT_GE(static_cast<double>(agree), 0.99 * valid) << fx.name;
  }
}

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

TEST(MakePair, MatchedPatchFeaturesAreSimilar) {
  // A plane at z = 4 and a 0.128 m baseline: 16 px of disparity, exactly two
  // patches, so A's patch centers reproject onto B's patch grid.
  const SceneSpec scene = PlaneAt(4.0);
  const CameraIntrinsics k = DefaultIntrinsics();
  const PoseSE3 pose_b(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.128, 0, 0));
  const SyntheticPair p = MakePair(scene, PoseSE3::Identity(), pose_b, k);
  const CoarseMatchSet gt = AnalyticCoarseMatches(scene, PoseSE3::Identity(), pose_b, k, {}, 8);
  ASSERT_GT(gt.vv.size(), 1000u);
  const int cols = p.coarse_a.cols();
  double worst = 1.0;
  for (const PatchPair& m : gt.vv) {
    EXPECT_EQ(m.a - m.b, 2);
    worst = std::min(worst, Cosine(p.coarse_a.Cell(m.a / cols, m.a % cols),
                                   p.coarse_b.Cell(m.b / cols, m.b % cols)));
  }
  EXPECT_GT(worst, 0.99);

  SeededRng rng(3);
  double sum = 0.0;
  const int n = 2000, cells = p.coarse_a.cells();
  for (int i = 0; i < n; ++i) {
    const int a = static_cast<int>(rng.Below(cells)), b = static_cast<int>(rng.Below(cells));
    sum += Cosine(p.coarse_a.Cell(a / cols, a % cols), p.coarse_b.Cell(b / cols, b % cols));
  }
  EXPECT_LT(sum / n, 0.5);
}

TEST(MakePair, Deterministic) {
  const Fixture fx = *FindFixture("box_roll30");
  const SyntheticPair a = MakePair(fx.scene, fx.pose_a, fx.pose_b, fx.k);
  const SyntheticPair b = MakePair(fx.scene, fx.pose_a, fx.pose_b, fx.k);
  EXPECT_EQ(a.coarse_b.values(), b.coarse_b.values());
  EXPECT_EQ(a.fine_a.values(), b.fine_a.values());
}

TEST(Fixtures, StandardSetAndLookup) {
  const auto all = StandardFixtures();
  std::vector<std::string> names;
  for (const auto& f : all) names.push_back(f.name);
  EXPECT_EQ(names, (std::vector<std::string>{"identity", "pure_rotation", "stereo", "two_plane",
                                             "box_roll30"}));
  EXPECT_FALSE(FindFixture("nope").has_value());
  const Fixture roll = *FindFixture("box_roll30");
  const PoseSE3 rel = RelativePose(roll.pose_a, roll.pose_b);
  EXPECT_NEAR(Eigen::AngleAxisd(rel.rotation()).angle() * 180.0 / M_PI, 30.0, 1e-9);
  EXPECT_FALSE(FindFixture("identity")->has_baseline);
  EXPECT_FALSE(FindFixture("pure_rotation")->has_baseline);
  EXPECT_TRUE(FindFixture("stereo")->has_baseline);
}

void ExpectSamePose(const PoseSE3& a, const PoseSE3& b) {
  EXPECT_LT((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.translation() - b.translation()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fixtures, ShippedJsonMatchesBuiltIns) {
  for (const Fixture& f : StandardFixtures()) {
    const std::string path = std::string(OCCMATCH_FIXTURE_DIR) + "/" + f.name + ".json";
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    const Fixture g = io::FixtureFromJson(io::ReadJson(path), path);
    EXPECT_EQ(g.name, f.name);
    EXPECT_EQ(g.has_baseline, f.has_baseline);
    EXPECT_EQ(g.k.fx, f.k.fx);
    EXPECT_EQ(g.k.cx, f.k.cx);
    EXPECT_EQ(g.k.width, f.k.width);
    ExpectSamePose(g.pose_a, f.pose_a);
    ExpectSamePose(g.pose_b, f.pose_b);
    ASSERT_EQ(g.scene.primitives.size(), f.scene.primitives.size());
    for (size_t i = 0; i < f.scene.primitives.size(); ++i) {
      const Primitive& p = f.scene.primitives[i];
      const Primitive& q = g.scene.primitives[i];
      EXPECT_EQ(p.texture, q.texture);
      ASSERT_EQ(p.shape.index(), q.shape.index());
      if (const auto* plane = std::get_if<Plane>(&p.shape)) {
        EXPECT_EQ(plane->point, std::get<Plane>(q.shape).point);
        EXPECT_EQ(plane->normal, std::get<Plane>(q.shape).normal);
      } else {
        EXPECT_EQ(std::get<Box>(p.shape).min, std::get<Box>(q.shape).min);
        EXPECT_EQ(std::get<Box>(p.shape).max, std::get<Box>(q.shape).max);
      }
    }
  }
}

}  // namespace
}  // namespace occmatch::synth
