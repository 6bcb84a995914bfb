#include "occmatch/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "occmatch/error.h"
#include "occmatch/random.h"

namespace occmatch::synth {

namespace {

constexpr double kMinT = 1e-9;

std::optional<double> IntersectPlane(const Plane& p, const Eigen::Vector3d& o,
                                     const Eigen::Vector3d& d) {
  const double denom = p.normal.dot(d);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = p.normal.dot(p.point - o) / denom;
  if (t <= kMinT) return std::nullopt;
  return t;
}

// Slab test. A ray starting inside the box hits its exit face.
std::optional<double> IntersectBox(const Box& b, const Eigen::Vector3d& o,
                                   const Eigen::Vector3d& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d(i)) < 1e-15) {
      if (o(i) < b.min(i) || o(i) > b.max(i)) return std::nullopt;
      continue;
    }
    double t0 = (b.min(i) - o(i)) / d(i);
    double t1 = (b.max(i) - o(i)) / d(i);
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > kMinT) return t_near;
  if (t_far > kMinT) return t_far;
  return std::nullopt;
}

Eigen::Vector3d CameraRay(const CameraIntrinsics& k, const PixelPoint& px) {
  return {(px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0};
}

std::vector<double> TextureEmbedding(int texture, int channels, std::uint64_t seed) {
  SeededRng rng(SplitMix64(seed ^ SplitMix64(static_cast<std::uint64_t>(texture) + 1)));
  std::vector<double> e(channels);
  double norm = 0.0;
  for (double& x : e) {
    x = rng.Normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : e) x /= norm;
  return e;
}

// Frequencies drawn from N(0, I / l^2). Each one contributes a (cos, sin)
// pair, so <f(x), f(y)> = mean_k cos(w_k . (x - y)) depends only on x - y.
std::vector<Eigen::Vector3d> MakeFrequencies(const FeatureOptions& o) {
  SeededRng rng(o.seed);
  std::vector<Eigen::Vector3d> omega;
  for (int i = 0; i < o.position_channels / 2; ++i) {
    const Eigen::Vector3d w(rng.Normal(), rng.Normal(), rng.Normal());
    omega.push_back(w / o.length_scale);
  }
  return omega;
}

}  // namespace

void FeatureOptions::Validate() const {
  const FeatureOptions& o = *this;
  OCCMATCH_CHECK(o.position_channels >= 0 && o.texture_channels >= 0 &&
                     o.position_channels + o.texture_channels > 0,
                 ErrorCode::kInvalidArgument, "feature channel counts must be positive");
  OCCMATCH_CHECK(o.position_channels % 2 == 0, ErrorCode::kInvalidArgument,
                 "position channels come in (cos, sin) pairs");
  OCCMATCH_CHECK(o.length_scale > 0.0, ErrorCode::kInvalidArgument,
                 "length scale must be positive");
  OCCMATCH_CHECK(o.texture_weight >= 0.0 && o.texture_weight <= 1.0,
                 ErrorCode::kInvalidArgument, "texture weight must lie in [0, 1]");
  OCCMATCH_CHECK(o.amplitude > 0.0, ErrorCode::kInvalidArgument, "amplitude must be positive");
  OCCMATCH_CHECK(o.footprint_samples >= 1, ErrorCode::kInvalidArgument,
                 "footprint samples must be >= 1");
}

void SceneSpec::Validate() const {
  OCCMATCH_CHECK(!primitives.empty(), ErrorCode::kInvalidArgument, "scene has no primitives");
  for (const Primitive& p : primitives) {
    if (const auto* plane = std::get_if<Plane>(&p.shape)) {
      OCCMATCH_CHECK(plane->normal.norm() > 0.0 && plane->point.allFinite() &&
                         plane->normal.allFinite(),
                     ErrorCode::kInvalidArgument, "plane needs a finite non-zero normal");
    } else {
      const Box& b = std::get<Box>(p.shape);
      OCCMATCH_CHECK((b.max - b.min).minCoeff() > 0.0 && b.min.allFinite() && b.max.allFinite(),
                     ErrorCode::kInvalidArgument, "box extent must be positive");
    }
    OCCMATCH_CHECK(p.texture >= 0, ErrorCode::kInvalidArgument, "texture id must be >= 0");
  }
}

std::optional<RayHit> CastRay(const SceneSpec& scene, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& direction) {
  std::optional<RayHit> best;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& prim = scene.primitives[i];
    const std::optional<double> t =
        std::visit([&](const auto& s) -> std::optional<double> {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Plane>) {
            return IntersectPlane(s, origin, direction);
          } else {
            return IntersectBox(s, origin, direction);
          }
        }, prim.shape);
    if (t && (!best || *t < best->t)) {
      best = RayHit{*t, static_cast<int>(i), prim.texture, origin + *t * direction};
    }
  }
  return best;
}

std::optional<RayHit> CastPixel(const SceneSpec& scene, const PoseSE3& pose,
                                const CameraIntrinsics& k, const PixelPoint& px) {
  return CastRay(scene, pose.translation(), pose.rotation() * CameraRay(k, px));
}

DepthMap RenderDepth(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k) {
  k.Validate();
  DepthMap depth(k.width, k.height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const auto hit = CastPixel(scene, pose, k, {static_cast<double>(x), static_cast<double>(y)});
      if (hit) depth.at(x, y) = static_cast<float>(hit->t);
    }
  }
  return depth;
}

ClassMap AnalyticClassMap(const SceneSpec& scene, const PoseSE3& pose_src,
                          const PoseSE3& pose_dst, const CameraIntrinsics& k,
                          const OcclusionMargin& margin) {
  k.Validate();
  margin.Validate();
  ClassMap out;
  out.width = k.width;
  out.height = k.height;
  out.pixels.resize(static_cast<size_t>(k.width) * k.height);
  const PoseSE3 world_to_dst = pose_dst.Inverse();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      PixelClassification& c = out.pixels[static_cast<size_t>(y) * k.width + x];
      const auto hit = CastPixel(scene, pose_src, k, {static_cast<double>(x), static_cast<double>(y)});
      if (!hit) {
        c.cls = PixelClass::kInvalidDepth;
        continue;
      }
      const Eigen::Vector3d p = world_to_dst * hit->point;
      if (p.z() <= 0.0) {
        c.cls = PixelClass::kBehindCamera;
        continue;
      }
      const Projection proj = Project(p, k);
      c.reprojected = proj.px;
      c.projected_depth = proj.depth;
      if (!k.Contains(proj.px)) {
        c.cls = PixelClass::kOutOfBounds;
        continue;
      }
      // The ray through the projection reaches the point itself, so the hit
      // is at most the projected depth.
      const auto front = CastPixel(scene, pose_dst, k, proj.px);
      const double visible = front ? front->t : proj.depth;
      c.cls = proj.depth - visible > margin(visible) ? PixelClass::kOccludedInOther
                                                     : PixelClass::kCovisible;
    }
  }
  return out;
}

CoarseMatchSet AnalyticCoarseMatches(const SceneSpec& scene, const PoseSE3& pose_a,
                                     const PoseSE3& pose_b, const CameraIntrinsics& k,
                                     const OcclusionMargin& margin, int patch_stride) {
  CoarseMatchSet out;
  out.patch_stride = patch_stride;
  out.grid_a = PatchGrid::ForImage(k.width, k.height, patch_stride);
  out.grid_b = out.grid_a;
  const ClassMap ab = AnalyticClassMap(scene, pose_a, pose_b, k, margin);
  const ClassMap ba = AnalyticClassMap(scene, pose_b, pose_a, k, margin);
  const PatchGrid& g = out.grid_a;
  for (int i = 0; i < g.count(); ++i) {
    const PixelPoint c = g.CenterPixel(i, k.width, k.height);
    const PixelClassification& fa = ab.at(PixelColumn(c.u), PixelRow(c.v));
    if (fa.cls == PixelClass::kCovisible) {
      out.vv.push_back({i, g.IndexOf(fa.reprojected)});
    } else if (fa.cls == PixelClass::kOccludedInOther) {
      out.vo.push_back({i, g.IndexOf(fa.reprojected)});
    }
    const PixelClassification& fb = ba.at(PixelColumn(c.u), PixelRow(c.v));
    if (fb.cls == PixelClass::kOccludedInOther) {
      out.ov.push_back({g.IndexOf(fb.reprojected), i});
    }
  }
  std::sort(out.ov.begin(), out.ov.end());
  out.ov.erase(std::unique(out.ov.begin(), out.ov.end()), out.ov.end());
  return out;
}

FeatureGrid CoarseFeatures(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k,
                           const FeatureOptions& options, int stride) {
  k.Validate();
  options.Validate();
  const PatchGrid grid = PatchGrid::ForImage(k.width, k.height, stride);
  const std::vector<Eigen::Vector3d> omega = MakeFrequencies(options);
  const int nf = static_cast<int>(omega.size());
  const int cp = options.position_channels;
  const int ct = options.texture_channels;
  FeatureGrid out(cp + ct, grid.rows, grid.cols, stride);
  const double wp = options.amplitude *
                    std::sqrt(1.0 - options.texture_weight * options.texture_weight) /
                    std::sqrt(std::max(nf, 1));
  const double wt = options.amplitude * options.texture_weight;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const PixelPoint px =
          options.sample_offset < 0.0
              ? grid.CenterPixel(r * grid.cols + c, k.width, k.height)
              : PixelPoint{stride * c + options.sample_offset, stride * r + options.sample_offset};
      const auto hit = CastPixel(scene, pose, k, px);
      if (!hit) continue;  // zero feature
      const int ns = options.footprint_samples;
      int count = 0;
      std::vector<double> acc(cp, 0.0);
      for (int sy = 0; sy < ns; ++sy) {
        for (int sx = 0; sx < ns; ++sx) {
          PixelPoint q = px;
          if (ns > 1) {
            q.u = c * stride - 0.5 + (sx + 0.5) * stride / ns;
            q.v = r * stride - 0.5 + (sy + 0.5) * stride / ns;
          }
          const auto h = ns > 1 ? CastPixel(scene, pose, k, q) : hit;
          if (!h) continue;
          ++count;
          for (int i = 0; i < nf; ++i) {
            const double phase = omega[i].dot(h->point);
            acc[2 * i] += std::cos(phase);
            acc[2 * i + 1] += std::sin(phase);
          }
        }
      }
      for (int i = 0; i < cp; ++i) out.at(i, r, c) = wp * acc[i] / std::max(count, 1);
      const std::vector<double> tex = TextureEmbedding(hit->texture, ct, options.seed);
      for (int i = 0; i < ct; ++i) out.at(cp + i, r, c) = wt * tex[i];
    }
  }
  return out;
}

FeatureGrid FineFeatures(const SceneSpec& scene, const PoseSE3& pose, const CameraIntrinsics& k,
                         const FeatureOptions& options, int stride) {
  k.Validate();
  const int rows = (k.height + stride - 1) / stride;
  const int cols = (k.width + stride - 1) / stride;
  FeatureGrid out(4, rows, cols, stride, options.fine_miss_value);
  const double offset = 0.5 * (stride - 1);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const PixelPoint px{stride * c + offset, stride * r + offset};
      const auto hit = CastPixel(scene, pose, k, px);
      if (!hit) continue;
      for (int i = 0; i < 3; ++i) out.at(i, r, c) = hit->point(i);
      out.at(3, r, c) = options.fine_texture_scale * hit->texture;
    }
  }
  return out;
}

SyntheticPair MakePair(const SceneSpec& scene, const PoseSE3& pose_a, const PoseSE3& pose_b,
                       const CameraIntrinsics& k, const OcclusionMargin& margin,
                       const FeatureOptions& features) {
  scene.Validate();
  SyntheticPair out;
  out.k = k;
  out.pose_a = pose_a;
  out.pose_b = pose_b;
  out.depth_a = RenderDepth(scene, pose_a, k);
  out.depth_b = RenderDepth(scene, pose_b, k);
  out.classes_ab = AnalyticClassMap(scene, pose_a, pose_b, k, margin);
  out.classes_ba = AnalyticClassMap(scene, pose_b, pose_a, k, margin);
  out.coarse_a = CoarseFeatures(scene, pose_a, k, features);
  FeatureOptions features_b = features;
  if (features.b_at_patch_centroid) features_b.sample_offset = 0.5 * (8 - 1);
  out.coarse_b = CoarseFeatures(scene, pose_b, k, features_b);
  out.fine_a = FineFeatures(scene, pose_a, k, features);
  out.fine_b = FineFeatures(scene, pose_b, k, features);
  return out;
}

CameraIntrinsics DefaultIntrinsics() {
  CameraIntrinsics k;
  k.fx = k.fy = 500.0;
  k.cx = 319.5;
  k.cy = 239.5;
  k.width = 640;
  k.height = 480;
  return k;
}

PoseSE3 MakePose(const Eigen::Vector3d& axis, double angle_deg, const Eigen::Vector3d& center) {
  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(angle_deg * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
  return PoseSE3(r, center);
}

Fixture TwoPlaneFixture(double z_front, double z_back, double front_edge_x, double baseline,
                        const CameraIntrinsics& k) {
  OCCMATCH_CHECK(z_front > 0.0 && z_back > z_front, ErrorCode::kInvalidArgument,
                 "two-plane fixture needs 0 < z_front < z_back");
  Fixture f;
  f.name = "two_plane";
  f.k = k;
  f.scene.primitives.push_back({Plane{{0.0, 0.0, z_back}, {0.0, 0.0, -1.0}}, 0});
  // Thin slab whose near face is the occluding plane.
  f.scene.primitives.push_back(
      {Box{{front_edge_x, -100.0, z_front}, {front_edge_x + 200.0, 100.0, z_front + 1e-3}}, 1});
  f.pose_a = PoseSE3::Identity();
  f.pose_b = MakePose(Eigen::Vector3d::UnitZ(), 0.0, {baseline, 0.0, 0.0});
  return f;
}

std::vector<Fixture> StandardFixtures() {
  const CameraIntrinsics k = DefaultIntrinsics();
  const Eigen::Vector3d y_axis = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d z_axis = Eigen::Vector3d::UnitZ();

  SceneSpec box_scene;
  box_scene.primitives.push_back({Plane{{0.0, 0.0, 3.0}, {0.0, 0.0, -1.0}}, 0});
  box_scene.primitives.push_back({Box{{-0.4, -0.3, 2.0}, {0.4, 0.3, 2.4}}, 1});

  std::vector<Fixture> out;
  out.push_back({"identity", box_scene, PoseSE3::Identity(), PoseSE3::Identity(), k, false});
  out.push_back({"pure_rotation", box_scene, PoseSE3::Identity(),
                 MakePose(y_axis, 5.0, Eigen::Vector3d::Zero()), k, false});

  SceneSpec stereo;
  stereo.primitives.push_back({Plane{{0.0, 0.0, 4.0}, {0.0, 0.0, -1.0}}, 0});
  stereo.primitives.push_back({Box{{-0.5, -0.4, 2.5}, {0.1, 0.4, 3.0}}, 1});
  stereo.primitives.push_back({Box{{0.6, -0.2, 1.8}, {0.9, 0.5, 2.1}}, 2});
  out.push_back({"stereo", stereo, PoseSE3::Identity(),
                 MakePose(z_axis, 0.0, {0.2, 0.0, 0.0}), k, true});

  Fixture two = TwoPlaneFixture(1.5, 3.0, 0.3, 0.3, k);
  out.push_back(two);

  SceneSpec roll;
  roll.primitives.push_back({Plane{{0.0, 0.0, 3.0}, {0.0, 0.0, -1.0}}, 0});
  roll.primitives.push_back({Box{{-0.3, -0.3, 1.8}, {0.3, 0.3, 2.2}}, 1});
  out.push_back({"box_roll30", roll, PoseSE3::Identity(),
                 MakePose(z_axis, 30.0, {0.25, 0.05, 0.0}), k, true});
  return out;
}

std::optional<Fixture> FindFixture(const std::string& name) {
  for (Fixture& f : StandardFixtures()) {
    if (f.name == name) return f;
  }
  return std::nullopt;
}

}  // namespace occmatch::synth
