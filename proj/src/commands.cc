#include "occmatch/commands.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "occmatch/error.h"

namespace occmatch::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::string Join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

// Rejects keys outside `known` so that misspelled settings fail loudly.
void CheckKeys(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  OCCMATCH_CHECK(j.is_object(), ErrorCode::kSchema, where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return key == k; });
    OCCMATCH_CHECK(ok, ErrorCode::kSchema, where + ": unknown field '" + key + "'");
  }
}

void SetDouble(const Json& j, const char* key, const std::string& where, double& out) {
  if (j.contains(key)) out = io::NumberField(j, key, where);
}

void SetInt(const Json& j, const char* key, const std::string& where, int& out) {
  if (j.contains(key)) out = io::IntField(j, key, where);
}

void SetBool(const Json& j, const char* key, const std::string& where, bool& out) {
  if (j.contains(key)) out = io::BoolField(j, key, where);
}

void SetOptional(const Json& j, const char* key, const std::string& where,
                 std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j[key].is_null()) {
    out.reset();
  } else {
    out = io::NumberField(j, key, where);
  }
}

std::uint64_t SeedField(const Json& j, const char* key, const std::string& where) {
  const Json& v = io::Field(j, key, where);
  OCCMATCH_CHECK(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                 ErrorCode::kSchema,
                 where + ": field '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

Json OptionalJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

const char* GranularityName(GumbelGranularity g) {
  return g == GumbelGranularity::kPerEntry ? "per_entry" : "per_matrix";
}

PoseSE3 RelativeBA(const Manifest& m) { return RelativePose(m.pose_a, m.pose_b); }

CoarseMatchSet GroundTruth(const std::string& pair_dir, const Manifest& m, const RunConfig& cfg) {
  const DepthMap depth_a = io::ReadDepth(Join(pair_dir, kDepthA));
  const DepthMap depth_b = io::ReadDepth(Join(pair_dir, kDepthB));
  const PoseSE3 t_ba = RelativeBA(m);
  SupervisionOptions opts;
  opts.margin = cfg.margin;
  opts.patch_stride = cfg.patch_stride;
  return CoarseMatchGroundTruth(depth_a, depth_b, m.k, m.k, t_ba, t_ba.Inverse(), opts);
}

Json PairList(const std::vector<PatchPair>& pairs) {
  Json out = Json::array();
  for (const PatchPair& p : pairs) out.push_back(Json::array({p.a, p.b}));
  return out;
}

std::string AucKey(double threshold) {
  // Integral thresholds print as "5", others in shortest form.
  if (threshold == std::floor(threshold) && std::abs(threshold) < 1e15) {
    return std::to_string(static_cast<long long>(threshold));
  }
  return io::FormatDouble(threshold);
}

// JSON cannot hold infinity; failed estimates are written as null.
Json ErrorJson(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double ErrorFromJson(const Json& j, const char* key, const std::string& where) {
  const Json& v = io::Field(j, key, where);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return io::NumberField(j, key, where);
}

}  // namespace

void RunConfig::Validate() const {
  OCCMATCH_CHECK(patch_stride > 0, ErrorCode::kInvalidArgument, "patch_stride must be positive");
  margin.Validate();
  occupancy.Validate();
  matching.Validate();
  OCCMATCH_CHECK(fine.search_radius >= 0 && fine.window_radius >= 0,
                 ErrorCode::kInvalidArgument, "fine radii must be >= 0");
  ransac.Validate();
  OCCMATCH_CHECK(!thresholds.empty(), ErrorCode::kInvalidArgument, "no AUC thresholds");
  for (double t : thresholds) {
    OCCMATCH_CHECK(t > 0.0 && std::isfinite(t), ErrorCode::kInvalidArgument,
                   "AUC thresholds must be positive");
  }
  for (const auto& f : {min_overlap, max_overlap, min_occlusion}) {
    OCCMATCH_CHECK(!f || (*f >= 0.0 && *f <= 1.0), ErrorCode::kInvalidArgument,
                   "filter bounds must lie in [0, 1]");
  }
  OCCMATCH_CHECK(!min_overlap || !max_overlap || *min_overlap <= *max_overlap,
                 ErrorCode::kInvalidArgument, "min_overlap exceeds max_overlap");
  features.Validate();
}

Json ToJson(const RunConfig& c) {
  const MatchingConfig& m = c.matching;
  const synth::FeatureOptions& f = c.features;
  return Json{
      {"patch_stride", c.patch_stride},
      {"margin", {{"absolute", c.margin.absolute}, {"relative", c.margin.relative}}},
      {"occupancy",
       {{"depth_bins", c.occupancy.depth_bins},
        {"d_min", c.occupancy.d_min},
        {"d_max", c.occupancy.d_max},
        {"spatial_stride", c.occupancy.spatial_stride}}},
      {"matching",
       {{"temperature", m.temperature},
        {"angles", m.angles},
        {"threshold", m.match_threshold},
        {"mutual", m.mutual},
        {"lambda1", m.lambda1},
        {"lambda2", m.lambda2},
        {"lambda3", m.lambda3},
        {"lambda4", m.lambda4},
        {"gumbel",
         {{"temperature", m.gumbel.temperature},
          {"hard", m.gumbel.hard},
          {"granularity", GranularityName(m.gumbel.granularity)}}},
        {"search_radius", c.fine.search_radius},
        {"window_radius", c.fine.window_radius}}},
      {"ransac",
       {{"max_iterations", c.ransac.max_iterations},
        {"inlier_threshold", c.ransac.inlier_threshold},
        {"confidence", c.ransac.confidence}}},
      {"thresholds", c.thresholds},
      {"seed", c.seed},
      {"filters",
       {{"min_overlap", OptionalJson(c.min_overlap)},
        {"max_overlap", OptionalJson(c.max_overlap)},
        {"min_occlusion", OptionalJson(c.min_occlusion)}}},
      {"features",
       {{"position_channels", f.position_channels},
        {"texture_channels", f.texture_channels},
        {"length_scale", f.length_scale},
        {"texture_weight", f.texture_weight},
        {"amplitude", f.amplitude},
        {"seed", f.seed}}},
  };
}

void ApplyConfig(const Json& j, RunConfig& c, const std::string& where) {
  CheckKeys(j,
            {"patch_stride", "margin", "occupancy", "matching", "ransac", "thresholds", "seed",
             "filters", "features"},
            where);
  SetInt(j, "patch_stride", where, c.patch_stride);
  if (j.contains("margin")) {
    const std::string at = where + ": margin";
    CheckKeys(j["margin"], {"absolute", "relative"}, at);
    SetDouble(j["margin"], "absolute", at, c.margin.absolute);
    SetDouble(j["margin"], "relative", at, c.margin.relative);
  }
  if (j.contains("occupancy")) {
    const std::string at = where + ": occupancy";
    const Json& o = j["occupancy"];
    CheckKeys(o, {"depth_bins", "d_min", "d_max", "spatial_stride"}, at);
    SetInt(o, "depth_bins", at, c.occupancy.depth_bins);
    SetDouble(o, "d_min", at, c.occupancy.d_min);
    SetDouble(o, "d_max", at, c.occupancy.d_max);
    SetInt(o, "spatial_stride", at, c.occupancy.spatial_stride);
  }
  if (j.contains("matching")) {
    const std::string at = where + ": matching";
    const Json& m = j["matching"];
    CheckKeys(m,
              {"temperature", "angles", "threshold", "mutual", "lambda1", "lambda2", "lambda3",
               "lambda4", "gumbel", "search_radius", "window_radius"},
              at);
    SetDouble(m, "temperature", at, c.matching.temperature);
    if (m.contains("angles")) c.matching.angles = io::NumberList(m, "angles", at);
    SetDouble(m, "threshold", at, c.matching.match_threshold);
    SetBool(m, "mutual", at, c.matching.mutual);
    SetDouble(m, "lambda1", at, c.matching.lambda1);
    SetDouble(m, "lambda2", at, c.matching.lambda2);
    SetDouble(m, "lambda3", at, c.matching.lambda3);
    SetDouble(m, "lambda4", at, c.matching.lambda4);
    SetInt(m, "search_radius", at, c.fine.search_radius);
    SetInt(m, "window_radius", at, c.fine.window_radius);
    if (m.contains("gumbel")) {
      const std::string gat = at + ": gumbel";
      const Json& g = m["gumbel"];
      CheckKeys(g, {"temperature", "hard", "granularity"}, gat);
      SetDouble(g, "temperature", gat, c.matching.gumbel.temperature);
      SetBool(g, "hard", gat, c.matching.gumbel.hard);
      if (g.contains("granularity")) {
        const std::string name = io::StringField(g, "granularity", gat);
        OCCMATCH_CHECK(name == "per_entry" || name == "per_matrix", ErrorCode::kSchema,
                       gat + ": field 'granularity' must be \"per_entry\" or \"per_matrix\"");
        c.matching.gumbel.granularity = name == "per_entry" ? GumbelGranularity::kPerEntry
                                                            : GumbelGranularity::kPerMatrix;
      }
    }
  }
  if (j.contains("ransac")) {
    const std::string at = where + ": ransac";
    const Json& r = j["ransac"];
    CheckKeys(r, {"max_iterations", "inlier_threshold", "confidence"}, at);
    SetInt(r, "max_iterations", at, c.ransac.max_iterations);
    SetDouble(r, "inlier_threshold", at, c.ransac.inlier_threshold);
    SetDouble(r, "confidence", at, c.ransac.confidence);
  }
  if (j.contains("thresholds")) c.thresholds = io::NumberList(j, "thresholds", where);
  if (j.contains("seed")) c.seed = SeedField(j, "seed", where);
  if (j.contains("filters")) {
    const std::string at = where + ": filters";
    const Json& f = j["filters"];
    CheckKeys(f, {"min_overlap", "max_overlap", "min_occlusion"}, at);
    SetOptional(f, "min_overlap", at, c.min_overlap);
    SetOptional(f, "max_overlap", at, c.max_overlap);
    SetOptional(f, "min_occlusion", at, c.min_occlusion);
  }
  if (j.contains("features")) {
    const std::string at = where + ": features";
    const Json& f = j["features"];
    CheckKeys(f,
              {"position_channels", "texture_channels", "length_scale", "texture_weight",
               "amplitude", "seed"},
              at);
    SetInt(f, "position_channels", at, c.features.position_channels);
    SetInt(f, "texture_channels", at, c.features.texture_channels);
    SetDouble(f, "length_scale", at, c.features.length_scale);
    SetDouble(f, "texture_weight", at, c.features.texture_weight);
    SetDouble(f, "amplitude", at, c.features.amplitude);
    if (f.contains("seed")) c.features.seed = SeedField(f, "seed", at);
  }
}

Manifest ReadManifest(const std::string& pair_dir) {
  const std::string path = Join(pair_dir, kManifest);
  const Json j = io::ReadJson(path);
  Manifest m;
  m.id = j.contains("id") ? io::StringField(j, "id", path) : fs::path(pair_dir).filename().string();
  m.k = io::IntrinsicsFromJson(io::Field(j, "k", path), path + ": k");
  m.pose_a = io::PoseFromJson(io::Field(j, "pose_a", path), path + ": pose_a");
  m.pose_b = io::PoseFromJson(io::Field(j, "pose_b", path), path + ": pose_b");
  m.occlusion_ratio = io::NumberField(j, "occlusion_ratio", path);
  m.overlap_score = io::NumberField(j, "overlap_score", path);
  return m;
}

Manifest Synth(const synth::Fixture& fixture, const std::string& out_dir, const RunConfig& cfg) {
  cfg.Validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  OCCMATCH_CHECK(!ec, ErrorCode::kIo, out_dir + ": cannot create directory: " + ec.message());
  const synth::SyntheticPair pair = synth::MakePair(fixture.scene, fixture.pose_a, fixture.pose_b,
                                                    fixture.k, cfg.margin, cfg.features);
  io::WriteDepth(Join(out_dir, kDepthA), pair.depth_a);
  io::WriteDepth(Join(out_dir, kDepthB), pair.depth_b);
  io::WriteFeatures(Join(out_dir, kCoarseA), pair.coarse_a);
  io::WriteFeatures(Join(out_dir, kCoarseB), pair.coarse_b);
  io::WriteFeatures(Join(out_dir, kFineA), pair.fine_a);
  io::WriteFeatures(Join(out_dir, kFineB), pair.fine_b);

  // Statistics of A against B from the ray-cast oracle.
  const PairStats stats = PairStatsFromClassMap(pair.classes_ab);
  Manifest m{fixture.name, fixture.k, fixture.pose_a, fixture.pose_b, stats.occlusion_ratio,
             stats.overlap_score};
  const Json files = {{"depth_a", kDepthA},   {"depth_b", kDepthB}, {"coarse_a", kCoarseA},
                      {"coarse_b", kCoarseB}, {"fine_a", kFineA},   {"fine_b", kFineB}};
  io::WriteJson(Join(out_dir, kManifest), Json{{"id", m.id},
                                               {"k", io::ToJson(m.k)},
                                               {"pose_a", io::ToJson(m.pose_a)},
                                               {"pose_b", io::ToJson(m.pose_b)},
                                               {"files", files},
                                               {"occlusion_ratio", m.occlusion_ratio},
                                               {"overlap_score", m.overlap_score},
                                               {"config", ToJson(cfg)}});
  return m;
}

CoarseMatchSet Supervise(const std::string& pair_dir, const RunConfig& cfg) {
  cfg.Validate();
  const Manifest m = ReadManifest(pair_dir);
  const DepthMap depth_a = io::ReadDepth(Join(pair_dir, kDepthA));
  const DepthMap depth_b = io::ReadDepth(Join(pair_dir, kDepthB));
  const PoseSE3 t_ba = RelativeBA(m);
  const PairStats stats = ComputePairStats(depth_a, depth_b, {m.k, m.k, t_ba}, cfg.margin);

  std::ostringstream why;
  if (cfg.min_overlap && stats.overlap_score < *cfg.min_overlap) {
    why << "overlap " << stats.overlap_score << " < min_overlap " << *cfg.min_overlap;
  } else if (cfg.max_overlap && stats.overlap_score > *cfg.max_overlap) {
    why << "overlap " << stats.overlap_score << " > max_overlap " << *cfg.max_overlap;
  } else if (cfg.min_occlusion && stats.occlusion_ratio < *cfg.min_occlusion) {
    why << "occlusion ratio " << stats.occlusion_ratio << " < min_occlusion "
        << *cfg.min_occlusion;
  }
  if (!why.str().empty()) throw FilterRejected(pair_dir + ": rejected: " + why.str());

  SupervisionOptions opts;
  opts.margin = cfg.margin;
  opts.patch_stride = cfg.patch_stride;
  const CoarseMatchSet gt =
      CoarseMatchGroundTruth(depth_a, depth_b, m.k, m.k, t_ba, t_ba.Inverse(), opts);
  io::WriteJson(Join(pair_dir, kSupervision), Json{{"id", m.id},
                                                   {"patch_stride", gt.patch_stride},
                                                   {"vv", PairList(gt.vv)},
                                                   {"vo", PairList(gt.vo)},
                                                   {"ov", PairList(gt.ov)},
                                                   {"occlusion_ratio", stats.occlusion_ratio},
                                                   {"overlap_score", stats.overlap_score},
                                                   {"config", ToJson(cfg)}});
  return gt;
}

void Voxelize(const std::string& pair_dir, const RunConfig& cfg) {
  cfg.Validate();
  const Manifest m = ReadManifest(pair_dir);
  const DepthMap depth_a = io::ReadDepth(Join(pair_dir, kDepthA));
  const DepthMap depth_b = io::ReadDepth(Join(pair_dir, kDepthB));
  for (const OccupancyTarget target : {OccupancyTarget::kA, OccupancyTarget::kB}) {
    const OccupancyGrid grid = BuildGroundTruthOccupancy(depth_a, depth_b, m.pose_a, m.pose_b,
                                                         m.k, m.k, target, cfg.occupancy);
    io::WriteOccupancy(Join(pair_dir, target == OccupancyTarget::kA ? kOccupancyA : kOccupancyB),
                       grid);
  }
}

std::vector<MatchLabel> LabelMatches(const std::vector<PipelineMatch>& matches,
                                     const CoarseMatchSet& gt) {
  std::set<int> vo_a;
  std::set<int> ov_b;
  for (const PatchPair& p : gt.vo) vo_a.insert(p.a);
  for (const PatchPair& p : gt.ov) ov_b.insert(p.b);
  std::vector<MatchLabel> out;
  out.reserve(matches.size());
  for (const PipelineMatch& m : matches) {
    if (vo_a.count(m.patch_a)) {
      out.push_back(MatchLabel::kVO);
    } else if (ov_b.count(m.patch_b)) {
      out.push_back(MatchLabel::kOV);
    } else {
      out.push_back(MatchLabel::kVV);
    }
  }
  return out;
}

PipelineResult Match(const std::string& pair_dir, const RunConfig& cfg) {
  cfg.Validate();
  const Manifest m = ReadManifest(pair_dir);
  const FeatureGrid coarse_a = io::ReadFeatures(Join(pair_dir, kCoarseA));
  const FeatureGrid coarse_b = io::ReadFeatures(Join(pair_dir, kCoarseB));
  const FeatureGrid fine_a = io::ReadFeatures(Join(pair_dir, kFineA));
  const FeatureGrid fine_b = io::ReadFeatures(Join(pair_dir, kFineB));
  const PairFeatures in{&coarse_a, &coarse_b, &fine_a,   &fine_b,
                        m.k.width, m.k.height, m.k.width, m.k.height};
  MatchingConfig matching = cfg.matching;
  matching.gumbel.seed = cfg.seed;
  PipelineResult result = MatchPair(in, matching, cfg.fine);
  const std::vector<MatchLabel> labels = LabelMatches(result.matches, GroundTruth(pair_dir, m, cfg));

  std::string text;
  for (size_t i = 0; i < result.matches.size(); ++i) {
    const PipelineMatch& pm = result.matches[i];
    const Json line = {{"a", {pm.a.u, pm.a.v}},
                       {"b", {pm.b.u, pm.b.v}},
                       {"conf", pm.confidence},
                       {"label", MatchLabelName(labels[i])},
                       {"pa", pm.patch_a},
                       {"pb", pm.patch_b},
                       {"branch", pm.branch}};
    text += line.dump() + "\n";
  }
  io::WriteText(Join(pair_dir, kMatches), text);
  return result;
}

namespace {

std::vector<Correspondence> ReadMatches(const std::string& path) {
  std::istringstream in(io::ReadText(path));
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kSchema, where + ": invalid JSON: " + e.what());
    }
    const std::vector<double> a = io::NumberList(j, "a", where);
    const std::vector<double> b = io::NumberList(j, "b", where);
    OCCMATCH_CHECK(a.size() == 2 && b.size() == 2, ErrorCode::kSchema,
                   where + ": fields 'a' and 'b' must hold two numbers");
    out.push_back({{a[0], a[1]}, {b[0], b[1]}});
  }
  return out;
}

PairReport EvaluatePair(const Manifest& m, const std::vector<Correspondence>& matches,
                        const RunConfig& cfg) {
  PairReport r;
  r.id = m.id;
  r.occlusion_ratio = m.occlusion_ratio;
  const PoseSE3 t_ba = RelativeBA(m);
  try {
    RansacConfig ransac = cfg.ransac;
    ransac.seed = cfg.seed;
    const EssentialEstimate est = EssentialFromMatches(matches, m.k, m.k, ransac);
    const PoseErrorReport e =
        PoseError(est.rotation, est.translation, t_ba.rotation(), t_ba.translation());
    r.rot_err_deg = e.rotation_error_deg;
    r.t_err_deg = e.translation_angle_error_deg;
    r.pose_err_deg = e.pose_error_deg;
    r.inliers = est.num_inliers;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientMatches &&
        e.code() != ErrorCode::kDegenerateConfiguration) {
      throw;
    }
    const double inf = std::numeric_limits<double>::infinity();
    r.rot_err_deg = r.t_err_deg = r.pose_err_deg = inf;
    r.failure = e.what();
  }
  return r;
}

}  // namespace

EvalReport Eval(const std::vector<std::string>& pair_dirs, const RunConfig& cfg,
                const std::string& matches_name) {
  cfg.Validate();
  OCCMATCH_CHECK(!pair_dirs.empty(), ErrorCode::kEmptyList, "no pairs to evaluate");
  const int n = static_cast<int>(pair_dirs.size());
  std::vector<Manifest> manifests(n);
  std::vector<std::vector<Correspondence>> matches(n);
  for (int i = 0; i < n; ++i) {
    manifests[i] = ReadManifest(pair_dirs[i]);
    matches[i] = ReadMatches(Join(pair_dirs[i], matches_name.c_str()));
  }
  std::vector<std::optional<PairReport>> results(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    if (RelativeBA(manifests[i]).translation().norm() <= 1e-9) continue;
    try {
      results[i] = EvaluatePair(manifests[i], matches[i], cfg);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  EvalReport report;
  report.thresholds = cfg.thresholds;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::kInvalidArgument, pair_dirs[i] + ": " + errors[i]);
    if (results[i]) {
      report.pairs.push_back(*results[i]);
    } else {
      report.skipped.push_back(manifests[i].id);
    }
  }
  if (!report.pairs.empty()) {
    std::vector<double> errs;
    for (const PairReport& p : report.pairs) errs.push_back(p.pose_err_deg);
    report.auc = PoseAuc(errs, cfg.thresholds);
  }
  return report;
}

Json ToJson(const EvalReport& report, const RunConfig& cfg) {
  Json pairs = Json::array();
  for (const PairReport& p : report.pairs) {
    Json j = {{"id", p.id},
              {"occlusion_ratio", p.occlusion_ratio},
              {"rot_err_deg", ErrorJson(p.rot_err_deg)},
              {"t_err_deg", ErrorJson(p.t_err_deg)},
              {"pose_err_deg", ErrorJson(p.pose_err_deg)},
              {"inliers", p.inliers}};
    if (!p.failure.empty()) j["failure"] = p.failure;
    pairs.push_back(std::move(j));
  }
  Json auc = Json::object();
  for (size_t i = 0; i < report.auc.size(); ++i) auc[AucKey(report.thresholds[i])] = report.auc[i];
  return Json{{"pairs", pairs}, {"auc", auc}, {"skipped", report.skipped}, {"config", ToJson(cfg)}};
}

EvalReport ReportFromJson(const Json& j, const std::string& where) {
  EvalReport r;
  const Json& pairs = io::Field(j, "pairs", where);
  OCCMATCH_CHECK(pairs.is_array(), ErrorCode::kSchema, where + ": field 'pairs' must be an array");
  for (size_t i = 0; i < pairs.size(); ++i) {
    const std::string at = where + ": pairs[" + std::to_string(i) + "]";
    const Json& p = pairs[i];
    PairReport pr;
    pr.id = io::StringField(p, "id", at);
    pr.occlusion_ratio = io::NumberField(p, "occlusion_ratio", at);
    pr.rot_err_deg = ErrorFromJson(p, "rot_err_deg", at);
    pr.t_err_deg = ErrorFromJson(p, "t_err_deg", at);
    pr.pose_err_deg = ErrorFromJson(p, "pose_err_deg", at);
    pr.inliers = io::IntField(p, "inliers", at);
    if (p.contains("failure")) pr.failure = io::StringField(p, "failure", at);
    r.pairs.push_back(pr);
  }
  return r;
}

std::string CurveCsv(const EvalReport& report) {
  std::vector<OcclusionSample> samples;
  for (const PairReport& p : report.pairs) samples.push_back({p.occlusion_ratio, p.pose_err_deg});
  std::string out = "count,mean_err_deg\n";
  for (const CurvePoint& c : CumulativeOcclusionCurve(samples)) {
    out += std::to_string(c.count) + "," + io::FormatDouble(c.mean_error_deg) + "\n";
  }
  return out;
}

}  // namespace occmatch::cli
