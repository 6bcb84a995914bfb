#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "occmatch/io.h"
#include "occmatch/matching.h"
#include "occmatch/occupancy.h"
#include "occmatch/pipeline.h"
#include "occmatch/pose_eval.h"
#include "occmatch/supervision.h"
#include "occmatch/synth.h"

namespace occmatch::cli {

// Effective settings of a run, merged from defaults, a config file and flags.
struct RunConfig {
  int patch_stride = 8;
  OcclusionMargin margin;
  OccupancyConfig occupancy;
  MatchingConfig matching;
  FineOptions fine;
  RansacConfig ransac;
  std::vector<double> thresholds = {5.0, 10.0, 20.0};
  // Seeds the gumbel draws and RANSAC; overrides the seeds held in
  // `matching` and `ransac`.
  std::uint64_t seed = 0;
  // Pair filters applied by `supervise`.
  std::optional<double> min_overlap;
  std::optional<double> max_overlap;
  std::optional<double> min_occlusion;
  synth::FeatureOptions features;

  // Checks every field against the owning module before any work starts.
  void Validate() const;
};

io::Json ToJson(const RunConfig& cfg);
// Overlays the fields present in `j` onto `cfg`. Unknown keys are schema
// errors so that typos do not silently fall back to defaults.
void ApplyConfig(const io::Json& j, RunConfig& cfg, const std::string& where);

// Raised by `supervise` when a pair fails the overlap/occlusion filters.
class FilterRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File names inside a pair directory.
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kDepthA = "depth_a.odm";
inline constexpr const char* kDepthB = "depth_b.odm";
inline constexpr const char* kCoarseA = "coarse_a.ofg";
inline constexpr const char* kCoarseB = "coarse_b.ofg";
inline constexpr const char* kFineA = "fine_a.ofg";
inline constexpr const char* kFineB = "fine_b.ofg";
inline constexpr const char* kSupervision = "supervision.json";
inline constexpr const char* kOccupancyA = "occ_a.ocg";
inline constexpr const char* kOccupancyB = "occ_b.ocg";
inline constexpr const char* kMatches = "matches.jsonl";

struct Manifest {
  std::string id;
  CameraIntrinsics k;
  PoseSE3 pose_a;
  PoseSE3 pose_b;
  double occlusion_ratio = 0.0;
  double overlap_score = 0.0;
};

Manifest ReadManifest(const std::string& pair_dir);

// Renders the pair and writes depths, feature grids and the manifest.
Manifest Synth(const synth::Fixture& fixture, const std::string& out_dir, const RunConfig& cfg);

// Ground-truth patch matches plus pair statistics. Throws FilterRejected
// (after computing the statistics, before writing) when a filter fails.
CoarseMatchSet Supervise(const std::string& pair_dir, const RunConfig& cfg);

// Ground-truth occupancy of both views.
void Voxelize(const std::string& pair_dir, const RunConfig& cfg);

// Labels predicted matches with the ground truth: vo when the A patch has
// an occluded target, ov when the B patch is the source of an ov pair,
// otherwise vv.
std::vector<MatchLabel> LabelMatches(const std::vector<PipelineMatch>& matches,
                                     const CoarseMatchSet& gt);

PipelineResult Match(const std::string& pair_dir, const RunConfig& cfg);

struct PairReport {
  std::string id;
  double occlusion_ratio = 0.0;
  // Infinite when estimation failed.
  double rot_err_deg = 0.0;
  double t_err_deg = 0.0;
  double pose_err_deg = 0.0;
  int inliers = 0;
  std::string failure;
};

struct EvalReport {
  std::vector<PairReport> pairs;
  // Zero-baseline pairs have no essential matrix and are left out.
  std::vector<std::string> skipped;
  std::vector<double> thresholds;
  std::vector<double> auc;
};

// Pose evaluation of `matches_name` inside each pair directory; the report
// keeps the input order.
EvalReport Eval(const std::vector<std::string>& pair_dirs, const RunConfig& cfg,
                const std::string& matches_name = kMatches);
io::Json ToJson(const EvalReport& report, const RunConfig& cfg);
EvalReport ReportFromJson(const io::Json& j, const std::string& where);

// "count,mean_err_deg" rows of the cumulative occlusion curve.
std::string CurveCsv(const EvalReport& report);

}  // namespace occmatch::cli
