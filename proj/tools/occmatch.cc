// Command-line front-end: synth, supervise, voxelize, match, eval, curve.
//
// Settings are resolved as flags > --config file > defaults. The seed falls
// back to $OCCMATCH_SEED when neither the flag nor the config sets it.
// Exit status: 0 success, 2 a pair was rejected by a filter, 1 any error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "occmatch/commands.h"
#include "occmatch/error.h"
#include "occmatch/io.h"
#include "occmatch/synth.h"

namespace {

using occmatch::io::Json;
namespace cli = occmatch::cli;

// Flags that mirror RunConfig fields; unset flags leave the config alone.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> patch_stride;
  std::optional<double> margin_abs;
  std::optional<double> margin_rel;
  std::optional<int> depth_bins;
  std::optional<double> d_min;
  std::optional<double> d_max;
  std::optional<double> tau;
  std::vector<double> angles;
  std::optional<double> threshold;
  bool mutual = false;
  bool soft = false;
  std::optional<double> gumbel_temperature;
  std::optional<std::string> granularity;
  std::optional<int> ransac_iterations;
  std::optional<double> ransac_threshold;
  std::optional<double> ransac_confidence;
  std::vector<double> thresholds;
  std::optional<double> min_overlap;
  std::optional<double> max_overlap;
  std::optional<double> min_occlusion;

  void Register(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "seed for gumbel draws and RANSAC");
    app.add_option("--patch-stride", patch_stride, "coarse patch size in pixels");
    app.add_option("--margin-abs", margin_abs, "absolute occlusion margin (m)");
    app.add_option("--margin-rel", margin_rel, "relative occlusion margin");
    app.add_option("--depth-bins,-D", depth_bins, "occupancy depth bins");
    app.add_option("--d-min", d_min, "occupancy near depth (m)");
    app.add_option("--d-max", d_max, "occupancy far depth (m)");
    app.add_option("--tau", tau, "score temperature");
    app.add_option("--angles", angles, "rotation-alignment angles (deg)");
    app.add_option("--threshold", threshold, "match confidence threshold");
    app.add_flag("--mutual", mutual, "keep mutual nearest matches only");
    app.add_flag("--soft", soft, "soft gumbel selection");
    app.add_option("--gumbel-temperature", gumbel_temperature, "gumbel softmax temperature");
    app.add_option("--granularity", granularity, "per_entry or per_matrix");
    app.add_option("--ransac-iterations", ransac_iterations, "RANSAC iteration cap");
    app.add_option("--ransac-threshold", ransac_threshold, "Sampson inlier threshold");
    app.add_option("--ransac-confidence", ransac_confidence, "RANSAC confidence");
    app.add_option("--thresholds", thresholds, "AUC thresholds (deg)");
    app.add_option("--min-overlap", min_overlap, "reject pairs with lower overlap");
    app.add_option("--max-overlap", max_overlap, "reject pairs with higher overlap");
    app.add_option("--min-occlusion", min_occlusion, "reject pairs with lower occlusion");
  }

  Json Overrides() const {
    Json j = Json::object();
    if (seed) j["seed"] = *seed;
    if (patch_stride) j["patch_stride"] = *patch_stride;
    if (margin_abs) j["margin"]["absolute"] = *margin_abs;
    if (margin_rel) j["margin"]["relative"] = *margin_rel;
    if (depth_bins) j["occupancy"]["depth_bins"] = *depth_bins;
    if (d_min) j["occupancy"]["d_min"] = *d_min;
    if (d_max) j["occupancy"]["d_max"] = *d_max;
    if (tau) j["matching"]["temperature"] = *tau;
    if (!angles.empty()) j["matching"]["angles"] = angles;
    if (threshold) j["matching"]["threshold"] = *threshold;
    if (mutual) j["matching"]["mutual"] = true;
    if (soft) j["matching"]["gumbel"]["hard"] = false;
    if (gumbel_temperature) j["matching"]["gumbel"]["temperature"] = *gumbel_temperature;
    if (granularity) j["matching"]["gumbel"]["granularity"] = *granularity;
    if (ransac_iterations) j["ransac"]["max_iterations"] = *ransac_iterations;
    if (ransac_threshold) j["ransac"]["inlier_threshold"] = *ransac_threshold;
    if (ransac_confidence) j["ransac"]["confidence"] = *ransac_confidence;
    if (!thresholds.empty()) j["thresholds"] = thresholds;
    if (min_overlap) j["filters"]["min_overlap"] = *min_overlap;
    if (max_overlap) j["filters"]["max_overlap"] = *max_overlap;
    if (min_occlusion) j["filters"]["min_occlusion"] = *min_occlusion;
    return j;
  }

  cli::RunConfig Resolve() const {
    cli::RunConfig cfg;
    bool seeded = seed.has_value();
    if (!config_path.empty()) {
      const Json file = occmatch::io::ReadJson(config_path);
      cli::ApplyConfig(file, cfg, config_path);
      seeded = seeded || (file.is_object() && file.contains("seed"));
    }
    if (!seeded) {
      if (const char* env = std::getenv("OCCMATCH_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        OCCMATCH_CHECK(end != env && *end == '\0', occmatch::ErrorCode::kInvalidArgument,
                       std::string("OCCMATCH_SEED: not an unsigned integer: ") + env);
        cfg.seed = v;
      }
    }
    cli::ApplyConfig(Overrides(), cfg, "flags");
    cfg.Validate();
    return cfg;
  }
};

occmatch::synth::Fixture LoadFixture(const std::string& fixture_path, const std::string& name,
                                     const std::string& scene_path, const std::string& poses_path) {
  namespace io = occmatch::io;
  if (!name.empty()) {
    const auto f = occmatch::synth::FindFixture(name);
    OCCMATCH_CHECK(f.has_value(), occmatch::ErrorCode::kInvalidArgument,
                   "unknown built-in fixture '" + name + "'");
    return *f;
  }
  if (!fixture_path.empty()) return io::FixtureFromJson(io::ReadJson(fixture_path), fixture_path);
  OCCMATCH_CHECK(!scene_path.empty() && !poses_path.empty(), occmatch::ErrorCode::kInvalidArgument,
                 "synth needs a fixture file, --fixture, or both --scene and --poses");
  // Poses file: {"k"?, "pose_a", "pose_b"}; the scene comes from its own file.
  Json j = io::ReadJson(poses_path);
  OCCMATCH_CHECK(j.is_object(), occmatch::ErrorCode::kSchema, poses_path + ": expected an object");
  j["scene"] = io::ReadJson(scene_path);
  if (!j.contains("name")) j["name"] = std::filesystem::path(poses_path).stem().string();
  return io::FixtureFromJson(j, poses_path + " + " + scene_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware matching toolkit"};
  app.require_subcommand(1);
  ConfigFlags flags;

  std::string fixture_path, fixture_name, scene_path, poses_path, out_dir;
  CLI::App* synth = app.add_subcommand("synth", "render a synthetic pair");
  synth->add_option("file", fixture_path, "fixture JSON with scene and poses");
  synth->add_option("--fixture", fixture_name, "built-in fixture name");
  synth->add_option("--scene", scene_path, "scene JSON");
  synth->add_option("--poses", poses_path, "poses JSON");
  synth->add_option("--out,-o", out_dir, "output pair directory")->required();

  std::vector<std::string> pair_dirs;
  CLI::App* supervise = app.add_subcommand("supervise", "ground-truth patch matches");
  supervise->add_option("pairs", pair_dirs, "pair directories")->required();
  CLI::App* voxelize = app.add_subcommand("voxelize", "ground-truth occupancy grids");
  voxelize->add_option("pairs", pair_dirs, "pair directories")->required();
  CLI::App* match = app.add_subcommand("match", "coarse-to-fine matching");
  match->add_option("pairs", pair_dirs, "pair directories")->required();

  std::string report_path = "report.json";
  std::string curve_path;
  std::string matches_name = cli::kMatches;
  CLI::App* eval = app.add_subcommand("eval", "relative pose evaluation");
  eval->add_option("pairs", pair_dirs, "pair directories")->required();
  eval->add_option("--out,-o", report_path, "report JSON");
  eval->add_option("--curve", curve_path, "cumulative occlusion curve CSV");
  eval->add_option("--matches", matches_name, "matches file name inside each pair");

  std::string curve_report;
  std::string curve_out = "curve.csv";
  CLI::App* curve = app.add_subcommand("curve", "curve CSV from an eval report");
  curve->add_option("report", curve_report, "report JSON")->required();
  curve->add_option("--out,-o", curve_out, "output CSV");

  for (CLI::App* sub : {synth, supervise, voxelize, match, eval, curve}) flags.Register(*sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const cli::RunConfig cfg = flags.Resolve();
    if (synth->parsed()) {
      const auto fixture = LoadFixture(fixture_path, fixture_name, scene_path, poses_path);
      const cli::Manifest m = cli::Synth(fixture, out_dir, cfg);
      std::cout << out_dir << ": occlusion_ratio " << m.occlusion_ratio << "\n";
    } else if (supervise->parsed()) {
      bool rejected = false;
      for (const std::string& dir : pair_dirs) {
        try {
          const occmatch::CoarseMatchSet gt = cli::Supervise(dir, cfg);
          std::cout << dir << ": vv " << gt.vv.size() << " vo " << gt.vo.size() << " ov "
                    << gt.ov.size() << "\n";
        } catch (const cli::FilterRejected& e) {
          std::cerr << e.what() << "\n";
          rejected = true;
        }
      }
      if (rejected) return 2;
    } else if (voxelize->parsed()) {
      for (const std::string& dir : pair_dirs) cli::Voxelize(dir, cfg);
    } else if (match->parsed()) {
      for (const std::string& dir : pair_dirs) {
        const occmatch::PipelineResult r = cli::Match(dir, cfg);
        std::cout << dir << ": " << r.matches.size() << " matches\n";
      }
    } else if (eval->parsed()) {
      const cli::EvalReport report = cli::Eval(pair_dirs, cfg, matches_name);
      occmatch::io::WriteJson(report_path, cli::ToJson(report, cfg));
      if (!curve_path.empty()) occmatch::io::WriteText(curve_path, cli::CurveCsv(report));
      for (size_t i = 0; i < report.auc.size(); ++i) {
        std::cout << "AUC@" << report.thresholds[i] << " " << report.auc[i] << "\n";
      }
    } else if (curve->parsed()) {
      const cli::EvalReport report =
          cli::ReportFromJson(occmatch::io::ReadJson(curve_report), curve_report);
      occmatch::io::WriteText(curve_out, cli::CurveCsv(report));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
