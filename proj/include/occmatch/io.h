#pragma once

#include <string>

#include <json.hpp>

#include "occmatch/geometry.h"
#include "occmatch/matching.h"
#include "occmatch/occupancy.h"
#include "occmatch/synth.h"

namespace occmatch::io {

using Json = nlohmann::ordered_json;

// Binary formats, all little-endian.
//   ODM1: u32 width, u32 height, float32 depth[height][width]
//   OCG1: u32 (1, rows, cols, bins), float32 values[rows][cols][bins]
//   OFG1: u32 (channels, rows, cols, stride), float32 values[channels][rows][cols]
void WriteDepth(const std::string& path, const DepthMap& depth);
DepthMap ReadDepth(const std::string& path);
void WriteOccupancy(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid ReadOccupancy(const std::string& path);
void WriteFeatures(const std::string& path, const FeatureGrid& grid);
FeatureGrid ReadFeatures(const std::string& path);

// Throws kIo on a missing file and kSchema (with the file name) on bad JSON.
Json ReadJson(const std::string& path);
// Two-space indentation plus a trailing newline.
void WriteJson(const std::string& path, const Json& value);
std::string ReadText(const std::string& path);
void WriteText(const std::string& path, const std::string& text);

// `where` prefixes schema errors, e.g. "manifest.json: k".
Json ToJson(const CameraIntrinsics& k);
CameraIntrinsics IntrinsicsFromJson(const Json& j, const std::string& where);
// {"R": 9 row-major values, "t": 3 values}, camera-to-world.
Json ToJson(const PoseSE3& pose);
PoseSE3 PoseFromJson(const Json& j, const std::string& where);
Json ToJson(const synth::SceneSpec& scene);
synth::SceneSpec SceneFromJson(const Json& j, const std::string& where);
// {"name", "scene", "k", "pose_a", "pose_b", "has_baseline"}; "k" and
// "has_baseline" are optional (default intrinsics, baseline inferred from
// the poses).
Json ToJson(const synth::Fixture& fixture);
synth::Fixture FixtureFromJson(const Json& j, const std::string& where);

// Typed field access that names the field on failure.
const Json& Field(const Json& j, const std::string& key, const std::string& where);
double NumberField(const Json& j, const std::string& key, const std::string& where);
int IntField(const Json& j, const std::string& key, const std::string& where);
Eigen::Vector3d Vec3Field(const Json& j, const std::string& key, const std::string& where);
bool BoolField(const Json& j, const std::string& key, const std::string& where);
std::string StringField(const Json& j, const std::string& key, const std::string& where);
std::vector<double> NumberList(const Json& j, const std::string& key, const std::string& where);

// Shortest decimal text that reads back to the same double; "inf"/"nan"
// for non-finite values.
std::string FormatDouble(double v);

}  // namespace occmatch::io
