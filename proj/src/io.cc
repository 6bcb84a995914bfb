#include "occmatch/io.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "occmatch/error.h"

namespace occmatch::io {

namespace {

template <typename T>
T ToLittle(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    OCCMATCH_CHECK(out_.good(), ErrorCode::kIo, path + ": cannot open for writing");
  }
  void Magic(const char* m) { out_.write(m, 4); }
  void U32(std::uint32_t v) {
    v = ToLittle(v);
    out_.write(reinterpret_cast<const char*>(&v), 4);
  }
  void F32(float v) {
    v = ToLittle(v);
    out_.write(reinterpret_cast<const char*>(&v), 4);
  }
  void Close() {
    out_.close();
    OCCMATCH_CHECK(!out_.fail(), ErrorCode::kIo, path_ + ": write failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    OCCMATCH_CHECK(in_.good(), ErrorCode::kIo, path + ": cannot open for reading");
  }
  void Magic(const char* m) {
    char got[4] = {};
    in_.read(got, 4);
    OCCMATCH_CHECK(in_.good() && std::memcmp(got, m, 4) == 0, ErrorCode::kSchema,
                   path_ + ": bad magic, expected " + std::string(m, 4));
  }
  std::uint32_t U32(const char* field) {
    std::uint32_t v = 0;
    in_.read(reinterpret_cast<char*>(&v), 4);
    OCCMATCH_CHECK(in_.good(), ErrorCode::kSchema, path_ + ": truncated header field " + field);
    return ToLittle(v);
  }
  std::vector<float> Floats(size_t n) {
    std::vector<float> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 4));
    OCCMATCH_CHECK(in_.good() || (n == 0), ErrorCode::kSchema,
                   path_ + ": truncated payload, expected " + std::to_string(n) + " floats");
    for (float& x : v) x = ToLittle(x);
    in_.peek();
    OCCMATCH_CHECK(in_.eof(), ErrorCode::kSchema, path_ + ": trailing bytes after payload");
    return v;
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace

void WriteDepth(const std::string& path, const DepthMap& depth) {
  Writer w(path);
  w.Magic("ODM1");
  w.U32(static_cast<std::uint32_t>(depth.width()));
  w.U32(static_cast<std::uint32_t>(depth.height()));
  for (float d : depth.data()) w.F32(d);
  w.Close();
}

DepthMap ReadDepth(const std::string& path) {
  Reader r(path);
  r.Magic("ODM1");
  const std::uint32_t width = r.U32("width");
  const std::uint32_t height = r.U32("height");
  OCCMATCH_CHECK(width > 0 && height > 0 && width < (1u << 16) && height < (1u << 16),
                 ErrorCode::kSchema, path + ": implausible depth map size");
  std::vector<float> data = r.Floats(static_cast<size_t>(width) * height);
  for (float& d : data) {
    OCCMATCH_CHECK(std::isfinite(d) && d >= 0.0f, ErrorCode::kSchema,
                   path + ": depth values must be finite and >= 0");
  }
  return DepthMap(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

void WriteOccupancy(const std::string& path, const OccupancyGrid& grid) {
  Writer w(path);
  w.Magic("OCG1");
  w.U32(1);
  w.U32(static_cast<std::uint32_t>(grid.rows()));
  w.U32(static_cast<std::uint32_t>(grid.cols()));
  w.U32(static_cast<std::uint32_t>(grid.bins()));
  for (double v : grid.values()) w.F32(static_cast<float>(v));
  w.Close();
}

OccupancyGrid ReadOccupancy(const std::string& path) {
  Reader r(path);
  r.Magic("OCG1");
  const std::uint32_t batch = r.U32("batch");
  OCCMATCH_CHECK(batch == 1, ErrorCode::kSchema, path + ": batch must be 1");
  const std::uint32_t rows = r.U32("rows");
  const std::uint32_t cols = r.U32("cols");
  const std::uint32_t bins = r.U32("bins");
  OCCMATCH_CHECK(rows > 0 && cols > 0 && bins > 0 && rows < (1u << 16) && cols < (1u << 16) &&
                     bins < (1u << 12),
                 ErrorCode::kSchema, path + ": implausible occupancy shape");
  const std::vector<float> data = r.Floats(static_cast<size_t>(rows) * cols * bins);
  OccupancyGrid grid(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(bins));
  std::copy(data.begin(), data.end(), grid.values().begin());
  return grid;
}

void WriteFeatures(const std::string& path, const FeatureGrid& grid) {
  Writer w(path);
  w.Magic("OFG1");
  w.U32(static_cast<std::uint32_t>(grid.channels()));
  w.U32(static_cast<std::uint32_t>(grid.rows()));
  w.U32(static_cast<std::uint32_t>(grid.cols()));
  w.U32(static_cast<std::uint32_t>(grid.stride()));
  for (double v : grid.values()) w.F32(static_cast<float>(v));
  w.Close();
}

FeatureGrid ReadFeatures(const std::string& path) {
  Reader r(path);
  r.Magic("OFG1");
  const std::uint32_t channels = r.U32("channels");
  const std::uint32_t rows = r.U32("rows");
  const std::uint32_t cols = r.U32("cols");
  const std::uint32_t stride = r.U32("stride");
  OCCMATCH_CHECK(channels > 0 && rows > 0 && cols > 0 && channels < (1u << 16) &&
                     rows < (1u << 16) && cols < (1u << 16),
                 ErrorCode::kSchema, path + ": implausible feature grid shape");
  OCCMATCH_CHECK(stride == 2 || stride == 8, ErrorCode::kSchema,
                 path + ": field stride must be 2 or 8");
  const std::vector<float> data = r.Floats(static_cast<size_t>(channels) * rows * cols);
  return FeatureGrid(static_cast<int>(channels), static_cast<int>(rows), static_cast<int>(cols),
                     static_cast<int>(stride), std::vector<double>(data.begin(), data.end()));
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  OCCMATCH_CHECK(in.good(), ErrorCode::kIo, path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  OCCMATCH_CHECK(out.good(), ErrorCode::kIo, path + ": cannot open for writing");
  out << text;
  out.close();
  OCCMATCH_CHECK(!out.fail(), ErrorCode::kIo, path + ": write failed");
}

Json ReadJson(const std::string& path) {
  const std::string text = ReadText(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchema, path + ": invalid JSON: " + e.what());
  }
}

void WriteJson(const std::string& path, const Json& value) {
  WriteText(path, value.dump(2) + "\n");
}

const Json& Field(const Json& j, const std::string& key, const std::string& where) {
  OCCMATCH_CHECK(j.is_object(), ErrorCode::kSchema, where + ": expected an object");
  const auto it = j.find(key);
  OCCMATCH_CHECK(it != j.end(), ErrorCode::kSchema, where + ": missing field '" + key + "'");
  return *it;
}

double NumberField(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_number(), ErrorCode::kSchema,
                 where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int IntField(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_number_integer(), ErrorCode::kSchema,
                 where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

bool BoolField(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_boolean(), ErrorCode::kSchema,
                 where + ": field '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string StringField(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_string(), ErrorCode::kSchema,
                 where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> NumberList(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_array(), ErrorCode::kSchema,
                 where + ": field '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const Json& x : v) {
    OCCMATCH_CHECK(x.is_number(), ErrorCode::kSchema,
                   where + ": field '" + key + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<double> NumberArray(const Json& j, const std::string& key, const std::string& where,
                                size_t n) {
  const Json& v = Field(j, key, where);
  OCCMATCH_CHECK(v.is_array() && v.size() == n, ErrorCode::kSchema,
                 where + ": field '" + key + "' must be an array of " + std::to_string(n) +
                     " numbers");
  std::vector<double> out;
  for (const Json& x : v) {
    OCCMATCH_CHECK(x.is_number(), ErrorCode::kSchema,
                   where + ": field '" + key + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Json Vec3(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Eigen::Vector3d Vec3Field(const Json& j, const std::string& key, const std::string& where) {
  const std::vector<double> v = NumberArray(j, key, where, 3);
  return {v[0], v[1], v[2]};
}

Json ToJson(const CameraIntrinsics& k) {
  return Json{{"fx", k.fx}, {"fy", k.fy},         {"cx", k.cx},
              {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics IntrinsicsFromJson(const Json& j, const std::string& where) {
  CameraIntrinsics k;
  k.fx = NumberField(j, "fx", where);
  k.fy = NumberField(j, "fy", where);
  k.cx = NumberField(j, "cx", where);
  k.cy = NumberField(j, "cy", where);
  k.width = IntField(j, "width", where);
  k.height = IntField(j, "height", where);
  try {
    k.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, where + ": " + e.what());
  }
  return k;
}

Json ToJson(const PoseSE3& pose) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) r.push_back(pose.rotation()(i, c));
  }
  return Json{{"R", r}, {"t", Vec3(pose.translation())}};
}

PoseSE3 PoseFromJson(const Json& j, const std::string& where) {
  const std::vector<double> r = NumberArray(j, "R", where, 9);
  const Eigen::Vector3d t = Vec3Field(j, "t", where);
  Eigen::Matrix3d rot;
  rot << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  try {
    return PoseSE3(rot, t);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, where + ": field 'R': " + e.what());
  }
}

Json ToJson(const synth::SceneSpec& scene) {
  Json prims = Json::array();
  for (const synth::Primitive& p : scene.primitives) {
    if (const auto* plane = std::get_if<synth::Plane>(&p.shape)) {
      prims.push_back({{"type", "plane"},
                       {"point", Vec3(plane->point)},
                       {"normal", Vec3(plane->normal)},
                       {"texture", p.texture}});
    } else {
      const auto& box = std::get<synth::Box>(p.shape);
      prims.push_back({{"type", "box"},
                       {"min", Vec3(box.min)},
                       {"max", Vec3(box.max)},
                       {"texture", p.texture}});
    }
  }
  return Json{{"primitives", prims}};
}

synth::SceneSpec SceneFromJson(const Json& j, const std::string& where) {
  const Json& prims = Field(j, "primitives", where);
  OCCMATCH_CHECK(prims.is_array() && !prims.empty(), ErrorCode::kSchema,
                 where + ": field 'primitives' must be a non-empty array");
  synth::SceneSpec scene;
  for (size_t i = 0; i < prims.size(); ++i) {
    const std::string at = where + ": primitives[" + std::to_string(i) + "]";
    const Json& p = prims[i];
    const Json& type = Field(p, "type", at);
    OCCMATCH_CHECK(type.is_string(), ErrorCode::kSchema, at + ": field 'type' must be a string");
    synth::Primitive prim;
    prim.texture = p.contains("texture") ? IntField(p, "texture", at) : 0;
    if (type == "plane") {
      synth::Plane plane{Vec3Field(p, "point", at), Vec3Field(p, "normal", at)};
      OCCMATCH_CHECK(plane.normal.norm() > 0.0, ErrorCode::kSchema,
                     at + ": field 'normal' must be non-zero");
      prim.shape = plane;
    } else if (type == "box") {
      synth::Box box{Vec3Field(p, "min", at), Vec3Field(p, "max", at)};
      OCCMATCH_CHECK((box.max - box.min).minCoeff() > 0.0, ErrorCode::kSchema,
                     at + ": field 'max' must exceed 'min' on every axis");
      prim.shape = box;
    } else {
      throw Error(ErrorCode::kSchema, at + ": field 'type' must be \"plane\" or \"box\"");
    }
    OCCMATCH_CHECK(prim.texture >= 0, ErrorCode::kSchema, at + ": field 'texture' must be >= 0");
    scene.primitives.push_back(prim);
  }
  return scene;
}


Json ToJson(const synth::Fixture& fixture) {
  return Json{{"name", fixture.name},
              {"scene", ToJson(fixture.scene)},
              {"k", ToJson(fixture.k)},
              {"pose_a", ToJson(fixture.pose_a)},
              {"pose_b", ToJson(fixture.pose_b)},
              {"has_baseline", fixture.has_baseline}};
}

synth::Fixture FixtureFromJson(const Json& j, const std::string& where) {
  synth::Fixture f;
  f.name = j.contains("name") ? StringField(j, "name", where) : std::string("pair");
  f.scene = SceneFromJson(Field(j, "scene", where), where + ": scene");
  f.k = j.contains("k") ? IntrinsicsFromJson(j["k"], where + ": k") : synth::DefaultIntrinsics();
  f.pose_a = PoseFromJson(Field(j, "pose_a", where), where + ": pose_a");
  f.pose_b = PoseFromJson(Field(j, "pose_b", where), where + ": pose_b");
  f.has_baseline =
      j.contains("has_baseline")
          ? BoolField(j, "has_baseline", where)
          : RelativePose(f.pose_a, f.pose_b).translation().norm() > 1e-9;
  return f;
}

}  // namespace occmatch::io
