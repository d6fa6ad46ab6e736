#include "meshsplat/colmap_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include "meshsplat/error.hpp"

namespace meshsplat {
namespace {

class Reader {
 public:
  Reader(ByteView bytes, std::string file) : bytes_(bytes), file_(std::move(file)) {}

  template <typename T>
  T read() {
    require(sizeof(T));
    std::array<std::uint8_t, sizeof(T)> buf;
    std::memcpy(buf.data(), bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return std::bit_cast<T>(buf);
  }

  std::string read_cstring() {
    const auto begin = bytes_.begin() + static_cast<std::ptrdiff_t>(pos_);
    const auto end = std::find(begin, bytes_.end(), std::uint8_t{0});
    if (end == bytes_.end()) truncated();
    std::string s(begin, end);
    pos_ += s.size() + 1;
    return s;
  }

  void skip(std::uint64_t n) {
    if (n > remaining()) truncated();
    pos_ += static_cast<std::size_t>(n);
  }

  void require(std::uint64_t n) const {
    if (n > remaining()) truncated();
  }

  void require_items(std::uint64_t count, std::size_t item_size) const {
    if (count > remaining() / item_size) truncated();
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  [[noreturn]] void truncated() const {
    fail(ErrorCode::TruncatedFile, file_ + " ends early at byte " + std::to_string(pos_));
  }

  ByteView bytes_;
  std::string file_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(Bytes& out, T value) {
  const auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  out.insert(out.end(), raw.begin(), raw.end());
}

void put_text(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// All lines, blank ones included: images.txt encodes an image without
// observations as an empty second line.
std::vector<std::string_view> text_lines(ByteView bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool is_blank_or_comment(std::string_view line) {
  const auto first = line.find_first_not_of(" \t");
  return first == std::string_view::npos || line[first] == '#';
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_token(std::string_view token, const std::string& file) {
  T value{};
  const char* first = token.data();
  const char* last = first + token.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (first != last && *first == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::InvalidModel, file + ": bad number '" + std::string(token) + "'");
  return value;
}

int model_param_count(CameraModel model) {
  return model == CameraModel::SimplePinhole ? 3 : 4;
}

CameraModel camera_model_from_id(int id) {
  if (id == 0) return CameraModel::SimplePinhole;
  if (id == 1) return CameraModel::Pinhole;
  fail(ErrorCode::UnsupportedCameraModel, "camera model id " + std::to_string(id));
}

CameraModel camera_model_from_name(std::string_view name) {
  if (name == "SIMPLE_PINHOLE") return CameraModel::SimplePinhole;
  if (name == "PINHOLE") return CameraModel::Pinhole;
  fail(ErrorCode::UnsupportedCameraModel, "camera model " + std::string(name));
}

std::string_view camera_model_name(CameraModel model) {
  return model == CameraModel::SimplePinhole ? "SIMPLE_PINHOLE" : "PINHOLE";
}

void set_params(CameraIntrinsics& cam, const std::vector<double>& params) {
  if (cam.model == CameraModel::SimplePinhole) {
    cam.fx = cam.fy = params[0];
    cam.cx = params[1];
    cam.cy = params[2];
  } else {
    cam.fx = params[0];
    cam.fy = params[1];
    cam.cx = params[2];
    cam.cy = params[3];
  }
}

std::vector<double> get_params(const CameraIntrinsics& cam) {
  if (cam.model == CameraModel::SimplePinhole) return {cam.fx, cam.cx, cam.cy};
  return {cam.fx, cam.fy, cam.cx, cam.cy};
}

void check_camera(const CameraIntrinsics& cam) {
  const bool ok = cam.fx > 0 && cam.fy > 0 && cam.cx > 0 &&
                  cam.cx < static_cast<double>(cam.width) && cam.cy > 0 &&
                  cam.cy < static_cast<double>(cam.height);
  if (!ok) fail(ErrorCode::InvalidModel, "camera " + std::to_string(cam.id) + " has invalid intrinsics");
}

Eigen::Quaterniond checked_quaternion(double w, double x, double y, double z, std::uint32_t image_id) {
  Eigen::Quaterniond q(w, x, y, z);
  const double deviation = std::abs(q.norm() - 1.0);
  if (!(deviation <= 1e-6))
    fail(ErrorCode::InvalidModel, "image " + std::to_string(image_id) + " has a non-unit quaternion");
  if (deviation > 1e-9) q.normalize();
  return q;
}

template <typename Map, typename Value>
void insert_unique(Map& map, typename Map::key_type id, Value&& value, std::string_view what) {
  if (!map.emplace(id, std::forward<Value>(value)).second)
    fail(ErrorCode::DuplicateId, "duplicate " + std::string(what) + " id " + std::to_string(id));
}

}  // namespace

std::map<std::uint64_t, SparsePoint> read_points3d(ByteView bytes, SparseFormat format) {
  std::map<std::uint64_t, SparsePoint> points;
  if (format == SparseFormat::Binary) {
    Reader in(bytes, "points3D.bin");
    const auto count = in.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      SparsePoint p;
      p.id = in.read<std::uint64_t>();
      for (int c = 0; c < 3; ++c) p.position[c] = in.read<double>();
      for (int c = 0; c < 3; ++c) p.color[c] = in.read<std::uint8_t>();
      p.error = in.read<double>();
      const auto track_length = in.read<std::uint64_t>();
      in.require_items(track_length, 8);
      p.track.reserve(static_cast<std::size_t>(track_length));
      for (std::uint64_t t = 0; t < track_length; ++t) {
        TrackElement el;
        el.image_id = in.read<std::uint32_t>();
        el.point2d_index = in.read<std::uint32_t>();
        p.track.push_back(el);
      }
      insert_unique(points, p.id, std::move(p), "point");
    }
    return points;
  }

  const std::string file = "points3D.txt";
  for (auto line : text_lines(bytes)) {
    if (is_blank_or_comment(line)) continue;
    const auto tok = tokens(line);
    if (tok.size() < 8 || (tok.size() - 8) % 2 != 0)
      fail(ErrorCode::TruncatedFile, file + ": incomplete point line");
    SparsePoint p;
    p.id = parse_token<std::uint64_t>(tok[0], file);
    for (int c = 0; c < 3; ++c) p.position[c] = parse_token<double>(tok[1 + c], file);
    for (int c = 0; c < 3; ++c) {
      const auto v = parse_token<unsigned>(tok[4 + c], file);
      if (v > 255) fail(ErrorCode::InvalidModel, file + ": color out of range");
      p.color[c] = static_cast<std::uint8_t>(v);
    }
    p.error = parse_token<double>(tok[7], file);
    for (std::size_t t = 8; t < tok.size(); t += 2)
      p.track.push_back({parse_token<std::uint32_t>(tok[t], file),
                         parse_token<std::uint32_t>(tok[t + 1], file)});
    insert_unique(points, p.id, std::move(p), "point");
  }
  return points;
}

std::map<std::uint32_t, CameraIntrinsics> read_cameras(ByteView bytes, SparseFormat format) {
  std::map<std::uint32_t, CameraIntrinsics> cameras;
  if (format == SparseFormat::Binary) {
    Reader in(bytes, "cameras.bin");
    const auto count = in.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      CameraIntrinsics cam;
      cam.id = in.read<std::uint32_t>();
      cam.model = camera_model_from_id(in.read<std::int32_t>());
      cam.width = in.read<std::uint64_t>();
      cam.height = in.read<std::uint64_t>();
      std::vector<double> params(static_cast<std::size_t>(model_param_count(cam.model)));
      for (auto& v : params) v = in.read<double>();
      set_params(cam, params);
      check_camera(cam);
      insert_unique(cameras, cam.id, cam, "camera");
    }
    return cameras;
  }

  const std::string file = "cameras.txt";
  for (auto line : text_lines(bytes)) {
    if (is_blank_or_comment(line)) continue;
    const auto tok = tokens(line);
    if (tok.size() < 4) fail(ErrorCode::TruncatedFile, file + ": incomplete camera line");
    CameraIntrinsics cam;
    cam.id = parse_token<std::uint32_t>(tok[0], file);
    cam.model = camera_model_from_name(tok[1]);
    cam.width = parse_token<std::uint64_t>(tok[2], file);
    cam.height = parse_token<std::uint64_t>(tok[3], file);
    const auto n = static_cast<std::size_t>(model_param_count(cam.model));
    if (tok.size() != 4 + n) fail(ErrorCode::TruncatedFile, file + ": wrong parameter count");
    std::vector<double> params(n);
    for (std::size_t k = 0; k < n; ++k) params[k] = parse_token<double>(tok[4 + k], file);
    set_params(cam, params);
    check_camera(cam);
    insert_unique(cameras, cam.id, cam, "camera");
  }
  return cameras;
}

std::map<std::uint32_t, ImagePose> read_images(ByteView bytes, SparseFormat format) {
  std::map<std::uint32_t, ImagePose> images;
  if (format == SparseFormat::Binary) {
    Reader in(bytes, "images.bin");
    const auto count = in.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      ImagePose img;
      img.id = in.read<std::uint32_t>();
      std::array<double, 4> q;
      for (auto& v : q) v = in.read<double>();
      img.rotation = checked_quaternion(q[0], q[1], q[2], q[3], img.id);
      for (int c = 0; c < 3; ++c) img.translation[c] = in.read<double>();
      img.camera_id = in.read<std::uint32_t>();
      img.name = in.read_cstring();
      const auto num_points2d = in.read<std::uint64_t>();
      in.require_items(num_points2d, 24);
      in.skip(num_points2d * 24);
      insert_unique(images, img.id, std::move(img), "image");
    }
    return images;
  }

  const std::string file = "images.txt";
  const auto lines = text_lines(bytes);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank_or_comment(lines[i])) continue;
    const auto tok = tokens(lines[i]);
    if (tok.size() < 10) fail(ErrorCode::TruncatedFile, file + ": incomplete image line");
    ImagePose img;
    img.id = parse_token<std::uint32_t>(tok[0], file);
    img.rotation = checked_quaternion(parse_token<double>(tok[1], file), parse_token<double>(tok[2], file),
                                      parse_token<double>(tok[3], file), parse_token<double>(tok[4], file),
                                      img.id);
    for (int c = 0; c < 3; ++c) img.translation[c] = parse_token<double>(tok[5 + c], file);
    img.camera_id = parse_token<std::uint32_t>(tok[8], file);
    // Names may contain spaces; everything after CAMERA_ID is the name.
    const auto name_begin = static_cast<std::size_t>(tok[9].data() - lines[i].data());
    std::string_view name = lines[i].substr(name_begin);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.remove_suffix(1);
    img.name = std::string(name);
    ++i;  // observation line, possibly empty or missing at EOF
    insert_unique(images, img.id, std::move(img), "image");
  }
  return images;
}

SparseModel read_sparse_model(ByteView points_bytes, ByteView cameras_bytes, ByteView images_bytes,
                              SparseFormat format) {
  SparseModel model;
  model.points = read_points3d(points_bytes, format);
  model.cameras = read_cameras(cameras_bytes, format);
  model.images = read_images(images_bytes, format);
  for (const auto& [id, img] : model.images)
    if (!model.cameras.contains(img.camera_id))
      fail(ErrorCode::DanglingCameraRef, "image " + std::to_string(id) + " references missing camera " +
                                             std::to_string(img.camera_id));
  return model;
}

SparseModel read_sparse_model_dir(const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  const bool binary = fs::exists(dir / "points3D.bin");
  const bool text = fs::exists(dir / "points3D.txt");
  if (!binary && !text) fail(ErrorCode::IoError, "no points3D.bin or points3D.txt in '" + directory + "'");
  const std::string ext = binary ? ".bin" : ".txt";
  const Bytes points = read_file((dir / ("points3D" + ext)).string());
  const Bytes cameras = read_file((dir / ("cameras" + ext)).string());
  const Bytes images = read_file((dir / ("images" + ext)).string());
  return read_sparse_model(points, cameras, images, binary ? SparseFormat::Binary : SparseFormat::Text);
}

Bytes write_points3d(const std::vector<SparsePoint>& points, SparseFormat format) {
  std::set<std::uint64_t> seen;
  for (const auto& p : points)
    if (!seen.insert(p.id).second) fail(ErrorCode::DuplicateId, "duplicate point id " + std::to_string(p.id));

  Bytes out;
  if (format == SparseFormat::Binary) {
    put<std::uint64_t>(out, points.size());
    for (const auto& p : points) {
      put<std::uint64_t>(out, p.id);
      for (int c = 0; c < 3; ++c) put<double>(out, p.position[c]);
      for (int c = 0; c < 3; ++c) put<std::uint8_t>(out, p.color[c]);
      put<double>(out, p.error);
      put<std::uint64_t>(out, p.track.size());
      for (const auto& el : p.track) {
        put<std::uint32_t>(out, el.image_id);
        put<std::uint32_t>(out, el.point2d_index);
      }
    }
    return out;
  }

  std::size_t track_total = 0;
  for (const auto& p : points) track_total += p.track.size();
  const double mean_track = points.empty() ? 0.0 : static_cast<double>(track_total) / points.size();
  put_text(out, "# 3D point list with one line of data per point:\n");
  put_text(out, "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n");
  put_text(out, "# Number of points: " + std::to_string(points.size()) +
                    ", mean track length: " + fmt_real(mean_track) + "\n");
  for (const auto& p : points) {
    std::string line = std::to_string(p.id);
    for (int c = 0; c < 3; ++c) line += " " + fmt_real(p.position[c]);
    for (int c = 0; c < 3; ++c) line += " " + std::to_string(p.color[c]);
    line += " " + fmt_real(p.error);
    for (const auto& el : p.track)
      line += " " + std::to_string(el.image_id) + " " + std::to_string(el.point2d_index);
    put_text(out, line + "\n");
  }
  return out;
}

Bytes write_cameras(const std::map<std::uint32_t, CameraIntrinsics>& cameras, SparseFormat format) {
  Bytes out;
  if (format == SparseFormat::Binary) {
    put<std::uint64_t>(out, cameras.size());
    for (const auto& [id, cam] : cameras) {
      put<std::uint32_t>(out, cam.id);
      put<std::int32_t>(out, static_cast<std::int32_t>(cam.model));
      put<std::uint64_t>(out, cam.width);
      put<std::uint64_t>(out, cam.height);
      for (double v : get_params(cam)) put<double>(out, v);
    }
    return out;
  }
  put_text(out, "# Camera list with one line of data per camera:\n");
  put_text(out, "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
  put_text(out, "# Number of cameras: " + std::to_string(cameras.size()) + "\n");
  for (const auto& [id, cam] : cameras) {
    std::string line = std::to_string(cam.id) + " " + std::string(camera_model_name(cam.model)) + " " +
                       std::to_string(cam.width) + " " + std::to_string(cam.height);
    for (double v : get_params(cam)) line += " " + fmt_real(v);
    put_text(out, line + "\n");
  }
  return out;
}

Bytes write_images(const std::map<std::uint32_t, ImagePose>& images, SparseFormat format) {
  Bytes out;
  if (format == SparseFormat::Binary) {
    put<std::uint64_t>(out, images.size());
    for (const auto& [id, img] : images) {
      put<std::uint32_t>(out, img.id);
      put<double>(out, img.rotation.w());
      put<double>(out, img.rotation.x());
      put<double>(out, img.rotation.y());
      put<double>(out, img.rotation.z());
      for (int c = 0; c < 3; ++c) put<double>(out, img.translation[c]);
      put<std::uint32_t>(out, img.camera_id);
      put_text(out, img.name);
      out.push_back(0);
      put<std::uint64_t>(out, 0);
    }
    return out;
  }
  put_text(out, "# Image list with two lines of data per image:\n");
  put_text(out, "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n");
  put_text(out, "#   POINTS2D[] as (X, Y, POINT3D_ID)\n");
  put_text(out, "# Number of images: " + std::to_string(images.size()) + "\n");
  for (const auto& [id, img] : images) {
    const auto& q = img.rotation;
    std::string line = std::to_string(img.id) + " " + fmt_real(q.w()) + " " + fmt_real(q.x()) + " " +
                       fmt_real(q.y()) + " " + fmt_real(q.z());
    for (int c = 0; c < 3; ++c) line += " " + fmt_real(img.translation[c]);
    line += " " + std::to_string(img.camera_id) + " " + img.name + "\n\n";
    put_text(out, line);
  }
  return out;
}

PointCloud sparse_points_to_cloud(const SparseModel& model) {
  PointCloud cloud;
  cloud.resize(static_cast<Eigen::Index>(model.points.size()));
  Eigen::Index i = 0;
  for (const auto& [id, p] : model.points) {
    cloud.positions.row(i) = p.position.cast<float>().transpose();
    cloud.normals.row(i).setZero();
    cloud.colors.row(i) = p.color.transpose();
    ++i;
  }
  return cloud;
}

std::vector<SparsePoint> cloud_to_sparse_points(const PointCloud& cloud, std::uint64_t first_id) {
  std::vector<SparsePoint> points(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    auto& p = points[static_cast<std::size_t>(i)];
    p.id = first_id + static_cast<std::uint64_t>(i);
    p.position = cloud.positions.row(i).transpose().cast<double>();
    p.color = cloud.colors.row(i).transpose();
    p.error = 0.0;
  }
  return points;
}

}  // namespace meshsplat
