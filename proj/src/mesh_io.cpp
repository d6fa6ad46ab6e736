#include "meshsplat/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include <Eigen/Geometry>

#include "meshsplat/error.hpp"

namespace meshsplat {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary I/O assumes a little-endian host");

enum class PlyFormat { Ascii, BinaryLittleEndian, BinaryBigEndian };

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> parse_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

bool is_integral(PlyType t) {
  return t != PlyType::Float32 && t != PlyType::Float64;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

// Scalar properties land in `columns`; list properties in `list_values`
// with CSR-style `list_offsets` (one entry per element plus one).
struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<double>> list_values;
  std::vector<std::vector<std::size_t>> list_offsets;

  std::optional<std::size_t> find(std::string_view prop) const {
    for (std::size_t i = 0; i < properties.size(); ++i)
      if (properties[i].name == prop) return i;
    return std::nullopt;
  }
};

struct PlyFile {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;

  const PlyElement* element(std::string_view name) const {
    for (const auto& e : elements)
      if (e.name == name) return &e;
    return nullptr;
  }
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!token.empty() && token.front() == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Returns the offset of the first body byte.
std::size_t parse_header(ByteView bytes, PlyFile& ply) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return std::nullopt;
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto magic = next_line();
  if (!magic || *magic != "ply") fail(ErrorCode::MalformedHeader, "missing 'ply' magic");

  bool have_format = false;
  while (true) {
    auto line = next_line();
    if (!line) fail(ErrorCode::MalformedHeader, "header ended without end_header");
    auto tok = split_ws(*line);
    if (tok.empty()) continue;
    const auto& kw = tok[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "end_header") break;
    if (kw == "format") {
      if (tok.size() != 3) fail(ErrorCode::MalformedHeader, "bad format line");
      if (tok[1] == "ascii") ply.format = PlyFormat::Ascii;
      else if (tok[1] == "binary_little_endian") ply.format = PlyFormat::BinaryLittleEndian;
      else if (tok[1] == "binary_big_endian") ply.format = PlyFormat::BinaryBigEndian;
      else fail(ErrorCode::MalformedHeader, "unknown format '" + std::string(tok[1]) + "'");
      if (tok[2] != "1.0") fail(ErrorCode::MalformedHeader, "unsupported PLY version");
      have_format = true;
    } else if (kw == "element") {
      if (tok.size() != 3) fail(ErrorCode::MalformedHeader, "bad element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      if (!parse_number(tok[2], e.count))
        fail(ErrorCode::MalformedHeader, "bad element count '" + std::string(tok[2]) + "'");
      ply.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (ply.elements.empty()) fail(ErrorCode::MalformedHeader, "property before element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_type(tok[2]);
        auto vt = parse_type(tok[3]);
        if (!ct || !vt || !is_integral(*ct))
          fail(ErrorCode::MalformedHeader, "bad list property types");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *vt;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = parse_type(tok[1]);
        if (!t) fail(ErrorCode::MalformedHeader, "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        fail(ErrorCode::MalformedHeader, "bad property line");
      }
      ply.elements.back().properties.push_back(std::move(p));
    } else {
      fail(ErrorCode::MalformedHeader, "unknown header keyword '" + std::string(kw) + "'");
    }
  }
  if (!have_format) fail(ErrorCode::MalformedHeader, "missing format line");
  return pos;
}

template <typename T>
T load_scalar(const std::uint8_t* p, bool swap) {
  std::array<std::uint8_t, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

double load_value(const std::uint8_t* p, PlyType t, bool swap) {
  switch (t) {
    case PlyType::Int8: return load_scalar<std::int8_t>(p, swap);
    case PlyType::UInt8: return load_scalar<std::uint8_t>(p, swap);
    case PlyType::Int16: return load_scalar<std::int16_t>(p, swap);
    case PlyType::UInt16: return load_scalar<std::uint16_t>(p, swap);
    case PlyType::Int32: return load_scalar<std::int32_t>(p, swap);
    case PlyType::UInt32: return load_scalar<std::uint32_t>(p, swap);
    case PlyType::Float32: return load_scalar<float>(p, swap);
    case PlyType::Float64: return load_scalar<double>(p, swap);
  }
  return 0.0;
}

class BinaryCursor {
 public:
  BinaryCursor(ByteView bytes, std::size_t pos, bool swap)
      : bytes_(bytes), pos_(pos), swap_(swap) {}

  double read(PlyType t, const std::string& what) {
    const std::size_t n = type_size(t);
    if (bytes_.size() - pos_ < n)
      fail(ErrorCode::TruncatedBody, "binary body ends inside element '" + what + "'");
    const double v = load_value(bytes_.data() + pos_, t, swap_);
    pos_ += n;
    return v;
  }

 private:
  ByteView bytes_;
  std::size_t pos_;
  bool swap_;
};

class AsciiCursor {
 public:
  AsciiCursor(ByteView bytes, std::size_t pos)
      : text_(reinterpret_cast<const char*>(bytes.data()) + pos, bytes.size() - pos) {}

  double read(PlyType t, const std::string& what) {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    std::size_t j = i_;
    while (j < text_.size() && !std::isspace(static_cast<unsigned char>(text_[j]))) ++j;
    if (j == i_) fail(ErrorCode::TruncatedBody, "ASCII body ends inside element '" + what + "'");
    std::string_view token = text_.substr(i_, j - i_);
    i_ = j;
    double v = 0.0;
    if (t == PlyType::Float32) {
      float f = 0.0f;
      if (!parse_number(token, f)) bad_token(token, what);
      v = f;
    } else if (t == PlyType::Float64) {
      if (!parse_number(token, v)) bad_token(token, what);
    } else {
      long long iv = 0;
      if (!parse_number(token, iv)) bad_token(token, what);
      v = static_cast<double>(iv);
    }
    return v;
  }

 private:
  [[noreturn]] static void bad_token(std::string_view token, const std::string& what) {
    fail(ErrorCode::TruncatedBody,
         "unparseable value '" + std::string(token) + "' in element '" + what + "'");
  }

  std::string_view text_;
  std::size_t i_ = 0;
};

template <typename Cursor>
void read_body(Cursor& cursor, PlyFile& ply) {
  for (auto& e : ply.elements) {
    const std::size_t np = e.properties.size();
    e.columns.assign(np, {});
    e.list_values.assign(np, {});
    e.list_offsets.assign(np, {});
    for (std::size_t p = 0; p < np; ++p)
      if (e.properties[p].is_list) e.list_offsets[p].push_back(0);
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t p = 0; p < np; ++p) {
        const auto& prop = e.properties[p];
        if (!prop.is_list) {
          e.columns[p].push_back(cursor.read(prop.type, e.name));
          continue;
        }
        const double count = cursor.read(prop.count_type, e.name);
        if (count < 0) fail(ErrorCode::TruncatedBody, "negative list length in '" + e.name + "'");
        const auto n = static_cast<std::size_t>(count);
        for (std::size_t k = 0; k < n; ++k) e.list_values[p].push_back(cursor.read(prop.type, e.name));
        e.list_offsets[p].push_back(e.list_values[p].size());
      }
    }
  }
}

PlyFile parse_ply(ByteView bytes) {
  PlyFile ply;
  const std::size_t body = parse_header(bytes, ply);
  if (ply.format == PlyFormat::Ascii) {
    AsciiCursor cursor(bytes, body);
    read_body(cursor, ply);
  } else {
    BinaryCursor cursor(bytes, body, ply.format == PlyFormat::BinaryBigEndian);
    read_body(cursor, ply);
  }
  return ply;
}

const std::vector<double>& require_column(const PlyElement& e, std::string_view name) {
  auto idx = e.find(name);
  if (!idx || e.properties[*idx].is_list)
    fail(ErrorCode::MalformedHeader,
         "element '" + e.name + "' lacks scalar property '" + std::string(name) + "'");
  return e.columns[*idx];
}

const std::vector<double>* optional_column(const PlyElement& e, std::string_view name) {
  auto idx = e.find(name);
  if (!idx || e.properties[*idx].is_list) return nullptr;
  return &e.columns[*idx];
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

void append_header_line(Bytes& out, std::string_view line) {
  out.insert(out.end(), line.begin(), line.end());
  out.push_back('\n');
}

template <typename T>
void append_le(Bytes& out, T value) {
  const auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  out.insert(out.end(), raw.begin(), raw.end());
}

}  // namespace

void check_cloud(const PointCloud& cloud) {
  const auto n = cloud.positions.rows();
  if (cloud.normals.rows() != n || cloud.colors.rows() != n)
    fail(ErrorCode::InvalidArgument, "point cloud arrays differ in length");
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3f normal = cloud.normals.row(i).transpose();
    if (normal.isZero(0.0f)) continue;
    if (std::abs(normal.cast<double>().norm() - 1.0) > 1e-6)
      fail(ErrorCode::InvalidArgument, "normal " + std::to_string(i) + " is neither unit nor zero");
  }
}

TriangleMesh parse_ply_mesh(ByteView bytes) {
  const PlyFile ply = parse_ply(bytes);
  const PlyElement* vertex = ply.element("vertex");
  if (!vertex) fail(ErrorCode::MalformedHeader, "no 'vertex' element");

  TriangleMesh mesh;
  const auto& xs = require_column(*vertex, "x");
  const auto& ys = require_column(*vertex, "y");
  const auto& zs = require_column(*vertex, "z");
  const auto nv = static_cast<Eigen::Index>(vertex->count);
  mesh.vertices.resize(nv, 3);
  for (Eigen::Index i = 0; i < nv; ++i) mesh.vertices.row(i) << xs[i], ys[i], zs[i];

  const auto* rs = optional_column(*vertex, "red");
  const auto* gs = optional_column(*vertex, "green");
  const auto* bs = optional_column(*vertex, "blue");
  if (rs && gs && bs) {
    Colors3u8 colors(nv, 3);
    for (Eigen::Index i = 0; i < nv; ++i)
      colors.row(i) << to_u8((*rs)[i]), to_u8((*gs)[i]), to_u8((*bs)[i]);
    mesh.vertex_colors = std::move(colors);
  }

  const PlyElement* face = ply.element("face");
  if (!face) {
    mesh.faces.resize(0, 3);
    return mesh;
  }
  auto idx = face->find("vertex_indices");
  if (!idx) idx = face->find("vertex_index");
  if (!idx || !face->properties[*idx].is_list)
    fail(ErrorCode::MalformedHeader, "face element lacks a vertex_indices list");

  const auto& values = face->list_values[*idx];
  const auto& offsets = face->list_offsets[*idx];
  std::size_t triangles = 0;
  for (std::size_t f = 0; f < face->count; ++f) {
    const std::size_t n = offsets[f + 1] - offsets[f];
    if (n < 3)
      fail(ErrorCode::NonTriangulatable,
           "face " + std::to_string(f) + " has " + std::to_string(n) + " indices");
    triangles += n - 2;
  }
  mesh.faces.resize(static_cast<Eigen::Index>(triangles), 3);
  Eigen::Index row = 0;
  auto index_at = [&](std::size_t k, std::size_t f) {
    const double v = values[k];
    if (v < 0 || v >= static_cast<double>(nv))
      fail(ErrorCode::InvalidArgument,
           "face " + std::to_string(f) + " references vertex " + std::to_string(v));
    return static_cast<std::uint32_t>(v);
  };
  for (std::size_t f = 0; f < face->count; ++f) {
    const std::size_t begin = offsets[f];
    const std::size_t n = offsets[f + 1] - begin;
    const std::uint32_t first = index_at(begin, f);
    for (std::size_t k = 1; k + 1 < n; ++k)
      mesh.faces.row(row++) << first, index_at(begin + k, f), index_at(begin + k + 1, f);
  }
  return mesh;
}

PointCloud parse_ply_points(ByteView bytes) {
  const PlyFile ply = parse_ply(bytes);
  const PlyElement* vertex = ply.element("vertex");
  if (!vertex) fail(ErrorCode::MalformedHeader, "no 'vertex' element");
  const auto n = static_cast<Eigen::Index>(vertex->count);

  PointCloud cloud;
  cloud.resize(n);
  const auto& xs = require_column(*vertex, "x");
  const auto& ys = require_column(*vertex, "y");
  const auto& zs = require_column(*vertex, "z");
  const auto* nx = optional_column(*vertex, "nx");
  const auto* ny = optional_column(*vertex, "ny");
  const auto* nz = optional_column(*vertex, "nz");
  const auto* rs = optional_column(*vertex, "red");
  const auto* gs = optional_column(*vertex, "green");
  const auto* bs = optional_column(*vertex, "blue");
  const bool has_normals = nx && ny && nz;
  const bool has_colors = rs && gs && bs;
  for (Eigen::Index i = 0; i < n; ++i) {
    cloud.positions.row(i) << static_cast<float>(xs[i]), static_cast<float>(ys[i]),
        static_cast<float>(zs[i]);
    if (has_normals)
      cloud.normals.row(i) << static_cast<float>((*nx)[i]), static_cast<float>((*ny)[i]),
          static_cast<float>((*nz)[i]);
    else
      cloud.normals.row(i).setZero();
    if (has_colors)
      cloud.colors.row(i) << to_u8((*rs)[i]), to_u8((*gs)[i]), to_u8((*bs)[i]);
    else
      cloud.colors.row(i).setZero();
  }
  return cloud;
}

Bytes write_ply_points(const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "refusing to write a zero-point cloud");
  check_cloud(cloud);

  Bytes out;
  const auto n = cloud.size();
  out.reserve(256 + static_cast<std::size_t>(n) * 27);
  append_header_line(out, "ply");
  append_header_line(out, "format binary_little_endian 1.0");
  append_header_line(out, "element vertex " + std::to_string(n));
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz"})
    append_header_line(out, std::string("property float ") + name);
  for (const char* name : {"red", "green", "blue"})
    append_header_line(out, std::string("property uchar ") + name);
  append_header_line(out, "end_header");

  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) append_le(out, cloud.positions(i, c));
    for (int c = 0; c < 3; ++c) append_le(out, cloud.normals(i, c));
    for (int c = 0; c < 3; ++c) out.push_back(cloud.colors(i, c));
  }
  return out;
}

Eigen::VectorXd face_areas(const TriangleMesh& mesh) {
  Eigen::VectorXd areas(mesh.num_faces());
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0)).transpose();
    const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1)).transpose();
    const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2)).transpose();
    areas[f] = 0.5 * (b - a).cross(c - a).norm();
  }
  return areas;
}

ValidationReport validate_mesh(const TriangleMesh& mesh) {
  ValidationReport report;
  report.triangle_count = static_cast<std::size_t>(mesh.num_faces());
  if (report.triangle_count < kRecommendedMinTriangles ||
      report.triangle_count > kRecommendedMaxTriangles) {
    report.warnings.push_back("triangle count outside [100,1000]: " +
                              std::to_string(report.triangle_count));
  }
  const Eigen::VectorXd areas = face_areas(mesh);
  for (Eigen::Index f = 0; f < areas.size(); ++f)
    if (!(areas[f] >= kDegenerateArea)) report.degenerate_faces.push_back(static_cast<std::size_t>(f));
  if (!report.degenerate_faces.empty())
    report.warnings.push_back(std::to_string(report.degenerate_faces.size()) +
                              " degenerate faces will be skipped");
  return report;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to '" + path + "'");
}

}  // namespace meshsplat
