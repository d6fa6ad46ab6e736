#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/types.hpp"

namespace meshsplat {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Faces with area below this (model units squared) count as degenerate.
inline constexpr double kDegenerateArea = 1e-12;

inline constexpr std::size_t kRecommendedMinTriangles = 100;
inline constexpr std::size_t kRecommendedMaxTriangles = 1000;

struct ValidationReport {
  std::size_t triangle_count = 0;
  std::vector<std::size_t> degenerate_faces;
  std::vector<std::string> warnings;
};

/// Parses an ASCII or binary (either endianness) PLY mesh. Polygons are
/// fan-triangulated from their first index; unknown properties are skipped.
TriangleMesh parse_ply_mesh(ByteView bytes);

/// Parses a point PLY (x,y,z and optional nx,ny,nz / red,green,blue).
PointCloud parse_ply_points(ByteView bytes);

/// Binary little-endian point PLY: x,y,z,nx,ny,nz as float32 then
/// red,green,blue as uint8, 27 bytes per vertex.
Bytes write_ply_points(const PointCloud& cloud);

ValidationReport validate_mesh(const TriangleMesh& mesh);

/// Per-face area, 0.5 * |(b - a) x (c - a)|.
Eigen::VectorXd face_areas(const TriangleMesh& mesh);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, ByteView bytes);

}  // namespace meshsplat
