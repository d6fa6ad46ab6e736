#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

namespace meshsplat {

/// Row-per-point dense storage. Row-major so each point is contiguous.
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Points3d = Points3<double>;
using Points3f = Points3<float>;
using Colors3u8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Vector3u8 = Eigen::Matrix<std::uint8_t, 3, 1>;

/// Indexed triangle mesh in model space.
struct TriangleMesh {
  Points3d vertices;
  Faces faces;
  std::optional<Colors3u8> vertex_colors;

  Eigen::Index num_vertices() const { return vertices.rows(); }
  Eigen::Index num_faces() const { return faces.rows(); }
};

/// Positions, 8-bit colors and normals stored in the precision of the
/// point-PLY layout so that writing and re-reading is lossless.
struct PointCloud {
  Points3f positions;
  Points3f normals;
  Colors3u8 colors;

  Eigen::Index size() const { return positions.rows(); }
  bool empty() const { return positions.rows() == 0; }

  void resize(Eigen::Index n) {
    positions.resize(n, 3);
    normals.resize(n, 3);
    colors.resize(n, 3);
  }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.positions.rows() == b.positions.rows() &&
           a.normals.rows() == b.normals.rows() &&
           a.colors.rows() == b.colors.rows() &&
           a.positions == b.positions && a.normals == b.normals &&
           a.colors == b.colors;
  }
};

/// Throws InvalidArgument if list lengths differ or a normal is neither
/// unit length (within 1e-6) nor exactly zero.
void check_cloud(const PointCloud& cloud);

}  // namespace meshsplat
