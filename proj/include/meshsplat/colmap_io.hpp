#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "meshsplat/mesh_io.hpp"
#include "meshsplat/types.hpp"

namespace meshsplat {

enum class SparseFormat { Binary, Text };

struct TrackElement {
  std::uint32_t image_id = 0;
  std::uint32_t point2d_index = 0;

  friend bool operator==(const TrackElement&, const TrackElement&) = default;
};

struct SparsePoint {
  std::uint64_t id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Vector3u8 color = Vector3u8::Zero();
  double error = 0.0;
  std::vector<TrackElement> track;

  friend bool operator==(const SparsePoint& a, const SparsePoint& b) {
    return a.id == b.id && a.position == b.position && a.color == b.color &&
           a.error == b.error && a.track == b.track;
  }
};

enum class CameraModel : int { SimplePinhole = 0, Pinhole = 1 };

struct CameraIntrinsics {
  std::uint32_t id = 0;
  CameraModel model = CameraModel::Pinhole;
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// World-to-camera pose, COLMAP convention: x_cam = R * x_world + t.
struct ImagePose {
  std::uint32_t id = 0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::uint32_t camera_id = 0;
  std::string name;

  friend bool operator==(const ImagePose& a, const ImagePose& b) {
    return a.id == b.id && a.rotation.coeffs() == b.rotation.coeffs() &&
           a.translation == b.translation && a.camera_id == b.camera_id &&
           a.name == b.name;
  }
};

struct SparseModel {
  std::map<std::uint64_t, SparsePoint> points;
  std::map<std::uint32_t, CameraIntrinsics> cameras;
  std::map<std::uint32_t, ImagePose> images;

  friend bool operator==(const SparseModel&, const SparseModel&) = default;
};

/// Parses the three sparse-model files. Only SIMPLE_PINHOLE and PINHOLE
/// cameras are accepted; anything else raises UnsupportedCameraModel.
SparseModel read_sparse_model(ByteView points_bytes, ByteView cameras_bytes,
                              ByteView images_bytes, SparseFormat format);

/// Reads points3D/cameras/images from a model directory, preferring the
/// binary files when both encodings are present.
SparseModel read_sparse_model_dir(const std::string& directory);

std::map<std::uint64_t, SparsePoint> read_points3d(ByteView bytes, SparseFormat format);
std::map<std::uint32_t, CameraIntrinsics> read_cameras(ByteView bytes, SparseFormat format);
std::map<std::uint32_t, ImagePose> read_images(ByteView bytes, SparseFormat format);

Bytes write_points3d(const std::vector<SparsePoint>& points, SparseFormat format);
Bytes write_cameras(const std::map<std::uint32_t, CameraIntrinsics>& cameras,
                    SparseFormat format);
Bytes write_images(const std::map<std::uint32_t, ImagePose>& images, SparseFormat format);

/// SfM points in ascending id order, zero normals, COLMAP colors.
PointCloud sparse_points_to_cloud(const SparseModel& model);

/// Synthetic points for a cloud: ids from `first_id` upward, error 0,
/// empty track.
std::vector<SparsePoint> cloud_to_sparse_points(const PointCloud& cloud, std::uint64_t first_id);

}  // namespace meshsplat
