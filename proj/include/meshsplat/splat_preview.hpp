#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "meshsplat/colmap_io.hpp"
#include "meshsplat/error.hpp"
#include "meshsplat/image.hpp"
#include "meshsplat/types.hpp"

namespace meshsplat {

inline constexpr double kInitOpacity = 0.1;
inline constexpr double kMinInitScale = 1e-7;
inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovarianceDilation = 0.3;
inline constexpr double kMaxSplatAlpha = 0.99;
inline constexpr double kMinSplatAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kFootprintSigmas = 3.0;

/// DC-only Gaussian primitive.
struct Gaussian3D {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity = kInitOpacity;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

struct PreviewCamera {
  CameraIntrinsics intrinsics;
  ImagePose pose;
};

PreviewCamera camera_from_model(const SparseModel& model, std::uint32_t image_id);

/// One isotropic Gaussian per point: scale is the mean distance to the 3
/// nearest neighbours (fewer if the cloud is smaller), floored at 1e-7.
std::vector<Gaussian3D> init_gaussians(const PointCloud& cloud);

/// R * diag(s)^2 * R^T.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> covariance_3d(const Eigen::Matrix<Scalar, 3, 1>& scale,
                                          const Eigen::Quaternion<Scalar>& rotation) {
  if (!(scale.array() > Scalar(0)).all()) fail(ErrorCode::InvalidArgument, "Gaussian scales must be positive");
  const Eigen::Matrix<Scalar, 3, 3> rs = rotation.normalized().toRotationMatrix() * scale.asDiagonal();
  const Eigen::Matrix<Scalar, 3, 3> cov = rs * rs.transpose();
  // Mirror the upper triangle so the result is symmetric bit for bit.
  return cov.template selfadjointView<Eigen::Upper>();
}

template <typename Scalar>
struct ProjectedGaussian {
  Eigen::Matrix<Scalar, 2, 1> mean2d;
  Eigen::Matrix<Scalar, 2, 2> cov2d;
  Scalar depth;
};

/// Screen-space footprint of a 3D Gaussian. The covariance sees only the
/// rotation block of the world-to-camera transform; the perspective map is
/// linearized at the mean with the depth row dropped, and 0.3 px^2 is
/// added on the diagonal as a low-pass filter. Pixel centers sit at
/// half-integer coordinates, matching COLMAP intrinsics.
template <typename Scalar>
ProjectedGaussian<Scalar> project_gaussian(const Eigen::Matrix<Scalar, 3, 3>& covariance,
                                           const Eigen::Matrix<Scalar, 3, 1>& mean, const PreviewCamera& camera) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  const Matrix3 view = camera.pose.rotation.cast<Scalar>().toRotationMatrix();
  const Eigen::Matrix<Scalar, 3, 1> t = view * mean + camera.pose.translation.cast<Scalar>();
  if (!(t.z() > Scalar(kNearPlane))) fail(ErrorCode::BehindCamera, "Gaussian is behind the near plane");

  const auto fx = static_cast<Scalar>(camera.intrinsics.fx);
  const auto fy = static_cast<Scalar>(camera.intrinsics.fy);
  const Scalar inv_z = Scalar(1) / t.z();
  Eigen::Matrix<Scalar, 2, 3> jacobian;
  jacobian << fx * inv_z, Scalar(0), -fx * t.x() * inv_z * inv_z,
              Scalar(0), fy * inv_z, -fy * t.y() * inv_z * inv_z;

  const Eigen::Matrix<Scalar, 2, 3> jw = jacobian * view;
  ProjectedGaussian<Scalar> out;
  out.cov2d = jw * covariance * jw.transpose();
  out.cov2d += Scalar(kCovarianceDilation) * Eigen::Matrix<Scalar, 2, 2>::Identity();
  out.cov2d(1, 0) = out.cov2d(0, 1);
  out.mean2d << fx * t.x() * inv_z + static_cast<Scalar>(camera.intrinsics.cx),
                fy * t.y() * inv_z + static_cast<Scalar>(camera.intrinsics.cy);
  out.depth = t.z();
  return out;
}

/// Linear-light render target; alpha is 1 - final transmittance.
struct FloatImage {
  int width = 0;
  int height = 0;
  Points3d rgb;
  Eigen::VectorXd alpha;

  Eigen::Index index(int x, int y) const { return static_cast<Eigen::Index>(y) * width + x; }
};

/// Values in [0,1] to 8 bits, rounding half up.
RgbImage to_rgb8(const FloatImage& image);

/// Depth-sorted front-to-back alpha blending of the Gaussians that pass
/// the near plane. Each splat touches only pixels inside the bounding box
/// of its 3-sigma ellipse; per-splat alpha is capped at 0.99 and dropped
/// below 1/255; a pixel stops once transmittance falls under 1e-4.
FloatImage render_preview(const std::vector<Gaussian3D>& gaussians, const PreviewCamera& camera, int width,
                          int height, const Eigen::Vector3d& background = Eigen::Vector3d::Zero());

struct SortedSplat {
  std::size_t source;
  ProjectedGaussian<double> projected;
  Eigen::Matrix2d conic;
};

/// Projects the Gaussians in front of the near plane and orders them by
/// ascending camera-space depth, ties kept in input order.
std::vector<SortedSplat> sort_splats(const std::vector<Gaussian3D>& gaussians, const PreviewCamera& camera);

}  // namespace meshsplat
