#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "meshsplat/error.hpp"
#include "meshsplat/types.hpp"

namespace meshsplat {

/// x -> scale * R * x + translation, taking mesh space into COLMAP world
/// space.
template <typename Scalar>
struct SimilarityTransform {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  Scalar scale = Scalar(1);
  Eigen::Quaternion<Scalar> rotation = Eigen::Quaternion<Scalar>::Identity();
  Vector3 translation = Vector3::Zero();

  static SimilarityTransform identity() { return {}; }

  bool is_identity() const {
    return scale == Scalar(1) && rotation.w() == Scalar(1) && rotation.vec().isZero(Scalar(0)) &&
           translation.isZero(Scalar(0));
  }

  /// Throws InvalidTransform unless scale > 0 and |q| is within 1e-9 of 1.
  void validate() const {
    if (!(scale > Scalar(0)) || !std::isfinite(static_cast<double>(scale)))
      fail(ErrorCode::InvalidTransform, "scale must be positive and finite");
    if (!translation.allFinite() || !rotation.coeffs().allFinite())
      fail(ErrorCode::InvalidTransform, "transform has non-finite components");
    if (std::abs(static_cast<double>(rotation.norm()) - 1.0) > 1e-9)
      fail(ErrorCode::InvalidTransform, "rotation quaternion is not unit length");
  }

  Vector3 operator()(const Vector3& x) const { return scale * (rotation * x) + translation; }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = scale * rotation.toRotationMatrix();
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = Scalar(1) / scale;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.scale * (inv.rotation * translation));
    return inv;
  }

  /// Decomposes a 4x4 similarity matrix. Rejects shear, non-uniform scale
  /// and reflections.
  static SimilarityTransform from_matrix(const Matrix4& m) {
    if (!m.allFinite()) fail(ErrorCode::InvalidTransform, "matrix has non-finite entries");
    const Eigen::Matrix<Scalar, 1, 4> last(0, 0, 0, 1);
    if ((m.row(3) - last).cwiseAbs().maxCoeff() > Scalar(1e-9))
      fail(ErrorCode::InvalidTransform, "last row must be 0 0 0 1");
    const Matrix3 a = m.template topLeftCorner<3, 3>();
    const Scalar det = a.determinant();
    if (!(det > Scalar(0))) fail(ErrorCode::InvalidTransform, "matrix is singular or mirrors");
    SimilarityTransform t;
    t.scale = std::cbrt(det);
    const Matrix3 r = a / t.scale;
    if ((r * r.transpose() - Matrix3::Identity()).cwiseAbs().maxCoeff() > Scalar(1e-6))
      fail(ErrorCode::InvalidTransform, "matrix is not a similarity (shear or non-uniform scale)");
    t.rotation = Eigen::Quaternion<Scalar>(r).normalized();
    if (t.rotation.w() < Scalar(0)) t.rotation.coeffs() *= Scalar(-1);
    t.translation = m.template topRightCorner<3, 1>();
    return t;
  }
};

using SimilarityTransformd = SimilarityTransform<double>;

/// (second ∘ first)(x) == second(first(x)).
template <typename Scalar>
SimilarityTransform<Scalar> compose(const SimilarityTransform<Scalar>& second,
                                    const SimilarityTransform<Scalar>& first) {
  SimilarityTransform<Scalar> out;
  out.scale = second.scale * first.scale;
  out.rotation = (second.rotation * first.rotation).normalized();
  out.translation = second.scale * (second.rotation * first.translation) + second.translation;
  return out;
}

template <typename Scalar>
struct SimilarityEstimate {
  SimilarityTransform<Scalar> transform;
  Scalar residual_rms = Scalar(0);
};

/// Below this ratio of smallest to largest cross-covariance singular value
/// the correspondences are treated as planar, where a mirror image cannot
/// be told apart from a rotation, and the proper rotation is taken.
inline constexpr double kPlanarSingularRatio = 1e-2;
inline constexpr double kCollinearSingularRatio = 1e-9;

/// Least-squares similarity mapping source columns onto target columns
/// (closed form via SVD of the cross-covariance). Throws
/// TooFewCorrespondences, DegenerateConfiguration for collinear sources and
/// ReflectionDetected when only a mirror fits a non-planar configuration.
template <typename Scalar>
SimilarityEstimate<Scalar> estimate_similarity(const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& source,
                                               const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& target) {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  if (source.cols() != target.cols())
    fail(ErrorCode::InvalidArgument, "source and target sizes differ");
  const Eigen::Index n = source.cols();
  if (n < 3) fail(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences, got " + std::to_string(n));
  if (!source.allFinite() || !target.allFinite())
    fail(ErrorCode::InvalidArgument, "correspondences must be finite");

  const Vector3 src_mean = source.rowwise().mean();
  const Vector3 dst_mean = target.rowwise().mean();
  const Matrix3X src_c = source.colwise() - src_mean;
  const Matrix3X dst_c = target.colwise() - dst_mean;

  const Eigen::JacobiSVD<Matrix3X> spread(src_c);
  const auto sv = spread.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(1) <= Scalar(kCollinearSingularRatio) * sv(0))
    fail(ErrorCode::DegenerateConfiguration, "source points are collinear or coincident");

  const Scalar src_var = src_c.squaredNorm() / Scalar(n);
  const Matrix3 cov = dst_c * src_c.transpose() / Scalar(n);
  const Eigen::JacobiSVD<Matrix3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3 d = svd.singularValues();

  Vector3 s = Vector3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < Scalar(0)) {
    if (d(2) > Scalar(kPlanarSingularRatio) * d(0))
      fail(ErrorCode::ReflectionDetected, "correspondences are only matched by a mirror image");
    s(2) = Scalar(-1);
  }

  const Matrix3 r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  SimilarityEstimate<Scalar> out;
  out.transform.scale = d.dot(s) / src_var;
  out.transform.rotation = Eigen::Quaternion<Scalar>(r).normalized();
  if (out.transform.rotation.w() < Scalar(0)) out.transform.rotation.coeffs() *= Scalar(-1);
  out.transform.translation = dst_mean - out.transform.scale * (r * src_mean);

  const Matrix3X mapped = (out.transform.scale * r * source).colwise() + out.transform.translation;
  out.residual_rms = std::sqrt((mapped - target).squaredNorm() / Scalar(n));
  return out;
}

/// Positions mapped by the full similarity; normals rotated and
/// re-normalized; colors untouched. The identity leaves the cloud
/// bit-identical.
PointCloud apply_similarity(const PointCloud& cloud, const SimilarityTransformd& transform);

/// SfM points first, then sampled points; no deduplication.
PointCloud merge_clouds(const PointCloud& sampled, const PointCloud& sfm);

/// JSON document {"scale", "rotation": [w,x,y,z], "translation": [x,y,z]}.
std::string transform_to_json(const SimilarityTransformd& transform);
SimilarityTransformd transform_from_json(const std::string& text);

/// 16 whitespace-separated numbers, row-major.
std::string transform_to_matrix_text(const SimilarityTransformd& transform);
SimilarityTransformd transform_from_matrix_text(const std::string& text);

/// Loads JSON when the content starts with '{', the matrix form otherwise.
SimilarityTransformd load_transform(const std::string& path);
void save_transform(const std::string& path, const SimilarityTransformd& transform);

}  // namespace meshsplat
