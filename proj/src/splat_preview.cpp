#include "meshsplat/splat_preview.hpp"

#include <algorithm>
#include <cmath>

#include "meshsplat/detail/kdtree.hpp"
#include "meshsplat/detail/parallel.hpp"

namespace meshsplat {
namespace {

struct PixelBox {
  int x0, x1, y0, y1;  // inclusive
};

PixelBox footprint(const SortedSplat& s, int width, int height) {
  const double rx = kFootprintSigmas * std::sqrt(s.projected.cov2d(0, 0));
  const double ry = kFootprintSigmas * std::sqrt(s.projected.cov2d(1, 1));
  const double mx = s.projected.mean2d.x();
  const double my = s.projected.mean2d.y();
  // Pixel (x, y) has its center at (x + 0.5, y + 0.5).
  PixelBox box;
  box.x0 = static_cast<int>(std::max(0.0, std::ceil(mx - rx - 0.5)));
  box.x1 = static_cast<int>(std::min(width - 1.0, std::floor(mx + rx - 0.5)));
  box.y0 = static_cast<int>(std::max(0.0, std::ceil(my - ry - 0.5)));
  box.y1 = static_cast<int>(std::min(height - 1.0, std::floor(my + ry - 0.5)));
  return box;
}

}  // namespace

PreviewCamera camera_from_model(const SparseModel& model, std::uint32_t image_id) {
  const auto img = model.images.find(image_id);
  if (img == model.images.end()) fail(ErrorCode::InvalidArgument, "no image with id " + std::to_string(image_id));
  const auto cam = model.cameras.find(img->second.camera_id);
  if (cam == model.cameras.end())
    fail(ErrorCode::DanglingCameraRef, "image " + std::to_string(image_id) + " has no camera");
  return {cam->second, img->second};
}

std::vector<Gaussian3D> init_gaussians(const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "cannot initialize Gaussians from an empty cloud");
  const detail::KdTree<float> tree(cloud.positions);
  std::vector<Gaussian3D> out(static_cast<std::size_t>(cloud.size()));
  detail::parallel_for(0, out.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const auto d2 = tree.nearest_excluding(row, 3);
      double mean = 0.0;
      for (double d : d2) mean += std::sqrt(d);
      if (!d2.empty()) mean /= static_cast<double>(d2.size());
      Gaussian3D& g = out[i];
      g.mean = cloud.positions.row(row).transpose().cast<double>();
      g.scale = Eigen::Vector3d::Constant(std::max(mean, kMinInitScale));
      g.rotation = Eigen::Quaterniond::Identity();
      g.opacity = kInitOpacity;
      g.color = cloud.colors.row(row).transpose().cast<double>() / 255.0;
    }
  });
  return out;
}

std::vector<SortedSplat> sort_splats(const std::vector<Gaussian3D>& gaussians, const PreviewCamera& camera) {
  std::vector<SortedSplat> splats;
  splats.reserve(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const Gaussian3D& g = gaussians[i];
    const Eigen::Matrix3d cov = covariance_3d<double>(g.scale, g.rotation);
    const Eigen::Vector3d t = camera.pose.rotation * g.mean + camera.pose.translation;
    if (!(t.z() > kNearPlane)) continue;
    SortedSplat s{i, project_gaussian<double>(cov, g.mean, camera), {}};
    s.conic = s.projected.cov2d.inverse();
    splats.push_back(s);
  }
  std::stable_sort(splats.begin(), splats.end(), [](const SortedSplat& a, const SortedSplat& b) {
    return a.projected.depth < b.projected.depth;
  });
  return splats;
}

FloatImage render_preview(const std::vector<Gaussian3D>& gaussians, const PreviewCamera& camera, int width,
                          int height, const Eigen::Vector3d& background) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "render size must be positive");
  const std::vector<SortedSplat> splats = sort_splats(gaussians, camera);
  std::vector<PixelBox> boxes;
  boxes.reserve(splats.size());
  for (const auto& s : splats) boxes.push_back(footprint(s, width, height));

  FloatImage image;
  image.width = width;
  image.height = height;
  image.rgb = Points3d::Zero(static_cast<Eigen::Index>(width) * height, 3);
  Eigen::VectorXd transmittance = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(width) * height);
  std::vector<std::uint8_t> done(static_cast<std::size_t>(width) * height, 0);

  detail::parallel_for(
      0, static_cast<std::size_t>(height),
      [&](std::size_t row_lo, std::size_t row_hi) {
        const int y_lo = static_cast<int>(row_lo);
        const int y_hi = static_cast<int>(row_hi) - 1;
        for (std::size_t k = 0; k < splats.size(); ++k) {
          const PixelBox& box = boxes[k];
          const int y0 = std::max(box.y0, y_lo);
          const int y1 = std::min(box.y1, y_hi);
          if (y0 > y1 || box.x0 > box.x1) continue;
          const SortedSplat& s = splats[k];
          const Gaussian3D& g = gaussians[s.source];
          for (int y = y0; y <= y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
              const Eigen::Index p = image.index(x, y);
              if (done[static_cast<std::size_t>(p)]) continue;
              const Eigen::Vector2d d(x + 0.5 - s.projected.mean2d.x(), y + 0.5 - s.projected.mean2d.y());
              const double power = -0.5 * d.dot(s.conic * d);
              const double alpha = std::min(kMaxSplatAlpha, g.opacity * std::exp(power));
              if (alpha < kMinSplatAlpha) continue;
              double& t = transmittance[p];
              image.rgb.row(p) += (g.color * (alpha * t)).transpose();
              t *= 1.0 - alpha;
              if (t < kMinTransmittance) done[static_cast<std::size_t>(p)] = 1;
            }
          }
        }
      },
      8);

  image.alpha = Eigen::VectorXd::Ones(transmittance.size()) - transmittance;
  image.rgb += transmittance * background.transpose();
  return image;
}

RgbImage to_rgb8(const FloatImage& image) {
  RgbImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::floor(image.rgb(image.index(x, y), c) * 255.0 + 0.5);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return out;
}

}  // namespace meshsplat
