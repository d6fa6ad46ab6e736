#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/image.hpp"
#include "meshsplat/types.hpp"

namespace meshsplat {

inline constexpr int kDefaultDownscaleHeight = 140;

/// Pixel colors as real RGB in [0, 255], one row per pixel.
struct PixelSet {
  Points3d colors;
  std::size_t image_count = 0;

  Eigen::Index size() const { return colors.rows(); }
};

/// Area-averaging resample to an exact output size. Returns real-valued
/// RGB rows in row-major pixel order.
Points3d resize_area(const RgbImage& image, int out_width, int out_height);

/// Output width for a height-targeted downscale: round(width * h / height).
int scaled_width(int width, int height, int target_height);

/// Downscales each image to `target_height` (aspect preserved) and
/// concatenates all pixels.
PixelSet collect_pixels(std::span<const RgbImage> images, int target_height = kDefaultDownscaleHeight);

/// Loads and collects every PNG/JPEG under a directory.
PixelSet collect_pixels_from_directory(const std::string& directory,
                                       int target_height = kDefaultDownscaleHeight);

/// Deterministic stride subsample to at most `max_pixels` rows.
PixelSet subsample_pixels(const PixelSet& pixels, std::size_t max_pixels);

struct KMeansOptions {
  int k = 3;
  std::uint64_t seed = 42;
  int max_iters = 100;
  double tol = 1e-3;
};

struct ColorPalette {
  Points3d centers;
  std::vector<std::size_t> sizes;
  int k = 0;
  int iterations = 0;
  bool converged = false;
  /// Within-cluster squared distance after each assignment step.
  std::vector<double> objective_history;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded
/// at the pixel farthest from its center. Reductions use a fixed block
/// decomposition so results do not depend on the thread count.
ColorPalette kmeans_colors(const PixelSet& pixels, const KMeansOptions& options = {});

/// Within-cluster squared distance of each pixel to its nearest center.
double kmeans_objective(const Points3d& pixels, const Points3d& centers);

enum class ColorAssignment { PerPoint, SingleColor };

/// Each point gets one palette center (rounded to 8 bits) drawn uniformly;
/// SingleColor draws once and gives every point the same center.
Colors3u8 assign_initial_colors(std::size_t n_points, const ColorPalette& palette, std::uint64_t seed,
                                ColorAssignment mode = ColorAssignment::PerPoint);

Vector3u8 quantize_color(const Eigen::Vector3d& rgb);

}  // namespace meshsplat
