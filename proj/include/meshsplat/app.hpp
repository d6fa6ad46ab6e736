#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "meshsplat/color_init.hpp"
#include "meshsplat/colmap_io.hpp"
#include "meshsplat/mesh_io.hpp"
#include "meshsplat/registration.hpp"
#include "meshsplat/sampler.hpp"

namespace meshsplat::app {

struct PipelineConfig {
  std::string mesh_path;
  std::string colmap_dir;
  std::string images_dir;
  /// Fixed grade count, or automatic selection against `budget` when empty.
  std::optional<int> num_grades;
  std::optional<std::uint64_t> budget;
  int k = 3;
  std::uint64_t kmeans_seed = 42;
  std::uint64_t color_seed = 42;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-3;
  std::size_t max_pixels = 0;  // 0 clusters every downscaled pixel
  ColorAssignment color_mode = ColorAssignment::PerPoint;
  int downscale_height = kDefaultDownscaleHeight;
  /// JSON or 4x4 matrix file; identity when empty.
  std::string transform_path;
  std::string output_ply;
  /// points3D.bin or points3D.txt; the extension picks the encoding.
  std::string output_points3d;

  std::uint64_t effective_budget() const { return budget.value_or(kDefaultPointBudget); }
};

/// Throws ConfigError for missing inputs or inconsistent options, before any
/// file is parsed.
void validate_config(const PipelineConfig& config, bool require_outputs = true);

struct Timings {
  double sample_s = 0.0;
  double colors_s = 0.0;
  double merge_s = 0.0;
};

struct PipelineSummary {
  std::size_t triangle_count = 0;
  std::vector<std::string> warnings;
  std::size_t skipped_faces = 0;
  int num_grades = 0;
  bool grades_auto = false;
  std::vector<std::uint64_t> grade_histogram;
  std::uint64_t sampled_points = 0;
  std::uint64_t sfm_points = 0;
  std::uint64_t merged_points = 0;
  Points3d cluster_centers;
  std::vector<std::size_t> cluster_sizes;
  Timings timings;
  std::vector<std::string> outputs;
};

void print_summary(std::ostream& out, const PipelineSummary& summary);

/// Everything up to (not including) the registration transform.
struct PreparedClouds {
  PointCloud sampled;  // mesh space, colored
  SparseModel model;
  PointCloud sfm;
  PipelineSummary summary;
};

struct SampleResult {
  SampledCloud<double> cloud;
  ValidationReport report;
  int num_grades = 0;
  bool grades_auto = false;
};

SampleResult sample_mesh_file(const std::string& mesh_path, std::optional<int> num_grades, std::uint64_t budget);

/// Sampled positions and face normals in point-PLY precision with a flat color.
PointCloud to_point_cloud(const SampledCloud<double>& sampled, const Colors3u8& colors);

ColorPalette palette_from_images(const PipelineConfig& config);

std::string palette_to_json(const ColorPalette& palette);
ColorPalette palette_from_json(const std::string& text);

PreparedClouds prepare_clouds(const PipelineConfig& config);

/// Applies the transform to the sampled cloud, merges it behind the SfM
/// points and writes the configured outputs. Returns the written paths.
std::vector<std::string> write_outputs(const PreparedClouds& prepared, const SimilarityTransformd& transform,
                                       const PipelineConfig& config, PipelineSummary* summary = nullptr);

/// SfM points with their tracks, then synthetic points (error 0, no track)
/// numbered after the largest SfM id.
std::vector<SparsePoint> merged_sparse_points(const SparseModel& model, const PointCloud& transformed_sampled);

PipelineSummary run_pipeline(const PipelineConfig& config);

/// Every `ceil(n / max_points)`-th point.
PointCloud decimate(const PointCloud& cloud, std::size_t max_points);

/// Little-endian u32 count, then per point 3 x f32 position and 3 x u8 color.
Bytes encode_cloud_buffer(const PointCloud& cloud);

}  // namespace meshsplat::app
