#include "meshsplat/app.hpp"

#include <bit>
#include <chrono>
#include <filesystem>
#include <ostream>

#include <nlohmann/json.hpp>

#include "meshsplat/error.hpp"

namespace meshsplat::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) fail(ErrorCode::ConfigError, what + " path is required");
  if (!fs::is_regular_file(path)) fail(ErrorCode::ConfigError, what + " '" + path + "' does not exist");
}

void require_dir(const std::string& path, const std::string& what) {
  if (path.empty()) fail(ErrorCode::ConfigError, what + " directory is required");
  if (!fs::is_directory(path)) fail(ErrorCode::ConfigError, what + " '" + path + "' is not a directory");
}

void require_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    fail(ErrorCode::ConfigError, "output directory '" + parent.string() + "' does not exist");
}

SparseFormat points_format_for(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".bin") return SparseFormat::Binary;
  if (ext == ".txt") return SparseFormat::Text;
  fail(ErrorCode::ConfigError, "points3D output must end in .bin or .txt: '" + path + "'");
}

}  // namespace

void validate_config(const PipelineConfig& config, bool require_outputs) {
  require_file(config.mesh_path, "mesh");
  require_dir(config.colmap_dir, "COLMAP model");
  require_dir(config.images_dir, "images");
  if (!config.transform_path.empty()) require_file(config.transform_path, "transform");
  if (config.num_grades && (*config.num_grades < 1 || *config.num_grades > kMaxNumGrades))
    fail(ErrorCode::ConfigError, "--grades must be in [1, 13] or 'auto'");
  if (config.num_grades && config.budget && *config.budget < points_for_grade(*config.num_grades - 1))
    fail(ErrorCode::ConfigError, "budget is below 4^(grades-1), the point count of the largest triangle");
  if (config.k < 1) fail(ErrorCode::ConfigError, "k must be >= 1");
  if (config.downscale_height < 1) fail(ErrorCode::ConfigError, "downscale height must be >= 1");
  if (config.kmeans_max_iters < 1) fail(ErrorCode::ConfigError, "k-means iterations must be >= 1");
  if (require_outputs && config.output_ply.empty() && config.output_points3d.empty())
    fail(ErrorCode::ConfigError, "at least one of the PLY or points3D outputs is required");
  if (!config.output_ply.empty()) require_parent(config.output_ply);
  if (!config.output_points3d.empty()) {
    points_format_for(config.output_points3d);
    require_parent(config.output_points3d);
  }
}

SampleResult sample_mesh_file(const std::string& mesh_path, std::optional<int> num_grades, std::uint64_t budget) {
  const TriangleMesh mesh = parse_ply_mesh(read_file(mesh_path));
  SampleResult result;
  result.report = validate_mesh(mesh);

  if (num_grades) {
    result.num_grades = *num_grades;
  } else {
    const Eigen::VectorXd areas = face_areas(mesh);
    std::vector<double> kept;
    for (double a : areas)
      if (a >= kDegenerateArea) kept.push_back(a);
    const AutoGrades choice = select_num_grades(kept, budget);
    result.num_grades = choice.num_grades;
    result.grades_auto = true;
    if (!choice.within_budget)
      result.report.warnings.push_back("even 6 grades yield " + std::to_string(choice.total_points) +
                                       " points, above the budget of " + std::to_string(budget));
  }
  const auto table = barycentric_table<double>(result.num_grades - 1);
  result.cloud = sample_mesh(mesh, result.num_grades, table);
  return result;
}

PointCloud to_point_cloud(const SampledCloud<double>& sampled, const Colors3u8& colors) {
  if (colors.rows() != sampled.size()) fail(ErrorCode::InvalidArgument, "color count differs from point count");
  PointCloud cloud;
  cloud.positions = sampled.positions.cast<float>();
  cloud.normals = sampled.normals.cast<float>();
  cloud.colors = colors;
  return cloud;
}

ColorPalette palette_from_images(const PipelineConfig& config) {
  PixelSet pixels = collect_pixels_from_directory(config.images_dir, config.downscale_height);
  if (config.max_pixels > 0) pixels = subsample_pixels(pixels, config.max_pixels);
  KMeansOptions options;
  options.k = config.k;
  options.seed = config.kmeans_seed;
  options.max_iters = config.kmeans_max_iters;
  options.tol = config.kmeans_tol;
  return kmeans_colors(pixels, options);
}

std::string palette_to_json(const ColorPalette& palette) {
  json centers = json::array();
  for (Eigen::Index c = 0; c < palette.centers.rows(); ++c)
    centers.push_back({palette.centers(c, 0), palette.centers(c, 1), palette.centers(c, 2)});
  const json doc = {{"k", palette.k},
                    {"centers", centers},
                    {"sizes", palette.sizes},
                    {"iterations", palette.iterations},
                    {"converged", palette.converged}};
  return doc.dump(2);
}

ColorPalette palette_from_json(const std::string& text) {
  ColorPalette palette;
  try {
    const json doc = json::parse(text);
    const auto& centers = doc.at("centers");
    palette.k = static_cast<int>(centers.size());
    palette.centers.resize(palette.k, 3);
    for (int c = 0; c < palette.k; ++c)
      for (int i = 0; i < 3; ++i) palette.centers(c, i) = centers.at(c).at(i).get<double>();
    if (doc.contains("sizes")) palette.sizes = doc["sizes"].get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad palette JSON: ") + e.what());
  }
  if (palette.k < 1) fail(ErrorCode::InvalidArgument, "palette has no colors");
  return palette;
}

PreparedClouds prepare_clouds(const PipelineConfig& config) {
  PreparedClouds out;
  auto start = std::chrono::steady_clock::now();
  SampleResult sampled = sample_mesh_file(config.mesh_path, config.num_grades, config.effective_budget());
  out.summary.timings.sample_s = seconds_since(start);

  start = std::chrono::steady_clock::now();
  const ColorPalette palette = palette_from_images(config);
  const Colors3u8 colors = assign_initial_colors(static_cast<std::size_t>(sampled.cloud.size()), palette,
                                                 config.color_seed, config.color_mode);
  out.summary.timings.colors_s = seconds_since(start);

  out.sampled = to_point_cloud(sampled.cloud, colors);
  out.model = read_sparse_model_dir(config.colmap_dir);
  out.sfm = sparse_points_to_cloud(out.model);

  auto& s = out.summary;
  s.triangle_count = sampled.report.triangle_count;
  s.warnings = sampled.report.warnings;
  s.skipped_faces = sampled.cloud.skipped_faces.size();
  s.num_grades = sampled.num_grades;
  s.grades_auto = sampled.grades_auto;
  s.grade_histogram.assign(static_cast<std::size_t>(sampled.num_grades), 0);
  for (int g : sampled.cloud.face_grades)
    if (g >= 0) ++s.grade_histogram[static_cast<std::size_t>(g)];
  s.sampled_points = static_cast<std::uint64_t>(out.sampled.size());
  s.sfm_points = static_cast<std::uint64_t>(out.sfm.size());
  s.cluster_centers = palette.centers;
  s.cluster_sizes = palette.sizes;
  return out;
}

std::vector<SparsePoint> merged_sparse_points(const SparseModel& model, const PointCloud& transformed_sampled) {
  std::vector<SparsePoint> points;
  points.reserve(model.points.size() + static_cast<std::size_t>(transformed_sampled.size()));
  std::uint64_t next_id = 1;
  for (const auto& [id, p] : model.points) {
    points.push_back(p);
    next_id = std::max(next_id, id + 1);
  }
  auto synthetic = cloud_to_sparse_points(transformed_sampled, next_id);
  points.insert(points.end(), std::make_move_iterator(synthetic.begin()), std::make_move_iterator(synthetic.end()));
  return points;
}

std::vector<std::string> write_outputs(const PreparedClouds& prepared, const SimilarityTransformd& transform,
                                       const PipelineConfig& config, PipelineSummary* summary) {
  const auto start = std::chrono::steady_clock::now();
  const PointCloud moved = apply_similarity(prepared.sampled, transform);
  std::vector<std::string> written;
  std::uint64_t merged_count = 0;
  if (!config.output_ply.empty()) {
    const PointCloud merged = merge_clouds(moved, prepared.sfm);
    merged_count = static_cast<std::uint64_t>(merged.size());
    write_file(config.output_ply, write_ply_points(merged));
    written.push_back(config.output_ply);
  }
  if (!config.output_points3d.empty()) {
    const auto points = merged_sparse_points(prepared.model, moved);
    merged_count = points.size();
    write_file(config.output_points3d, write_points3d(points, points_format_for(config.output_points3d)));
    written.push_back(config.output_points3d);
  }
  if (summary) {
    summary->merged_points = merged_count;
    summary->timings.merge_s = seconds_since(start);
    summary->outputs = written;
  }
  return written;
}

PipelineSummary run_pipeline(const PipelineConfig& config) {
  validate_config(config);
  const SimilarityTransformd transform =
      config.transform_path.empty() ? SimilarityTransformd::identity() : load_transform(config.transform_path);
  PreparedClouds prepared = prepare_clouds(config);
  write_outputs(prepared, transform, config, &prepared.summary);
  return prepared.summary;
}

void print_summary(std::ostream& out, const PipelineSummary& s) {
  out << "triangles: " << s.triangle_count << " (" << s.skipped_faces << " degenerate skipped)\n";
  for (const auto& w : s.warnings) out << "warning: " << w << "\n";
  out << "grades: " << s.num_grades << (s.grades_auto ? " (auto)" : "") << "\n";
  out << "grades histogram:";
  for (std::size_t g = 0; g < s.grade_histogram.size(); ++g) out << " " << g << ":" << s.grade_histogram[g];
  out << "\n";
  out << "sampled points: " << s.sampled_points << "\n";
  out << "sfm points: " << s.sfm_points << "\n";
  if (s.merged_points > 0) out << "merged points: " << s.merged_points << "\n";
  out << "cluster centers:";
  for (Eigen::Index c = 0; c < s.cluster_centers.rows(); ++c) {
    out << " (" << s.cluster_centers(c, 0) << ", " << s.cluster_centers(c, 1) << ", " << s.cluster_centers(c, 2)
        << ")";
    if (static_cast<std::size_t>(c) < s.cluster_sizes.size()) out << "x" << s.cluster_sizes[static_cast<std::size_t>(c)];
  }
  out << "\n";
  out << "timings: sample " << s.timings.sample_s << " s, colors " << s.timings.colors_s << " s, merge "
      << s.timings.merge_s << " s\n";
  for (const auto& path : s.outputs) out << "wrote: " << path << "\n";
}

PointCloud decimate(const PointCloud& cloud, std::size_t max_points) {
  const auto n = static_cast<std::size_t>(cloud.size());
  if (max_points == 0 || n <= max_points) return cloud;
  const std::size_t stride = (n + max_points - 1) / max_points;
  PointCloud out;
  out.resize(static_cast<Eigen::Index>((n + stride - 1) / stride));
  for (std::size_t i = 0, j = 0; i < n; i += stride, ++j) {
    const auto src = static_cast<Eigen::Index>(i);
    const auto dst = static_cast<Eigen::Index>(j);
    out.positions.row(dst) = cloud.positions.row(src);
    out.normals.row(dst) = cloud.normals.row(src);
    out.colors.row(dst) = cloud.colors.row(src);
  }
  return out;
}

Bytes encode_cloud_buffer(const PointCloud& cloud) {
  static_assert(std::endian::native == std::endian::little);
  Bytes out;
  const auto n = static_cast<std::uint32_t>(cloud.size());
  out.reserve(4 + static_cast<std::size_t>(n) * 15);
  auto put = [&](auto value) {
    const auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(value)>>(value);
    out.insert(out.end(), raw.begin(), raw.end());
  };
  put(n);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) put(cloud.positions(i, c));
    for (int c = 0; c < 3; ++c) out.push_back(cloud.colors(i, c));
  }
  return out;
}

}  // namespace meshsplat::app
