// Command-line front end: one subcommand per pipeline stage plus the
// end-to-end pipeline and the alignment service.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "meshsplat/app.hpp"
#include "meshsplat/error.hpp"
#include "meshsplat/metrics.hpp"
#include "meshsplat/service.hpp"
#include "meshsplat/splat_preview.hpp"

namespace fs = std::filesystem;
using namespace meshsplat;
using namespace meshsplat::app;

namespace {

std::optional<int> parse_grades(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const int n = std::stoi(text, &used);
    if (used == text.size()) return n;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ConfigError, "--grades takes an integer or 'auto', got '" + text + "'");
}

Eigen::Vector3d parse_rgb(const std::string& text) {
  Eigen::Vector3d v;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> v.x() >> c1 >> v.y() >> c2 >> v.z()) || c1 != ',' || c2 != ',')
    fail(ErrorCode::ConfigError, "background must be 'r,g,b' in [0,1], got '" + text + "'");
  return v;
}

struct PipelineFlags {
  PipelineConfig config;
  std::string grades = "auto";
  std::uint64_t budget = 0;
  bool single_color = false;
  std::uint64_t seed = 42;

  void add(CLI::App* cmd, bool outputs) {
    cmd->add_option("--mesh", config.mesh_path, "Triangle mesh (PLY)")->required();
    cmd->add_option("--colmap", config.colmap_dir, "COLMAP sparse model directory")->required();
    cmd->add_option("--images", config.images_dir, "Directory of calibration images")->required();
    add_sampling(cmd);
    add_colors(cmd);
    cmd->add_option("--transform", config.transform_path, "Similarity transform (JSON or 4x4 matrix); identity if absent");
    if (outputs) {
      cmd->add_option("--out-ply", config.output_ply, "Merged point cloud (PLY)");
      cmd->add_option("--out-points3d", config.output_points3d, "Merged points3D.bin or points3D.txt");
    }
  }

  void add_sampling(CLI::App* cmd) {
    cmd->add_option("--grades", grades, "Number of grades N+1 in [1,13], or 'auto'");
    cmd->add_option("--budget", budget, "Point budget for --grades auto (default 1000000)");
  }

  void add_colors(CLI::App* cmd) {
    cmd->add_option("--k", config.k, "Number of color clusters");
    cmd->add_option("--seed", seed, "Seed for clustering and color assignment");
    cmd->add_option("--height", config.downscale_height, "Image height after downscaling");
    cmd->add_option("--max-pixels", config.max_pixels, "Cluster a strided subset of at most this many pixels");
    cmd->add_option("--max-iters", config.kmeans_max_iters, "K-means iteration cap");
    cmd->add_flag("--single-color", single_color, "Give every point the same randomly chosen center");
  }

  PipelineConfig resolve() {
    config.num_grades = parse_grades(grades);
    if (budget > 0) config.budget = budget;
    config.kmeans_seed = seed;
    config.color_seed = seed;
    config.color_mode = single_color ? ColorAssignment::SingleColor : ColorAssignment::PerPoint;
    return config;
  }
};

int run_sample(PipelineFlags& flags, const std::string& palette_path, const std::string& out) {
  PipelineConfig config = flags.resolve();
  if (!fs::is_regular_file(config.mesh_path))
    fail(ErrorCode::ConfigError, "mesh '" + config.mesh_path + "' does not exist");
  if (config.num_grades && (*config.num_grades < 1 || *config.num_grades > kMaxNumGrades))
    fail(ErrorCode::ConfigError, "--grades must be in [1, 13] or 'auto'");
  if (palette_path.empty() == config.images_dir.empty())
    fail(ErrorCode::ConfigError, "give exactly one of --palette and --images");

  const SampleResult sampled = sample_mesh_file(config.mesh_path, config.num_grades, config.effective_budget());
  const ColorPalette palette = palette_path.empty() ? palette_from_images(config)
                                                    : palette_from_json([&] {
                                                        const Bytes b = read_file(palette_path);
                                                        return std::string(b.begin(), b.end());
                                                      }());
  const Colors3u8 colors = assign_initial_colors(static_cast<std::size_t>(sampled.cloud.size()), palette,
                                                 config.color_seed, config.color_mode);
  write_file(out, write_ply_points(to_point_cloud(sampled.cloud, colors)));

  PipelineSummary summary;
  summary.triangle_count = sampled.report.triangle_count;
  summary.warnings = sampled.report.warnings;
  summary.skipped_faces = sampled.cloud.skipped_faces.size();
  summary.num_grades = sampled.num_grades;
  summary.grades_auto = sampled.grades_auto;
  summary.grade_histogram.assign(static_cast<std::size_t>(sampled.num_grades), 0);
  for (int g : sampled.cloud.face_grades)
    if (g >= 0) ++summary.grade_histogram[static_cast<std::size_t>(g)];
  summary.sampled_points = static_cast<std::uint64_t>(sampled.cloud.size());
  summary.cluster_centers = palette.centers;
  summary.cluster_sizes = palette.sizes;
  summary.outputs = {out};
  print_summary(std::cout, summary);
  return 0;
}

int run_merge(const std::string& sampled_path, const PipelineConfig& base) {
  PipelineConfig config = base;
  if (!fs::is_regular_file(sampled_path))
    fail(ErrorCode::ConfigError, "sampled cloud '" + sampled_path + "' does not exist");
  if (!fs::is_directory(config.colmap_dir))
    fail(ErrorCode::ConfigError, "COLMAP model '" + config.colmap_dir + "' is not a directory");
  if (!config.transform_path.empty() && !fs::is_regular_file(config.transform_path))
    fail(ErrorCode::ConfigError, "transform '" + config.transform_path + "' does not exist");
  if (config.output_ply.empty() && config.output_points3d.empty())
    fail(ErrorCode::ConfigError, "at least one of --out-ply and --out-points3d is required");

  const SimilarityTransformd transform =
      config.transform_path.empty() ? SimilarityTransformd::identity() : load_transform(config.transform_path);
  PreparedClouds prepared;
  prepared.sampled = parse_ply_points(read_file(sampled_path));
  prepared.model = read_sparse_model_dir(config.colmap_dir);
  prepared.sfm = sparse_points_to_cloud(prepared.model);
  PipelineSummary summary;
  write_outputs(prepared, transform, config, &summary);
  std::cout << "merged points: " << summary.merged_points << "\n";
  for (const auto& path : summary.outputs) std::cout << "wrote: " << path << "\n";
  return 0;
}

std::vector<std::pair<std::string, std::string>> metric_pairs(const std::string& ref, const std::string& test) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (fs::is_directory(ref) && fs::is_directory(test)) {
    for (const auto& path : list_images(ref)) {
      const fs::path other = fs::path(test) / fs::path(path).filename();
      if (!fs::is_regular_file(other))
        fail(ErrorCode::ConfigError, "no counterpart for '" + fs::path(path).filename().string() + "' in " + test);
      pairs.emplace_back(path, other.string());
    }
    if (pairs.empty()) fail(ErrorCode::NoImages, "no PNG or JPEG images in " + ref);
  } else if (fs::is_regular_file(ref) && fs::is_regular_file(test)) {
    pairs.emplace_back(ref, test);
  } else {
    fail(ErrorCode::ConfigError, "reference and test must both be files or both be directories");
  }
  return pairs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Mesh-prior point cloud initialization for Gaussian splatting"};
  cli.require_subcommand(1);

  PipelineFlags sample_flags;
  std::string sample_palette, sample_out;
  auto* sample = cli.add_subcommand("sample", "Sample a colored point cloud from a mesh (mesh frame)");
  sample->add_option("--mesh", sample_flags.config.mesh_path, "Triangle mesh (PLY)")->required();
  sample->add_option("--images", sample_flags.config.images_dir, "Cluster colors from these images");
  sample->add_option("--palette", sample_palette, "Palette JSON from the colors subcommand");
  sample->add_option("--out", sample_out, "Output point PLY")->required();
  sample_flags.add_sampling(sample);
  sample_flags.add_colors(sample);

  PipelineFlags colors_flags;
  std::string colors_out;
  auto* colors = cli.add_subcommand("colors", "Cluster image colors into a palette");
  colors->add_option("--images", colors_flags.config.images_dir, "Directory of images")->required();
  colors->add_option("--out", colors_out, "Palette JSON (stdout if absent)");
  colors_flags.add_colors(colors);

  PipelineConfig merge_config;
  std::string merge_sampled;
  auto* merge = cli.add_subcommand("merge", "Transform a sampled cloud and merge it with a COLMAP model");
  merge->add_option("--sampled", merge_sampled, "Sampled point PLY in the mesh frame")->required();
  merge->add_option("--colmap", merge_config.colmap_dir, "COLMAP sparse model directory")->required();
  merge->add_option("--transform", merge_config.transform_path, "Similarity transform; identity if absent");
  merge->add_option("--out-ply", merge_config.output_ply, "Merged point cloud (PLY)");
  merge->add_option("--out-points3d", merge_config.output_points3d, "Merged points3D.bin or points3D.txt");

  PipelineFlags pipeline_flags;
  auto* pipeline = cli.add_subcommand("pipeline", "Sample, color, transform, merge and write");
  pipeline_flags.add(pipeline, true);

  std::string preview_cloud, preview_colmap, preview_out, preview_background = "0,0,0";
  std::uint32_t preview_image = 0;
  int preview_size = 0;
  auto* preview = cli.add_subcommand("preview", "Splat a point cloud from a COLMAP camera to PNG");
  preview->add_option("--cloud", preview_cloud, "Point PLY in the COLMAP frame")->required();
  preview->add_option("--colmap", preview_colmap, "COLMAP sparse model directory")->required();
  preview->add_option("--image-id", preview_image, "COLMAP image id")->required();
  preview->add_option("--out", preview_out, "Output PNG")->required();
  preview->add_option("--max-size", preview_size, "Downscale so the longer side is at most this");
  preview->add_option("--background", preview_background, "Background color r,g,b in [0,1]");

  std::string metrics_ref, metrics_test, metrics_bbox, metrics_mode = "luma";
  auto* metrics = cli.add_subcommand("metrics", "PSNR and SSIM of test images against references (CSV)");
  metrics->add_option("reference", metrics_ref, "Reference image or directory")->required();
  metrics->add_option("test", metrics_test, "Test image or directory")->required();
  metrics->add_option("--bbox", metrics_bbox, "Crop x,y,w,h applied to both images");
  metrics->add_option("--ssim-mode", metrics_mode, "luma or mean")->check(CLI::IsMember({"luma", "mean"}));

  PipelineFlags serve_flags;
  ServiceOptions serve_options = options_from_environment();
  auto* serve = cli.add_subcommand("serve", "Run the alignment service (MESHSPLAT_HOST/MESHSPLAT_PORT override)");
  serve_flags.add(serve, true);
  serve->add_option("--static-dir", serve_options.static_dir, "Serve UI assets from this directory");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  try {
    if (*sample) return run_sample(sample_flags, sample_palette, sample_out);

    if (*colors) {
      PipelineConfig config = colors_flags.resolve();
      if (!fs::is_directory(config.images_dir))
        fail(ErrorCode::ConfigError, "images '" + config.images_dir + "' is not a directory");
      const std::string json = palette_to_json(palette_from_images(config)) + "\n";
      if (colors_out.empty()) {
        std::cout << json;
      } else {
        write_file(colors_out, as_bytes(json));
      }
      return 0;
    }

    if (*merge) return run_merge(merge_sampled, merge_config);

    if (*pipeline) {
      const PipelineSummary summary = run_pipeline(pipeline_flags.resolve());
      print_summary(std::cout, summary);
      return 0;
    }

    if (*preview) {
      const Eigen::Vector3d background = parse_rgb(preview_background);
      const SparseModel model = read_sparse_model_dir(preview_colmap);
      PreviewCamera camera = camera_from_model(model, preview_image);
      int width = static_cast<int>(camera.intrinsics.width);
      int height = static_cast<int>(camera.intrinsics.height);
      if (preview_size > 0 && std::max(width, height) > preview_size) {
        const double f = static_cast<double>(preview_size) / std::max(width, height);
        width = std::max(1, static_cast<int>(std::lround(width * f)));
        height = std::max(1, static_cast<int>(std::lround(height * f)));
        const double sx = width / static_cast<double>(camera.intrinsics.width);
        const double sy = height / static_cast<double>(camera.intrinsics.height);
        camera.intrinsics.fx *= sx;
        camera.intrinsics.cx *= sx;
        camera.intrinsics.fy *= sy;
        camera.intrinsics.cy *= sy;
      }
      const PointCloud cloud = parse_ply_points(read_file(preview_cloud));
      save_png(preview_out, to_rgb8(render_preview(init_gaussians(cloud), camera, width, height, background)));
      std::cout << "wrote: " << preview_out << "\n";
      return 0;
    }

    if (*metrics) {
      const std::optional<BoundingBox> box =
          metrics_bbox.empty() ? std::nullopt : std::optional<BoundingBox>(parse_bbox(metrics_bbox));
      const SsimMode mode = metrics_mode == "mean" ? SsimMode::ChannelMean : SsimMode::Luma;
      const auto pairs = metric_pairs(metrics_ref, metrics_test);
      std::cout << "name,psnr_db,ssim\n";
      for (const auto& [ref, test] : pairs) {
        const RgbImage a = load_image(ref);
        const RgbImage b = load_image(test);
        char ssim_text[32];
        std::snprintf(ssim_text, sizeof(ssim_text), "%.6f", ssim(a, b, box, mode));
        std::cout << fs::path(test).filename().string() << "," << format_db(psnr(a, b, box)) << "," << ssim_text
                  << "\n";
      }
      return 0;
    }

    if (*serve) {
      AlignmentService service(serve_flags.resolve());
      const int port = service.bind(serve_options);
      std::cout << "session " << service.session_id() << " listening on http://" << serve_options.host << ":"
                << port << "\n"
                << std::flush;
      service.listen();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
