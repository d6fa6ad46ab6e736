// Acceptance suite: one PASS/FAIL line per primary criterion, nonzero exit
// if any fails. Every check compares the library against an oracle that is
// computed independently in test code.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "meshsplat/app.hpp"
#include "meshsplat/colmap_io.hpp"
#include "meshsplat/color_init.hpp"
#include "meshsplat/error.hpp"
#include "meshsplat/mesh_io.hpp"
#include "meshsplat/metrics.hpp"
#include "meshsplat/registration.hpp"
#include "meshsplat/sampler.hpp"
#include "meshsplat/service.hpp"
#include "meshsplat/splat_preview.hpp"
#include "oracles.hpp"
#include "ssim_fixtures.hpp"
#include "test_support.hpp"

// Last: <resolv.h> defines a _res macro that clashes with Eigen internals.
#include <httplib.h>

namespace meshsplat {
namespace {

using Clock = std::chrono::steady_clock;
using testing::Rng;
using testing::uniform;

/// Thrown by require() to abort a check with a reason.
struct CheckFailed {
  std::string reason;
};

void require(bool ok, const std::string& reason) {
  if (!ok) throw CheckFailed{reason};
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- sampler

/// Grade by walking the ratio interval down in quarters.
int oracle_grade(double ratio, int num_grades) {
  double upper = 1.0;
  for (int g = num_grades - 1; g >= 1; --g) {
    if (ratio > upper / 4.0) return g;
    upper /= 4.0;
  }
  return 0;
}

/// 1000 equal-area triangles: a 25 x 20 grid of split unit quads.
TriangleMesh grid_mesh() {
  constexpr int nx = 25, ny = 20;
  TriangleMesh mesh;
  mesh.vertices.resize((nx + 1) * (ny + 1), 3);
  for (int y = 0; y <= ny; ++y)
    for (int x = 0; x <= nx; ++x) mesh.vertices.row(y * (nx + 1) + x) << x, y, 0.1 * std::sin(x + y);
  mesh.faces.resize(2 * nx * ny, 3);
  Eigen::Index f = 0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const auto v = static_cast<std::uint32_t>(y * (nx + 1) + x);
      const auto up = v + static_cast<std::uint32_t>(nx + 1);
      mesh.faces.row(f++) << v, v + 1, up + 1;
      mesh.faces.row(f++) << v, up + 1, up;
    }
  return mesh;
}

std::string check_throughput() {
  const TriangleMesh mesh = grid_mesh();
  require(mesh.num_faces() == 1000, "grid is not 1000 faces");
  // Warm up page tables and the thread pool, then take the median of 5.
  const auto warm = sample_mesh(mesh, 6, barycentric_table<double>(5));
  std::vector<double> times;
  Eigen::Index points = 0;
  for (int run = 0; run < 5; ++run) {
    const auto start = Clock::now();
    const auto table = barycentric_table<double>(5);
    const auto cloud = sample_mesh(mesh, 6, table);
    times.push_back(seconds_since(start));
    points = cloud.size();
  }
  std::sort(times.begin(), times.end());
  require(points >= 1'000'000, "only " + std::to_string(points) + " points");
  std::ostringstream msg;
  msg << points << " points from 1000 triangles, median " << times[2] << " s over 5 runs on "
      << std::thread::hardware_concurrency() << " hardware threads (target < 1 s, ceiling 2 s)";
  require(times[2] < 2.0, msg.str());
  if (times[2] >= 1.0) msg << "; over the 1 s desktop target but inside the ceiling";
  (void)warm;
  return msg.str();
}

std::string check_count_law() {
  Rng rng(2024);
  std::uint64_t total = 0;
  for (int mesh_index = 0; mesh_index < 100; ++mesh_index) {
    const TriangleMesh mesh = testing::random_mesh(rng, 10 + static_cast<Eigen::Index>(rng() % 40));
    const Eigen::VectorXd areas = face_areas(mesh);
    const auto table = barycentric_table<double>(8);
    for (int n = 6; n <= 9; ++n) {
      std::uint64_t expected = 0;
      for (Eigen::Index f = 0; f < areas.size(); ++f)
        expected += std::uint64_t{1} << (2 * oracle_grade(areas[f] / areas.maxCoeff(), n));
      const auto cloud = sample_mesh(mesh, n, table);
      require(static_cast<std::uint64_t>(cloud.size()) == expected,
              "mesh " + std::to_string(mesh_index) + " N+1=" + std::to_string(n) + ": " +
                  std::to_string(cloud.size()) + " != " + std::to_string(expected));
      total += expected;
    }
  }
  // Ratios 4^-j close the interval of grade 8-j; just above belongs to 9-j.
  for (int j = 1; j <= 8; ++j) {
    const std::vector<double> exact = {1.0, std::ldexp(1.0, -2 * j)};
    const std::vector<double> above = {1.0, std::nextafter(std::ldexp(1.0, -2 * j), 1.0)};
    require(grade_triangles(exact, 9).grades[1] == std::max(0, 8 - j), "ratio 4^-" + std::to_string(j));
    require(grade_triangles(above, 9).grades[1] == 9 - j, "just above 4^-" + std::to_string(j));
  }
  const std::vector<double> table1 = {1.0, 0.2, 0.01};
  require(grade_triangles(table1, 9).grades == std::vector<int>{8, 7, 5}, "ratios 1, 0.2, 0.01");
  return "400 mesh/grade combinations, " + std::to_string(total) + " points, 16 threshold cases";
}

std::string check_barycentric() {
  const auto table = barycentric_table<double>(4);
  for (int n = 0; n <= 4; ++n) {
    const auto& w = table.level(n);
    std::set<std::array<double, 3>> rows;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      require(std::abs(w.row(r).sum() - 1.0) <= 1e-12, "weight sum at depth " + std::to_string(n));
      rows.insert({w(r, 0), w(r, 1), w(r, 2)});
    }
    require(rows.size() == (std::size_t{1} << (2 * n)), "duplicate rows at depth " + std::to_string(n));
  }
  Eigen::Matrix<double, 4, 3, Eigen::RowMajor> hand;
  hand << 2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  require(table.level(1) == hand, "depth-1 table differs from the four hand-derived centroids");

  Rng rng(77);
  const TriangleMesh mesh = testing::random_mesh(rng, 10000);
  std::uint64_t points = 0;
  double worst_planarity = 0, worst_containment = std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
    Eigen::Matrix3d v;
    for (int k = 0; k < 3; ++k) v.row(k) = mesh.vertices.row(mesh.faces(f, k));
    const Eigen::Vector3d a = v.row(0), b = v.row(1), c = v.row(2);
    const Eigen::Vector3d normal = (b - a).cross(c - a).normalized();
    const double diameter = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    for (int n = 0; n <= 4; ++n) {
      Points3d out(table.level(n).rows(), 3);
      sample_triangle<double>(table.level(n), v, out);
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const Eigen::Vector3d p = out.row(i);
        worst_planarity = std::max(worst_planarity, std::abs((p - a).dot(normal)) / diameter);
        worst_containment = std::min(worst_containment, testing::barycentric_of(p, a, b, c).minCoeff());
      }
      points += static_cast<std::uint64_t>(out.rows());
    }
  }
  std::ostringstream msg;
  msg << points << " points, worst planarity " << worst_planarity << ", min barycentric " << worst_containment;
  require(worst_planarity < 1e-9, msg.str());
  require(worst_containment >= -1e-12, msg.str());
  return msg.str();
}

// ---------------------------------------------------------------- colors

PixelSet pixel_set(const std::vector<Eigen::Vector3d>& colors) {
  PixelSet set;
  set.colors.resize(static_cast<Eigen::Index>(colors.size()), 3);
  for (std::size_t i = 0; i < colors.size(); ++i) set.colors.row(static_cast<Eigen::Index>(i)) = colors[i].transpose();
  set.image_count = 1;
  return set;
}

std::string check_kmeans() {
  std::vector<Eigen::Vector3d> nine;
  for (const Eigen::Vector3d& c : {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(255, 255, 255), Eigen::Vector3d(255, 0, 0)})
    for (int i = 0; i < 3; ++i) nine.push_back(c);
  const testing::PartitionOptimum best = testing::best_partition(nine, 3);
  const ColorPalette palette = kmeans_colors(pixel_set(nine), {3, 42, 100, 1e-3});
  for (const auto& c : best.centers) {
    bool found = false;
    for (Eigen::Index r = 0; r < palette.centers.rows(); ++r) found |= palette.centers.row(r).transpose() == c;
    require(found, "optimal center missing from the palette");
  }
  require(kmeans_objective(pixel_set(nine).colors, palette.centers) == best.objective, "objective above optimum");

  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::Vector3d> px;
    const int n = 50 + static_cast<int>(rng() % 500);
    for (int i = 0; i < n; ++i) px.emplace_back(uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255));
    const ColorPalette p = kmeans_colors(pixel_set(px), {2 + trial % 5, static_cast<std::uint64_t>(trial), 100, 1e-6});
    require(!p.objective_history.empty(), "no objective history");
    for (std::size_t i = 1; i < p.objective_history.size(); ++i)
      require(p.objective_history[i] <= p.objective_history[i - 1] * (1 + 1e-12),
              "objective rose in trial " + std::to_string(trial));
  }

  std::vector<Eigen::Vector3d> px;
  for (int i = 0; i < 20000; ++i) px.emplace_back(uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255));
  const ColorPalette a = kmeans_colors(pixel_set(px), {3, 42, 100, 1e-3});
  const ColorPalette b = kmeans_colors(pixel_set(px), {3, 42, 100, 1e-3});
  require(a.centers == b.centers && a.objective_history == b.objective_history, "seeded runs differ");
  return "9-pixel optimum 0 reached, 50 monotone runs, seeded runs bit-identical";
}

// ---------------------------------------------------------------- formats

template <typename T>
void put(Bytes& out, T value) {
  const auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  out.insert(out.end(), raw.begin(), raw.end());
}

std::string check_formats() {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const PointCloud cloud = testing::random_cloud(rng, 1 + static_cast<Eigen::Index>(rng() % 300));
    const Bytes bytes = write_ply_points(cloud);
    const PointCloud parsed = parse_ply_points(bytes);
    require(parsed == cloud && write_ply_points(parsed) == bytes, "PLY instance " + std::to_string(trial));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const auto points = testing::random_sparse_points(rng, rng() % 300);
    const Bytes bytes = write_points3d(points, SparseFormat::Binary);
    const auto parsed = read_points3d(bytes, SparseFormat::Binary);
    require(parsed.size() == points.size(), "points3D count " + std::to_string(trial));
    for (const auto& p : points) require(parsed.at(p.id) == p, "points3D instance " + std::to_string(trial));
    std::vector<SparsePoint> again;
    for (const auto& [id, p] : parsed) again.push_back(p);
    require(write_points3d(again, SparseFormat::Binary) == bytes, "points3D rewrite " + std::to_string(trial));
  }

  Bytes blob;
  put<std::uint64_t>(blob, 1);
  put<std::uint64_t>(blob, 7);
  for (double v : {1.0, 2.0, 3.0}) put<double>(blob, v);
  for (std::uint8_t v : {10, 20, 30}) blob.push_back(v);
  put<double>(blob, 0.5);
  put<std::uint64_t>(blob, 1);
  put<std::uint32_t>(blob, 1);
  put<std::uint32_t>(blob, 4);
  require(blob.size() == 8 + 59, "blob layout");
  const SparsePoint p = read_points3d(blob, SparseFormat::Binary).at(7);
  require(p.position == Eigen::Vector3d(1, 2, 3) && p.color == Vector3u8(10, 20, 30) && p.error == 0.5 &&
              p.track.size() == 1 && p.track[0].image_id == 1 && p.track[0].point2d_index == 4,
          "59-byte record decoded wrongly");
  return "1000 PLY and 1000 points3D instances bit-exact, 59-byte record decoded";
}

// ---------------------------------------------------------------- registration

std::string check_registration() {
  Rng rng(6);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const SimilarityTransformd truth = testing::random_similarity(rng);
    Eigen::Matrix3Xd src(3, 4 + static_cast<Eigen::Index>(rng() % 20));
    for (Eigen::Index i = 0; i < src.cols(); ++i)
      src.col(i) = Eigen::Vector3d(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    // Target built from the oracle rotation matrix, not the library.
    const Eigen::Matrix3Xd dst =
        (truth.scale * testing::quaternion_matrix(truth.rotation) * src).colwise() + truth.translation;
    const SimilarityTransformd est = estimate_similarity<double>(src, dst).transform;
    const double q_err = std::min((est.rotation.coeffs() - truth.rotation.coeffs()).norm(),
                                  (est.rotation.coeffs() + truth.rotation.coeffs()).norm());
    worst = std::max({worst, std::abs(est.scale - truth.scale), q_err, (est.translation - truth.translation).norm()});
  }
  std::ostringstream msg;
  msg << "500 transforms, worst parameter error " << worst;
  require(worst < 1e-6, msg.str());

  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix3Xd src(3, 8);
    for (Eigen::Index i = 0; i < 8; ++i)
      src.col(i) = Eigen::Vector3d(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    Eigen::Matrix3Xd dst = src;
    dst.row(0) *= -1.0;
    try {
      estimate_similarity<double>(src, dst);
      throw CheckFailed{"mirror image accepted"};
    } catch (const Error& e) {
      require(e.code() == ErrorCode::ReflectionDetected, "mirror raised " + std::string(to_string(e.code())));
    }
  }
  return msg.str() + ", 50 reflections rejected";
}

// ---------------------------------------------------------------- renderer

PreviewCamera square_camera(int size, double f) {
  PreviewCamera cam;
  cam.intrinsics = {1, CameraModel::Pinhole, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(size),
                    f, f, size / 2.0, size / 2.0};
  return cam;
}

std::string check_renderer() {
  Rng rng(6);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Gaussian3D> gs(1 + rng() % 20);
    for (auto& g : gs) {
      g.mean = Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 2, 6));
      g.scale = Eigen::Vector3d(uniform(rng, 0.02, 0.4), uniform(rng, 0.02, 0.4), uniform(rng, 0.02, 0.4));
      g.rotation = testing::random_rotation(rng);
      g.opacity = uniform(rng, 0.05, 1.0);
      g.color = Eigen::Vector3d(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
    }
    PreviewCamera cam = square_camera(32, uniform(rng, 20, 60));
    cam.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(uniform(rng, -0.2, 0.2), Eigen::Vector3d::UnitY()));
    const Eigen::Vector3d bg(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
    const FloatImage img = render_preview(gs, cam, 32, 32, bg);
    const testing::OracleImage ref = testing::render_oracle(gs, cam, 32, 32, bg);
    for (int p = 0; p < 32 * 32; ++p) {
      worst = std::max(worst, (img.rgb.row(p).transpose() - ref.rgb[static_cast<std::size_t>(p)]).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(img.alpha[p] - ref.alpha[static_cast<std::size_t>(p)]));
    }
  }
  std::ostringstream msg;
  msg << "100 scenes, worst deviation " << worst;
  require(worst <= 1e-6, msg.str());

  for (int trial = 0; trial < 10000; ++trial) {
    const Eigen::Vector3d s(std::exp(uniform(rng, -4, 2)), std::exp(uniform(rng, -4, 2)), std::exp(uniform(rng, -4, 2)));
    const Eigen::Matrix3d c = covariance_3d<double>(s, testing::random_rotation(rng));
    require(c == c.transpose(), "covariance not symmetric");
    require(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(c).eigenvalues().minCoeff() > 0, "covariance not PD");
  }

  PreviewCamera cam = square_camera(16, 20);
  cam.intrinsics.height = 12;
  cam.intrinsics.cx = 8.5;
  cam.intrinsics.cy = 6.5;
  Gaussian3D g;
  g.mean = Eigen::Vector3d(0, 0, 5);
  g.scale = Eigen::Vector3d::Constant(0.05);
  g.opacity = 0.5;
  g.color = Eigen::Vector3d::Ones();
  const RgbImage rgb = to_rgb8(render_preview({g}, cam, 16, 12));
  require(rgb.at(8, 6, 0) == 128 && rgb.at(8, 6, 1) == 128 && rgb.at(8, 6, 2) == 128, "mean pixel is not 128");
  return msg.str() + ", 10000 PD covariances, half-alpha white splat gives 128";
}

// ---------------------------------------------------------------- metrics

std::string check_metrics() {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const RgbImage img = testing::random_image(rng, 11 + static_cast<int>(rng() % 60), 11 + static_cast<int>(rng() % 60));
    require(ssim(img, img) == 1.0 && ssim(img, img, std::nullopt, SsimMode::ChannelMean) == 1.0, "ssim(a,a) != 1");
    require(std::isinf(psnr(img, img)) && psnr(img, img) > 0, "psnr(a,a) != +inf");
  }
  double worst = 0;
  for (const auto& ref : testing::kSsimReferences) {
    const RgbImage a = testing::pattern(ref.a), b = testing::pattern(ref.b);
    worst = std::max(worst, std::abs(ssim(a, b) - ref.luma));
    worst = std::max(worst, std::abs(ssim(a, b, std::nullopt, SsimMode::ChannelMean) - ref.channel_mean));
  }
  std::ostringstream msg;
  msg << "100 identity pairs, worst deviation from the reference SSIM " << worst;
  require(worst < 1e-4, msg.str());
  require(psnr(RgbImage(4, 4, 0), RgbImage(4, 4, 255)) == 0.0, "black vs white is not 0 dB");
  return msg.str() + ", black vs white 0 dB";
}

// ---------------------------------------------------------------- end to end

std::string check_end_to_end() {
  testing::TempDir dir;
  const testing::Fixture fx = testing::write_fixture(dir.path());
  app::PipelineConfig config;
  config.mesh_path = fx.mesh;
  config.colmap_dir = fx.colmap;
  config.images_dir = fx.images;
  config.num_grades = 6;
  config.transform_path = fx.identity_transform;

  // CLI run.
  const std::string cli_ply = dir.file("cli.ply");
  const std::string cmd = std::string(MESHSPLAT_CLI) + " pipeline --mesh " + fx.mesh + " --colmap " + fx.colmap +
                          " --images " + fx.images + " --grades 6 --transform " + fx.identity_transform +
                          " --out-ply " + cli_ply + " > " + dir.file("cli.log") + " 2>&1";
  require(std::system(cmd.c_str()) == 0, "CLI pipeline failed");

  // Oracle count: per-face grades from area ratios, plus the SfM points.
  const Eigen::VectorXd areas = face_areas(testing::tetrahedron_mesh());
  Eigen::Index expected = static_cast<Eigen::Index>(fx.model.points.size());
  for (Eigen::Index f = 0; f < areas.size(); ++f)
    expected += Eigen::Index{1} << (2 * oracle_grade(areas[f] / areas.maxCoeff(), 6));

  const PointCloud merged = parse_ply_points(read_file(cli_ply));
  require(merged.size() == expected, "merged count " + std::to_string(merged.size()) + " != " + std::to_string(expected));
  const PointCloud sfm = sparse_points_to_cloud(fx.model);
  require(merged.positions.topRows(3) == sfm.positions && merged.colors.topRows(3) == sfm.colors,
          "SfM points are not the ordered prefix");
  const ColorPalette palette = app::palette_from_images(config);
  std::set<std::array<int, 3>> allowed;
  for (Eigen::Index r = 0; r < palette.centers.rows(); ++r) {
    const Vector3u8 q = quantize_color(palette.centers.row(r).transpose());
    allowed.insert({q[0], q[1], q[2]});
  }
  for (Eigen::Index i = 3; i < merged.size(); ++i)
    require(allowed.count({merged.colors(i, 0), merged.colors(i, 1), merged.colors(i, 2)}) == 1,
            "sampled color outside the palette at " + std::to_string(i));

  // Scripted service session: set identity, try an estimate, merge.
  config.output_ply = dir.file("service.ply");
  app::AlignmentService service(config);
  app::ServiceOptions options;
  options.port = 0;
  const int port = service.bind(options);
  std::thread server([&] { service.listen(); });
  std::string failure;
  {
    httplib::Client client("127.0.0.1", port);
    const std::string identity(reinterpret_cast<const char*>(read_file(fx.identity_transform).data()),
                               read_file(fx.identity_transform).size());
    auto put = client.Put("/session/transform", identity, "application/json");
    nlohmann::json pairs = nlohmann::json::array();
    for (const Eigen::Vector3d& p : {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)})
      pairs.push_back({{"sampled", {p.x(), p.y(), p.z()}}, {"sfm", {p.x(), p.y(), p.z()}}});
    auto add = client.Post("/session/correspondences", nlohmann::json{{"add", pairs}}.dump(), "application/json");
    auto est = client.Post("/session/estimate", "{}", "application/json");
    auto merge = client.Post("/session/merge", "{}", "application/json");
    if (!put || put->status != 200) failure = "PUT /session/transform failed";
    else if (!add || add->status != 200) failure = "POST /session/correspondences failed";
    else if (!est || est->status != 200) failure = "POST /session/estimate failed";
    else if (std::abs(nlohmann::json::parse(est->body)["transform"]["scale"].get<double>() - 1.0) > 1e-9)
      failure = "estimate is not identity";
    else if (!merge || merge->status != 200) failure = "POST /session/merge failed";
  }
  service.stop();
  server.join();
  require(failure.empty(), failure);
  require(read_file(config.output_ply) == read_file(cli_ply), "service output differs from CLI output");
  return std::to_string(merged.size()) + " points, palette colors only, SfM prefix, CLI and service byte-identical";
}

struct Criterion {
  const char* name;
  std::function<std::string()> run;
};

}  // namespace
}  // namespace meshsplat

int main() {
  using namespace meshsplat;
  const std::vector<Criterion> criteria = {
      {"sampling throughput", check_throughput}, {"count law", check_count_law},
      {"barycentric suite", check_barycentric},  {"k-means oracle", check_kmeans},
      {"format round-trips", check_formats},     {"registration", check_registration},
      {"renderer oracle", check_renderer},       {"metrics", check_metrics},
      {"end-to-end fixture", check_end_to_end},
  };
  const auto start = Clock::now();
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.run();
    } catch (const CheckFailed& e) {
      ok = false;
      detail = e.reason;
    } catch (const Error& e) {
      ok = false;
      detail = std::string(to_string(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    failures += ok ? 0 : 1;
    std::printf("%s %s (%.2f s): %s\n", ok ? "PASS" : "FAIL", c.name, seconds_since(t0), detail.c_str());
    std::fflush(stdout);
  }
  const double total = seconds_since(start);
  const bool in_budget = total < 300.0;
  failures += in_budget ? 0 : 1;
  std::printf("%s primary suite runtime: %.1f s (limit 300 s)\n", in_budget ? "PASS" : "FAIL", total);
  return failures == 0 ? 0 : 1;
}
