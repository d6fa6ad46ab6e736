#include "meshsplat/color_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "meshsplat/detail/parallel.hpp"
#include "meshsplat/detail/random.hpp"
#include "meshsplat/error.hpp"

namespace meshsplat {
namespace {

struct Tap {
  int index;
  std::int64_t overlap;
};

// Along one axis, measure lengths in units of 1/dst source pixels: source
// pixel j spans [j*dst, (j+1)*dst) and output pixel i spans [i*src,
// (i+1)*src). Overlaps are then integers summing to `src` per output pixel,
// so area averages are exact up to one final division.
std::vector<std::vector<Tap>> area_taps(int src, int dst) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(dst));
  for (int i = 0; i < dst; ++i) {
    const std::int64_t lo = static_cast<std::int64_t>(i) * src;
    const std::int64_t hi = lo + src;
    for (std::int64_t j = lo / dst; j < src && j * dst < hi; ++j) {
      const std::int64_t overlap = std::min(hi, (j + 1) * dst) - std::max(lo, j * dst);
      if (overlap > 0) taps[static_cast<std::size_t>(i)].push_back({static_cast<int>(j), overlap});
    }
  }
  return taps;
}

constexpr Eigen::Index kBlock = 4096;

struct BlockStats {
  Eigen::Matrix<double, Eigen::Dynamic, 3> sums;
  std::vector<std::size_t> counts;
  double objective = 0.0;
};

double squared_distance(const Points3d& a, Eigen::Index i, const Points3d& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// Nearest center, ties to the lowest index.
Eigen::Index nearest(const Points3d& pixels, Eigen::Index i, const Points3d& centers, double& best) {
  Eigen::Index arg = 0;
  best = squared_distance(pixels, i, centers, 0);
  for (Eigen::Index c = 1; c < centers.rows(); ++c) {
    const double d = squared_distance(pixels, i, centers, c);
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

struct Assignment {
  std::vector<Eigen::Index> labels;
  std::vector<double> distances;
  Eigen::Matrix<double, Eigen::Dynamic, 3> sums;
  std::vector<std::size_t> counts;
  double objective = 0.0;
};

Assignment assign(const Points3d& pixels, const Points3d& centers) {
  const Eigen::Index n = pixels.rows();
  const Eigen::Index k = centers.rows();
  const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
  Assignment out;
  out.labels.resize(static_cast<std::size_t>(n));
  out.distances.resize(static_cast<std::size_t>(n));
  std::vector<BlockStats> partial(blocks);

  detail::parallel_for(
      0, blocks,
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b) {
          BlockStats& s = partial[b];
          s.sums.setZero(k, 3);
          s.counts.assign(static_cast<std::size_t>(k), 0);
          const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlock;
          const Eigen::Index end = std::min(n, begin + kBlock);
          for (Eigen::Index i = begin; i < end; ++i) {
            double d = 0.0;
            const Eigen::Index c = nearest(pixels, i, centers, d);
            out.labels[static_cast<std::size_t>(i)] = c;
            out.distances[static_cast<std::size_t>(i)] = d;
            s.sums.row(c) += pixels.row(i);
            ++s.counts[static_cast<std::size_t>(c)];
            s.objective += d;
          }
        }
      },
      1);

  out.sums.setZero(k, 3);
  out.counts.assign(static_cast<std::size_t>(k), 0);
  for (const auto& s : partial) {
    out.sums += s.sums;
    for (Eigen::Index c = 0; c < k; ++c) out.counts[static_cast<std::size_t>(c)] += s.counts[static_cast<std::size_t>(c)];
    out.objective += s.objective;
  }
  return out;
}

Points3d seed_plus_plus(const Points3d& pixels, int k, detail::PortableRng& rng) {
  const Eigen::Index n = pixels.rows();
  Points3d centers(k, 3);
  centers.row(0) = pixels.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(pixels, i, centers, 0);

  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        running += d2[static_cast<std::size_t>(i)];
        if (running > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = pixels.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], squared_distance(pixels, i, centers, c));
  }
  return centers;
}

}  // namespace

int scaled_width(int width, int height, int target_height) {
  const double w = static_cast<double>(width) * target_height / height;
  return std::max(1, static_cast<int>(std::lround(w)));
}

Points3d resize_area(const RgbImage& image, int out_width, int out_height) {
  if (image.width <= 0 || image.height <= 0 || out_width <= 0 || out_height <= 0)
    fail(ErrorCode::InvalidArgument, "resize_area needs positive sizes");
  const auto xt = area_taps(image.width, out_width);
  const auto yt = area_taps(image.height, out_height);

  // Horizontal pass: out_width x source height, integer weighted sums.
  std::vector<std::int64_t> tmp(static_cast<std::size_t>(out_width) * image.height * 3, 0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < out_width; ++x)
      for (const Tap& t : xt[static_cast<std::size_t>(x)])
        for (int c = 0; c < 3; ++c)
          tmp[(static_cast<std::size_t>(y) * out_width + x) * 3 + c] += t.overlap * image.at(t.index, y, c);

  const double norm = static_cast<double>(image.width) * image.height;
  Points3d out(static_cast<Eigen::Index>(out_width) * out_height, 3);
  std::vector<std::int64_t> acc(static_cast<std::size_t>(out_width) * 3);
  for (int y = 0; y < out_height; ++y) {
    std::fill(acc.begin(), acc.end(), 0);
    for (const Tap& t : yt[static_cast<std::size_t>(y)])
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] += t.overlap * tmp[static_cast<std::size_t>(t.index) * out_width * 3 + i];
    for (int x = 0; x < out_width; ++x)
      for (int c = 0; c < 3; ++c)
        out(static_cast<Eigen::Index>(y) * out_width + x, c) =
            static_cast<double>(acc[static_cast<std::size_t>(x) * 3 + c]) / norm;
  }
  return out;
}

PixelSet collect_pixels(std::span<const RgbImage> images, int target_height) {
  if (images.empty()) fail(ErrorCode::NoImages, "no images to collect pixels from");
  if (target_height < 1) fail(ErrorCode::InvalidArgument, "target height must be >= 1");
  std::vector<Points3d> parts;
  Eigen::Index total = 0;
  for (const auto& img : images) {
    parts.push_back(resize_area(img, scaled_width(img.width, img.height, target_height), target_height));
    total += parts.back().rows();
  }
  PixelSet set;
  set.image_count = images.size();
  set.colors.resize(total, 3);
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    set.colors.middleRows(row, p.rows()) = p;
    row += p.rows();
  }
  return set;
}

PixelSet collect_pixels_from_directory(const std::string& directory, int target_height) {
  const auto files = list_images(directory);
  if (files.empty()) fail(ErrorCode::NoImages, "no PNG/JPEG images in '" + directory + "'");
  std::vector<RgbImage> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(load_image(f));
  return collect_pixels(images, target_height);
}

PixelSet subsample_pixels(const PixelSet& pixels, std::size_t max_pixels) {
  const auto n = static_cast<std::size_t>(pixels.size());
  if (max_pixels == 0 || n <= max_pixels) return pixels;
  PixelSet out;
  out.image_count = pixels.image_count;
  out.colors.resize(static_cast<Eigen::Index>(max_pixels), 3);
  for (std::size_t i = 0; i < max_pixels; ++i)
    out.colors.row(static_cast<Eigen::Index>(i)) = pixels.colors.row(static_cast<Eigen::Index>(i * n / max_pixels));
  return out;
}

double kmeans_objective(const Points3d& pixels, const Points3d& centers) {
  return assign(pixels, centers).objective;
}

ColorPalette kmeans_colors(const PixelSet& pixels, const KMeansOptions& options) {
  if (options.k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  if (pixels.size() < options.k)
    fail(ErrorCode::TooFewPixels, std::to_string(pixels.size()) + " pixels for k=" + std::to_string(options.k));
  if (options.max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");

  detail::PortableRng rng(options.seed);
  const Points3d& x = pixels.colors;
  const int k = options.k;
  Points3d centers = seed_plus_plus(x, k, rng);

  ColorPalette palette;
  palette.k = k;
  for (int it = 0; it < options.max_iters; ++it) {
    Assignment a = assign(x, centers);
    palette.objective_history.push_back(a.objective);
    palette.iterations = it + 1;

    Points3d next(k, 3);
    std::vector<Eigen::Index> empty;
    for (int c = 0; c < k; ++c) {
      if (a.counts[static_cast<std::size_t>(c)] == 0)
        empty.push_back(c);
      else
        next.row(c) = a.sums.row(c) / static_cast<double>(a.counts[static_cast<std::size_t>(c)]);
    }

    if (!empty.empty()) {
      // Re-seed each empty cluster at the farthest remaining pixel.
      std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      const std::size_t m = std::min(empty.size(), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                        [&](Eigen::Index i, Eigen::Index j) {
                          const double di = a.distances[static_cast<std::size_t>(i)];
                          const double dj = a.distances[static_cast<std::size_t>(j)];
                          return di != dj ? di > dj : i < j;
                        });
      for (std::size_t e = 0; e < empty.size(); ++e) next.row(empty[e]) = x.row(order[e % m]);
    }

    double movement = 0.0;
    for (int c = 0; c < k; ++c) movement = std::max(movement, (next.row(c) - centers.row(c)).norm());
    centers = next;
    if (movement < options.tol) {
      palette.converged = true;
      palette.sizes = std::move(a.counts);
      break;
    }
  }

  if (!palette.converged) palette.sizes = assign(x, centers).counts;
  palette.centers = centers;
  return palette;
}

Vector3u8 quantize_color(const Eigen::Vector3d& rgb) {
  Vector3u8 out;
  for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::clamp(std::floor(rgb[c] + 0.5), 0.0, 255.0));
  return out;
}

Colors3u8 assign_initial_colors(std::size_t n_points, const ColorPalette& palette, std::uint64_t seed,
                                ColorAssignment mode) {
  const Eigen::Index k = palette.centers.rows();
  if (k < 1) fail(ErrorCode::InvalidArgument, "palette is empty");
  std::vector<Vector3u8> quantized;
  for (Eigen::Index c = 0; c < k; ++c) quantized.push_back(quantize_color(palette.centers.row(c).transpose()));

  detail::PortableRng rng(seed);
  Colors3u8 colors(static_cast<Eigen::Index>(n_points), 3);
  if (mode == ColorAssignment::SingleColor) {
    if (n_points > 0) colors.rowwise() = quantized[rng.below(static_cast<std::uint64_t>(k))].transpose();
    return colors;
  }
  for (std::size_t i = 0; i < n_points; ++i)
    colors.row(static_cast<Eigen::Index>(i)) = quantized[rng.below(static_cast<std::uint64_t>(k))].transpose();
  return colors;
}

}  // namespace meshsplat
