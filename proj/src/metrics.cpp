#include "meshsplat/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/Core>

#include "meshsplat/error.hpp"

namespace meshsplat {
namespace {

using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

BoundingBox resolve_box(const RgbImage& a, const RgbImage& b, const std::optional<BoundingBox>& box) {
  if (a.width != b.width || a.height != b.height)
    fail(ErrorCode::DimensionMismatch, "image sizes differ: " + std::to_string(a.width) + "x" +
                                           std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                           std::to_string(b.height));
  if (!box) return {0, 0, a.width, a.height};
  check_bbox(*box, a.width, a.height);
  return *box;
}

Plane channel_plane(const RgbImage& img, const BoundingBox& box, int channel) {
  Plane p(box.height, box.width);
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x) p(y, x) = img.at(box.x + x, box.y + y, channel);
  return p;
}

Plane luma_plane(const RgbImage& img, const BoundingBox& box) {
  Plane p(box.height, box.width);
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x)
      p(y, x) = 0.299 * img.at(box.x + x, box.y + y, 0) + 0.587 * img.at(box.x + x, box.y + y, 1) +
                0.114 * img.at(box.x + x, box.y + y, 2);
  return p;
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable filtering, valid positions only.
Plane filter_valid(const Plane& in, const std::array<double, kSsimWindow>& w) {
  const Eigen::Index oh = in.rows() - kSsimWindow + 1;
  const Eigen::Index ow = in.cols() - kSsimWindow + 1;
  Plane horizontal = Plane::Zero(in.rows(), ow);
  for (int k = 0; k < kSsimWindow; ++k) horizontal += w[static_cast<std::size_t>(k)] * in.middleCols(k, ow);
  Plane out = Plane::Zero(oh, ow);
  for (int k = 0; k < kSsimWindow; ++k) out += w[static_cast<std::size_t>(k)] * horizontal.middleRows(k, oh);
  return out;
}

double ssim_plane(const Plane& a, const Plane& b) {
  const auto w = gaussian_window();
  const double c1 = (kSsimK1 * kPixelRange) * (kSsimK1 * kPixelRange);
  const double c2 = (kSsimK2 * kPixelRange) * (kSsimK2 * kPixelRange);
  const Plane mu_a = filter_valid(a, w);
  const Plane mu_b = filter_valid(b, w);
  const Plane var_a = filter_valid(a * a, w) - mu_a * mu_a;
  const Plane var_b = filter_valid(b * b, w) - mu_b * mu_b;
  const Plane cov = filter_valid(a * b, w) - mu_a * mu_b;
  const Plane num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  const Plane den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return (num / den).mean();
}

}  // namespace

BoundingBox parse_bbox(const std::string& text) {
  BoundingBox box;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(text);
  if (!(in >> box.x >> c1 >> box.y >> c2 >> box.width >> c3 >> box.height) || c1 != ',' || c2 != ',' ||
      c3 != ',')
    fail(ErrorCode::InvalidArgument, "bounding box must be 'x,y,w,h', got '" + text + "'");
  std::string rest;
  if (in >> rest) fail(ErrorCode::InvalidArgument, "trailing text in bounding box '" + text + "'");
  return box;
}

void check_bbox(const BoundingBox& box, int image_width, int image_height) {
  if (box.width < kMinBoxSide || box.height < kMinBoxSide)
    fail(ErrorCode::BoxOutOfBounds, "bounding box sides must be >= 8");
  if (box.x < 0 || box.y < 0 || box.x + box.width > image_width || box.y + box.height > image_height)
    fail(ErrorCode::BoxOutOfBounds, "bounding box exceeds the " + std::to_string(image_width) + "x" +
                                        std::to_string(image_height) + " image");
}

double psnr(const RgbImage& a, const RgbImage& b, const std::optional<BoundingBox>& box) {
  const BoundingBox r = resolve_box(a, b, box);
  double sum = 0.0;
  for (int y = r.y; y < r.y + r.height; ++y)
    for (int x = r.x; x < r.x + r.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
  const double count = 3.0 * r.width * r.height;
  if (count == 0) fail(ErrorCode::TooSmall, "PSNR over an empty region");
  const double mse = sum / count;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPixelRange * kPixelRange / mse);
}

double ssim(const RgbImage& a, const RgbImage& b, const std::optional<BoundingBox>& box, SsimMode mode) {
  const BoundingBox r = resolve_box(a, b, box);
  if (r.width < kSsimWindow || r.height < kSsimWindow)
    fail(ErrorCode::TooSmall, "SSIM needs at least 11x11 pixels");
  if (mode == SsimMode::Luma) return ssim_plane(luma_plane(a, r), luma_plane(b, r));
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += ssim_plane(channel_plane(a, r, c), channel_plane(b, r, c));
  return total / 3.0;
}

std::string format_db(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

}  // namespace meshsplat
