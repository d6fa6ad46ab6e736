#pragma once

#include <optional>
#include <string>

#include "meshsplat/image.hpp"

namespace meshsplat {

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

inline constexpr int kMinBoxSide = 8;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kPixelRange = 255.0;

/// Parses "x,y,w,h".
BoundingBox parse_bbox(const std::string& text);

/// Throws BoxOutOfBounds unless the box lies inside the image with both
/// sides >= 8.
void check_bbox(const BoundingBox& box, int image_width, int image_height);

/// Peak signal-to-noise ratio over all channels of the (cropped) images;
/// +inf for identical inputs.
double psnr(const RgbImage& a, const RgbImage& b, const std::optional<BoundingBox>& box = std::nullopt);

enum class SsimMode { Luma, ChannelMean };

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5) over valid
/// window positions only. Luma uses Rec. 601 weights.
double ssim(const RgbImage& a, const RgbImage& b, const std::optional<BoundingBox>& box = std::nullopt,
            SsimMode mode = SsimMode::Luma);

/// "inf" for +infinity, otherwise fixed 4-decimal text.
std::string format_db(double value);

}  // namespace meshsplat
