#pragma once

#include <string>

#include "gausskin/raster.hpp"

namespace gausskin {

// sRGB transfer function (IEC 61966-2-1) applied at export only; the
// pipeline stays in linear light.
double linear_to_srgb(double linear);

// 8-bit RGB PNG with fixed deflate settings, so identical framebuffers
// produce identical bytes.
void write_png(const FrameBuffer& fb, const std::string& path);

// 8-bit grayscale PNG of the accumulated alpha (no gamma).
void write_mask_png(const FrameBuffer& fb, const std::string& path);

} // namespace gausskin
