#pragma once

#include <cstddef>

#include "gausskin/raster.hpp"

namespace gausskin {

struct MetricReport {
    double psnr = 0.0; // dB; +infinity for identical images
    double ssim = 0.0; // in [-1, 1]
    std::size_t pixel_count = 0;
};

// Peak signal-to-noise ratio with unit peak, computed in linear [0,1] float
// space: 10*log10(1/MSE). Identical images return +infinity.
double psnr(const FrameBuffer& a, const FrameBuffer& b);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1, averaged over the valid region and channels.
// ssim(a, a) == 1.0 exactly. Requires min(width, height) >= 11.
double ssim(const FrameBuffer& a, const FrameBuffer& b);

MetricReport compare_images(const FrameBuffer& a, const FrameBuffer& b);

// Mean absolute per-channel difference (used by the equivariance checks).
double mean_abs_difference(const FrameBuffer& a, const FrameBuffer& b);

} // namespace gausskin
