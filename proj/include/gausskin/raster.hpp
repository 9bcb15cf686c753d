#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gausskin/camera.hpp"
#include "gausskin/skinning.hpp"

namespace gausskin {

// Screen-space splat after EWA projection. cov packs the symmetric 2x2 image
// covariance (xx, xy, yy) including the low-pass dilation.
struct Splat2D {
    Vec2 center;      // pixel coordinates
    double cov[3];    // xx, xy, yy
    double depth;     // camera-space z
    Vec3 color;
    double opacity;
    std::uint32_t source_index = 0;
};

// Linear-light RGB render target plus accumulated alpha mask.
struct FrameBuffer {
    int width = 0, height = 0;
    std::vector<double> rgb;   // 3 per pixel, row-major
    std::vector<double> alpha; // 1 per pixel
    Vec3 background;

    FrameBuffer(int w, int h, const Vec3& bg = {0, 0, 0});
    double* pixel(int x, int y) { return &rgb[3 * (std::size_t(y) * width + x)]; }
    const double* pixel(int x, int y) const { return &rgb[3 * (std::size_t(y) * width + x)]; }
};

// EWA projection of one Gaussian: camera-space mean through the pinhole
// model, image covariance J W Sigma W^T J^T with the clamped tangent-plane
// Jacobian, +0.3 low-pass on the diagonal. Returns nullopt when the depth is
// outside (near, far) or the 3-sigma ellipse misses the viewport; color and
// source_index are left for the caller.
std::optional<Splat2D> project(const Vec3& position, const UnitQuaternion& rotation,
                               const Vec3& scale, double opacity, const Camera& cam);

// Ascending camera depth; ties broken by ascending source index, so the
// order is total and independent of the input permutation.
void depth_sort(std::vector<Splat2D>& splats);

// Front-to-back compositing of Eq.-style (color, alpha) contributions with a
// 1e-4 transmittance cutoff; remaining transmittance takes the background.
// Returns the composited color and accumulated alpha.
std::pair<Vec3, double> composite_pixel(std::span<const std::pair<Vec3, double>> contributions,
                                        const Vec3& background);

// Deterministic tiled rasterization (16x16 tiles, global sort order within
// each bin). Output is bitwise independent of `workers`.
FrameBuffer render(const PosedCloud& posed, const Camera& cam, int workers = 0,
                   const Vec3& background = {0, 0, 0});

} // namespace gausskin
