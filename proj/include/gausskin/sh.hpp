#pragma once

#include <array>
#include <utility>
#include <vector>

#include "gausskin/math.hpp"
#include "gausskin/rotation.hpp"

namespace gausskin {

// Third-order real spherical harmonics coefficients, 16 per color channel.
// Index layout: 0 = l0; 1-3 = l1; 4-8 = l2; 9-15 = l3. Channel order RGB.
struct ShCoefficients {
    double c[16][3] = {};
};

// Rotation operators for the l = 1..3 coefficient slices. Each block is
// orthogonal with determinant +1.
struct WignerBlocks {
    double d1[3][3];
    double d2[5][5];
    double d3[7][7];
};

// Real SH basis values in the 3DGS rasterizer convention (band signs and
// component order match the standard splat-file layout; basis[0] is the
// constant 0.28209479177387814). `direction` must be normalized.
std::array<double, 16> sh_basis(const Vec3& direction);

// Per channel: dot(basis, coefficients) + 0.5, clamped below at zero.
Vec3 sh_eval_color(const ShCoefficients& coeffs, const Vec3& direction);

// Blocks for rotating coefficients so that the expanded function f satisfies
// f_rotated(d) = f(R^T d): the color lobe moves with a body rotating by R.
// l = 1 comes directly from R in the real-SH component order; l = 2, 3 follow
// by recursion from the previous band.
WignerBlocks wigner_blocks(const RotationMatrix& r);

// Applies the blocks bandwise; the l0 term is rotation invariant. Preserves
// each band's Euclidean norm.
ShCoefficients rotate_sh(const ShCoefficients& coeffs, const RotationMatrix& r);
ShCoefficients rotate_sh(const ShCoefficients& coeffs, const WignerBlocks& blocks);

// Least-squares fit of coefficients to sampled colors (the inverse of
// sh_eval_color on its unclamped range). Needs >= 16 samples whose normal
// equations are conditioned better than 1e6; throws DataError otherwise.
ShCoefficients sh_project_from_samples(const std::vector<std::pair<Vec3, Vec3>>& samples);

// Test hook: when enabled, wigner_blocks emits a deliberately wrong l=2
// block so validation suites can prove they catch regressions.
void set_wigner_test_corruption(bool enabled);

} // namespace gausskin
