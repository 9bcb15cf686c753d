#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gausskin/math.hpp"
#include "gausskin/rotation.hpp"
#include "gausskin/sh.hpp"

namespace gausskin {

// Structure-of-arrays canonical splat cloud holding the raw (pre-activation)
// parameters exactly as stored on disk: float32, log scales, opacity logits,
// unnormalized quaternions. SH layout per Gaussian: 16 coefficients x 3
// channels, coefficient-major (c[k][ch] at offset k*3 + ch).
struct GaussianCloud {
    std::vector<float> positions;      // 3 per Gaussian
    std::vector<float> rotations;      // 4 per Gaussian, (w, x, y, z)
    std::vector<float> log_scales;     // 3 per Gaussian
    std::vector<float> opacity_logits; // 1 per Gaussian
    std::vector<float> sh;             // 48 per Gaussian

    std::size_t size() const { return opacity_logits.size(); }
    void resize(std::size_t n);
};

// One Gaussian with activations applied: scale = exp, opacity = sigmoid,
// rotation normalized and canonicalized.
struct ActivatedGaussian {
    Vec3 position;
    UnitQuaternion rotation;
    Vec3 scale;     // componentwise positive
    double opacity; // in (0, 1)
    ShCoefficients sh;
};

// Throws DataError (naming the index) on a zero raw quaternion.
ActivatedGaussian activate(const GaussianCloud& cloud, std::size_t index);

// Sigma = R diag(scale)^2 R^T; symmetric PSD with eigenvalues scale^2.
Mat3 covariance3d(const UnitQuaternion& q, const Vec3& scale);

// Spatially varying opacity alpha * exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)).
double density_at(const ActivatedGaussian& g, const Vec3& x);

// Binary little-endian PLY in the standard splat layout: x,y,z, nx,ny,nz,
// f_dc_0..2, f_rest_0..44 (channel-grouped), opacity, scale_0..2, rot_0..3.
// write/read round trips are bitwise on the stored fields; the reader skips
// unknown scalar properties. IoError messages distinguish missing
// properties, non-float32 storage, and header/body length mismatches.
GaussianCloud ply_read(const std::string& path);
void ply_write(const GaussianCloud& cloud, const std::string& path);

} // namespace gausskin
