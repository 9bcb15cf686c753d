#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/rig.hpp"
#include "gausskin/rotation.hpp"
#include "gausskin/sh.hpp"

namespace gausskin {

// Rotation-handling strategy for posing a cloud. Positions always deform by
// linear transform blending; the modes differ in how rotation and SH travel.
enum class SkinningMode {
    kLbsRotation,      // orthonormalized blend rotation (the improper baseline)
    kQuatAverage,      // weighted quaternion average + SH rotation
    kQuatAverageNoSh,  // weighted quaternion average, SH left canonical
    kViewdirCanonical, // LBS rotation; SH evaluated with canonicalized view dirs
    kPositionOnly,     // rotation and SH left canonical
};

const char* to_string(SkinningMode mode);
SkinningMode skinning_mode_from_string(const std::string& name);

struct SolverConfig {
    enum class Kind { kExact, kPower };
    Kind kind = Kind::kPower;
    int iterations = 15;

    static SolverConfig exact() { return {Kind::kExact, 0}; }
    static SolverConfig power(int iterations = 15) { return {Kind::kPower, iterations}; }
};

// Activated, deformed cloud. Scale and opacity are rotation invariant and
// pass through activation bit-identically in every mode.
struct PosedCloud {
    SkinningMode mode = SkinningMode::kQuatAverage;
    std::vector<Vec3> positions;
    std::vector<UnitQuaternion> rotations;
    std::vector<Vec3> scales;
    std::vector<double> opacities;
    std::vector<ShCoefficients> sh;
    // Per-Gaussian direction transport for kViewdirCanonical; empty otherwise.
    std::vector<UnitQuaternion> view_canonicalization;
    // Mean |det - 1| of the unorthonormalized blended matrices: the measure
    // of how far linear blending strays from a valid rotation on this pose.
    double mean_abs_det_minus_one = 0.0;

    std::size_t size() const { return positions.size(); }
};

// Entrywise weighted sum of the homogeneous bone matrices for one weight row.
Mat4 blend_transforms(std::span<const RigidTransform> transforms,
                      std::span<const std::uint32_t> joints, std::span<const double> weights);

std::vector<Vec3> skin_positions(const GaussianCloud& cloud, const SkinWeights& weights,
                                 std::span<const RigidTransform> transforms);

// Improper-baseline rotation: the quaternion read off the blended upper 3x3
// (which is generally not a rotation), composed onto the canonical rotation.
UnitQuaternion skin_rotation_lbs(const Mat4& blended, const UnitQuaternion& q_canonical);

// Weighted quaternion average of the active bones' rotations, composed onto
// the canonical rotation; always a valid unit rotation by construction.
UnitQuaternion skin_rotation_avg(std::span<const UnitQuaternion> bones,
                                 std::span<const std::uint32_t> joints,
                                 std::span<const double> weights,
                                 const UnitQuaternion& q_canonical, const SolverConfig& solver);

// Rotates the SH coefficients by the skinned rotation; DC untouched.
ShCoefficients skin_sh(const ShCoefficients& canonical, const UnitQuaternion& q_avg);

// R^T * direction, renormalized.
Vec3 canonicalize_viewdir(const Vec3& view_direction, const RotationMatrix& blended_rotation);

// Full per-pose deformation; a parallel map over Gaussians whose output is
// independent of worker count. Per-Gaussian failures abort with the first
// failing index.
PosedCloud skin_cloud(const GaussianCloud& cloud, const SkinWeights& weights,
                      const Skeleton& skeleton, const Pose& pose, SkinningMode mode,
                      const SolverConfig& solver, int workers = 0);

// Inverse of activation for writing a posed cloud back to raw PLY storage.
GaussianCloud posed_to_cloud(const PosedCloud& posed);

} // namespace gausskin
