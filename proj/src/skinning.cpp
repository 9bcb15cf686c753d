#include "gausskin/skinning.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>

#include "gausskin/errors.hpp"
#include "gausskin/parallel.hpp"

namespace gausskin {

const char* to_string(SkinningMode mode) {
    switch (mode) {
        case SkinningMode::kLbsRotation: return "lbs";
        case SkinningMode::kQuatAverage: return "quat-avg";
        case SkinningMode::kQuatAverageNoSh: return "quat-avg-nosh";
        case SkinningMode::kViewdirCanonical: return "viewdir";
        case SkinningMode::kPositionOnly: return "position-only";
    }
    return "?";
}

SkinningMode skinning_mode_from_string(const std::string& name) {
    if (name == "lbs") return SkinningMode::kLbsRotation;
    if (name == "quat-avg") return SkinningMode::kQuatAverage;
    if (name == "quat-avg-nosh") return SkinningMode::kQuatAverageNoSh;
    if (name == "viewdir") return SkinningMode::kViewdirCanonical;
    if (name == "position-only") return SkinningMode::kPositionOnly;
    throw UsageError("unknown skinning mode \"" + name +
                     "\" (expected lbs | quat-avg | quat-avg-nosh | viewdir | position-only)");
}

Mat4 blend_transforms(std::span<const RigidTransform> transforms,
                      std::span<const std::uint32_t> joints, std::span<const double> weights) {
    Mat4 out;
    for (std::size_t k = 0; k < joints.size(); ++k) {
        const RigidTransform& t = transforms[joints[k]];
        const double w = weights[k];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.m[i][j] += w * t.rotation.m[i][j];
        out.m[0][3] += w * t.translation.x;
        out.m[1][3] += w * t.translation.y;
        out.m[2][3] += w * t.translation.z;
        out.m[3][3] += w;
    }
    return out;
}

std::vector<Vec3> skin_positions(const GaussianCloud& cloud, const SkinWeights& weights,
                                 std::span<const RigidTransform> transforms) {
    if (weights.size() != cloud.size())
        throw DataError("weights cover " + std::to_string(weights.size()) + " gaussians, cloud has " +
                        std::to_string(cloud.size()));
    std::vector<Vec3> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Mat4 blended = blend_transforms(transforms, weights.row_joints(i), weights.row_weights(i));
        const float* p = &cloud.positions[3 * i];
        out[i] = blended.transform_point({p[0], p[1], p[2]});
    }
    return out;
}

UnitQuaternion skin_rotation_lbs(const Mat4& blended, const UnitQuaternion& q_canonical) {
    // The quaternion is read straight off the non-orthogonal blend, as naive
    // LBS pipelines do. A polar (nearest-rotation) cleanup would instead
    // reproduce the quaternion average exactly and erase the baseline.
    return quat_compose(quat_from_blend(blended.upper3x3()), q_canonical);
}

UnitQuaternion skin_rotation_avg(std::span<const UnitQuaternion> bones,
                                 std::span<const std::uint32_t> joints,
                                 std::span<const double> weights,
                                 const UnitQuaternion& q_canonical, const SolverConfig& solver) {
    SymMatrix4 a;
    double total = 0.0;
    std::size_t max_k = 0;
    for (std::size_t k = 0; k < joints.size(); ++k) {
        if (weights[k] < 0.0) throw DataError("negative skinning weight");
        if (weights[k] == 0.0) continue;
        a.add_scaled_outer(bones[joints[k]], weights[k]);
        total += weights[k];
        if (weights[k] > weights[max_k]) max_k = k;
    }
    if (total <= 0.0) throw DataError("all skinning weights are zero (degenerate binding)");

    const UnitQuaternion avg =
        solver.kind == SolverConfig::Kind::kExact
            ? max_eigenvector_exact(a)
            : max_eigenvector_power(a, bones[joints[max_k]], solver.iterations);
    return quat_compose(avg, q_canonical);
}

ShCoefficients skin_sh(const ShCoefficients& canonical, const UnitQuaternion& q_avg) {
    if (q_avg.is_identity()) return canonical;
    return rotate_sh(canonical, quat_to_matrix(q_avg));
}

Vec3 canonicalize_viewdir(const Vec3& view_direction, const RotationMatrix& blended_rotation) {
    bool is_identity = true;
    for (int i = 0; i < 3 && is_identity; ++i)
        for (int j = 0; j < 3; ++j)
            if (blended_rotation.m[i][j] != (i == j ? 1.0 : 0.0)) {
                is_identity = false;
                break;
            }
    if (is_identity) return view_direction; // keeps the rest pose bit-exact
    return normalized(transpose(blended_rotation.m) * view_direction);
}

PosedCloud skin_cloud(const GaussianCloud& cloud, const SkinWeights& weights,
                      const Skeleton& skeleton, const Pose& pose, SkinningMode mode,
                      const SolverConfig& solver, int workers) {
    if (weights.size() != cloud.size())
        throw DataError("weights cover " + std::to_string(weights.size()) + " gaussians, cloud has " +
                        std::to_string(cloud.size()));
    if (weights.joint_count != skeleton.joint_count())
        throw DataError("weights reference " + std::to_string(weights.joint_count) +
                        " joints, skeleton has " + std::to_string(skeleton.joint_count()));
    if (workers <= 0) workers = default_worker_count();

    const std::vector<RigidTransform> transforms = skinning_transforms(skeleton, pose);
    std::vector<UnitQuaternion> bone_quats(transforms.size());
    for (std::size_t j = 0; j < transforms.size(); ++j)
        bone_quats[j] = matrix_to_quat(transforms[j].rotation);

    const std::size_t n = cloud.size();
    PosedCloud posed;
    posed.mode = mode;
    posed.positions.resize(n);
    posed.rotations.resize(n);
    posed.scales.resize(n);
    posed.opacities.resize(n);
    posed.sh.resize(n);
    if (mode == SkinningMode::kViewdirCanonical) posed.view_canonicalization.resize(n);
    std::vector<double> det_deviation(n);

    // First failing Gaussian wins; workers race only on strictly smaller
    // indices so the reported error is deterministic.
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = n;

    parallel_for(0, n, workers, [&](std::size_t i) {
        try {
            const ActivatedGaussian g = activate(cloud, i);
            const auto row_joints = weights.row_joints(i);
            const auto row_weights = weights.row_weights(i);
            const Mat4 blended = blend_transforms(transforms, row_joints, row_weights);

            posed.positions[i] = blended.transform_point(g.position);
            posed.scales[i] = g.scale;
            posed.opacities[i] = g.opacity;
            det_deviation[i] = std::abs(det(blended.upper3x3()) - 1.0);

            switch (mode) {
                case SkinningMode::kPositionOnly:
                    posed.rotations[i] = g.rotation;
                    posed.sh[i] = g.sh;
                    break;
                case SkinningMode::kQuatAverage:
                case SkinningMode::kQuatAverageNoSh: {
                    SymMatrix4 a;
                    double total = 0.0;
                    std::size_t max_k = 0;
                    for (std::size_t k = 0; k < row_joints.size(); ++k) {
                        if (row_weights[k] == 0.0) continue;
                        a.add_scaled_outer(bone_quats[row_joints[k]], row_weights[k]);
                        total += row_weights[k];
                        if (row_weights[k] > row_weights[max_k]) max_k = k;
                    }
                    if (total <= 0.0) throw DataError("all weights zero");
                    const UnitQuaternion avg =
                        solver.kind == SolverConfig::Kind::kExact
                            ? max_eigenvector_exact(a)
                            : max_eigenvector_power(a, bone_quats[row_joints[max_k]],
                                                    solver.iterations);
                    posed.rotations[i] = quat_compose(avg, g.rotation);
                    posed.sh[i] =
                        mode == SkinningMode::kQuatAverage ? skin_sh(g.sh, avg) : g.sh;
                    break;
                }
                case SkinningMode::kLbsRotation: {
                    const UnitQuaternion lbs = quat_from_blend(blended.upper3x3());
                    posed.rotations[i] = quat_compose(lbs, g.rotation);
                    posed.sh[i] = skin_sh(g.sh, lbs);
                    break;
                }
                case SkinningMode::kViewdirCanonical: {
                    const UnitQuaternion lbs = quat_from_blend(blended.upper3x3());
                    posed.rotations[i] = quat_compose(lbs, g.rotation);
                    posed.sh[i] = g.sh;
                    posed.view_canonicalization[i] = lbs;
                    break;
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < first_error_index) {
                first_error_index = i;
                first_error = std::current_exception();
            }
        }
    });

    if (first_error) {
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            throw DataError("skinning failed at gaussian " + std::to_string(first_error_index) +
                            ": " + e.what());
        }
    }

    double acc = 0.0;
    for (double d : det_deviation) acc += d;
    posed.mean_abs_det_minus_one = n > 0 ? acc / n : 0.0;
    return posed;
}

GaussianCloud posed_to_cloud(const PosedCloud& posed) {
    GaussianCloud cloud;
    const std::size_t n = posed.size();
    cloud.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        float* p = &cloud.positions[3 * i];
        p[0] = static_cast<float>(posed.positions[i].x);
        p[1] = static_cast<float>(posed.positions[i].y);
        p[2] = static_cast<float>(posed.positions[i].z);
        float* r = &cloud.rotations[4 * i];
        r[0] = static_cast<float>(posed.rotations[i].w);
        r[1] = static_cast<float>(posed.rotations[i].x);
        r[2] = static_cast<float>(posed.rotations[i].y);
        r[3] = static_cast<float>(posed.rotations[i].z);
        float* s = &cloud.log_scales[3 * i];
        s[0] = static_cast<float>(std::log(posed.scales[i].x));
        s[1] = static_cast<float>(std::log(posed.scales[i].y));
        s[2] = static_cast<float>(std::log(posed.scales[i].z));
        cloud.opacity_logits[i] = static_cast<float>(logit(posed.opacities[i]));
        float* sh = &cloud.sh[48 * i];
        for (int k = 0; k < 16; ++k)
            for (int ch = 0; ch < 3; ++ch)
                sh[k * 3 + ch] = static_cast<float>(posed.sh[i].c[k][ch]);
    }
    return cloud;
}

} // namespace gausskin
