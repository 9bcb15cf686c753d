#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gausskin/rotation.hpp"

namespace gausskin {

struct Joint {
    std::string name;
    int parent = -1; // -1 for roots; otherwise must index an earlier joint
    UnitQuaternion bind_rotation;
    Vec3 bind_translation;

    RigidTransform bind_local() const { return {quat_to_matrix(bind_rotation), bind_translation}; }
};

// Articulated skeleton with derived bind-pose transforms. Immutable after
// construction; safe to share across threads.
struct Skeleton {
    std::vector<Joint> joints;
    std::vector<RigidTransform> bind_world;
    std::vector<RigidTransform> inverse_bind;

    // Validates the joint forest (parents precede children) and derives the
    // bind transforms. Throws DataError on structural problems.
    static Skeleton create(std::vector<Joint> joints);

    std::size_t joint_count() const { return joints.size(); }
};

// Per-joint local rotations plus a world-space root translation.
struct Pose {
    std::vector<UnitQuaternion> rotations;
    Vec3 root_translation;
    double time = 0.0; // seconds

    static Pose rest(std::size_t joint_count) {
        Pose p;
        p.rotations.assign(joint_count, UnitQuaternion::identity());
        return p;
    }
};

struct AnimationClip {
    double frame_rate = 30.0;
    std::uint32_t joint_count = 0;
    std::vector<Pose> frames;
};

// Sparse per-Gaussian skin weights in CSR layout; at most kMaxInfluences
// entries per row, non-negative, rows normalized to sum 1.
struct SkinWeights {
    static constexpr int kMaxInfluences = 8;

    std::uint32_t joint_count = 0;
    std::vector<std::uint32_t> offsets{0}; // size() + 1 entries
    std::vector<std::uint32_t> joints;
    std::vector<double> weights;

    std::size_t size() const { return offsets.size() - 1; }

    void append_row(std::span<const std::uint32_t> joint_ids, std::span<const double> values);

    std::span<const std::uint32_t> row_joints(std::size_t i) const {
        return {joints.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    std::span<const double> row_weights(std::size_t i) const {
        return {weights.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }

    // Scales rows to unit sum, leaving rows already within 1e-12 untouched
    // (so normalized data round-trips bitwise). Returns how many rows were
    // off by more than `warn_tolerance`. Throws DataError on a zero row.
    std::size_t normalize_rows(double warn_tolerance = 1e-5);
};

// World transform per joint: world[j] = world[parent] * rot(pose[j]) * bind_local[j],
// i.e. each pose rotation pivots about its parent joint; roots are further
// offset by the pose's root translation.
std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

// Canonical-to-posed skinning transforms T_j = world[j] * inverse_bind[j],
// computed in cancelled form so the rest pose yields exact identities.
std::vector<RigidTransform> skinning_transforms(const Skeleton& skeleton, const Pose& pose);

// Versioned JSON round trips ("gausskin-rig/1", "gausskin-clip/1",
// "gausskin-weights/1"). Schema violations raise IoError naming the file and
// offending field; weight rows are renormalized on load with a warning.
Skeleton load_rig(const std::string& path);
void save_rig(const Skeleton& skeleton, const std::string& path);
AnimationClip load_clip(const std::string& path);
void save_clip(const AnimationClip& clip, const std::string& path);
SkinWeights load_weights(const std::string& path);
void save_weights(const SkinWeights& weights, const std::string& path);

} // namespace gausskin
