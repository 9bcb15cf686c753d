#pragma once

#include <cstdint>

#include "gausskin/camera.hpp"
#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/rig.hpp"

namespace gausskin {

// Desk-scale test fixture: a vertical bone chain wrapped in rings of
// Gaussians, with weights interpolated between the two nearest joints.
struct TestFixture {
    Skeleton skeleton;
    SkinWeights weights;
    GaussianCloud cloud;
};

// Deterministic for a given seed. Weight fractions are quantized to the
// 1/256 grid so every row sums to exactly 1.0 in double arithmetic.
TestFixture make_test_rig(int bones, int gaussians_per_ring, int rings, std::uint64_t seed = 7);

// Looping twist-and-sway clip over the chain; deterministic for a seed.
AnimationClip make_test_clip(const Skeleton& skeleton, int frame_count, double frame_rate,
                             std::uint64_t seed = 7);

// Static pose twisting every non-root joint by `degrees` about the chain
// axis; the region between joints blends strongly differing bone rotations.
Pose make_twist_pose(const Skeleton& skeleton, double degrees);

// Camera framing the fixture chain.
Camera make_fixture_camera(const Skeleton& skeleton, int width, int height);

} // namespace gausskin
