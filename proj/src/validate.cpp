#include "gausskin/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "gausskin/fixture.hpp"
#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/metrics.hpp"
#include "gausskin/raster.hpp"
#include "gausskin/sh.hpp"
#include "gausskin/skinning.hpp"

namespace gausskin {

namespace {

constexpr double kPi = 3.14159265358979323846;

UnitQuaternion random_quat(Rng& rng) {
    return UnitQuaternion::normalized(rng.normal(), rng.normal(), rng.normal(), rng.normal());
}

SuiteResult eigensolver_suite(std::uint64_t seed) {
    SuiteResult r{"eigensolver-cross-check", 0.0, 1e-3, false,
                  "power(15, warm start) vs exact Jacobi, 2000 instances"};
    Rng rng(seed);
    for (int n = 0; n < 2000; ++n) {
        const AverageInstance inst = random_average_instance(rng);
        const SymMatrix4 a = build_average_matrix(inst.bones, inst.weights);
        const UnitQuaternion exact = max_eigenvector_exact(a);
        const UnitQuaternion approx = max_eigenvector_power(a, inst.bones[inst.warm_start], 15);
        r.max_error = std::max(r.max_error, angular_distance(exact, approx));
    }
    r.passed = r.max_error <= r.tolerance;
    return r;
}

SuiteResult sh_equivariance_suite(std::uint64_t seed) {
    SuiteResult r{"sh-sampling-equivariance", 0.0, 1e-6, false,
                  "f_rot(d) vs f(R^T d) over 200 coefficient/rotation draws x 50 directions"};
    Rng rng(seed ^ 0x5bd1e995);
    for (int n = 0; n < 200; ++n) {
        ShCoefficients s;
        for (int k = 0; k < 16; ++k)
            for (int ch = 0; ch < 3; ++ch) s.c[k][ch] = rng.uniform(-0.3, 0.3);
        const RotationMatrix rot = quat_to_matrix(random_quat(rng));
        const ShCoefficients rotated = rotate_sh(s, rot);
        const RotationMatrix rt = rot.transposed();
        for (int k = 0; k < 50; ++k) {
            const Vec3 d = rng.unit_vector();
            const Vec3 lhs = sh_eval_color(rotated, d);
            const Vec3 rhs = sh_eval_color(s, rt * d);
            r.max_error = std::max({r.max_error, std::abs(lhs.x - rhs.x), std::abs(lhs.y - rhs.y),
                                    std::abs(lhs.z - rhs.z)});
        }
    }
    r.passed = r.max_error <= r.tolerance;
    return r;
}

SuiteResult rigid_equivariance_suite(std::uint64_t seed, int workers) {
    SuiteResult r{"rigid-equivariance", 0.0, 1e-5, false,
                  "render of a rigidly posed fixture vs the moved camera, 5 motions"};
    const TestFixture fx = make_test_rig(3, 24, 24, seed);
    const Camera cam = make_fixture_camera(fx.skeleton, 256, 256);
    Rng rng(seed ^ 0xc2b2ae35);

    const Pose rest = Pose::rest(fx.skeleton.joint_count());
    const PosedCloud rest_posed =
        skin_cloud(fx.cloud, fx.weights, fx.skeleton, rest, SkinningMode::kQuatAverage,
                   SolverConfig::exact(), workers);

    for (int n = 0; n < 5; ++n) {
        const UnitQuaternion g_rot =
            UnitQuaternion::from_axis_angle(rng.unit_vector(), rng.uniform(0.2, kPi));
        const Vec3 g_t{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};

        Pose moved = rest;
        moved.rotations[0] = g_rot;
        moved.root_translation = g_t;
        const PosedCloud posed =
            skin_cloud(fx.cloud, fx.weights, fx.skeleton, moved, SkinningMode::kQuatAverage,
                       SolverConfig::exact(), workers);
        const FrameBuffer lhs = render(posed, cam, workers);

        Camera follow = cam;
        follow.view = cam.view * RigidTransform{quat_to_matrix(g_rot), g_t};
        const FrameBuffer rhs = render(rest_posed, follow, workers);
        r.max_error = std::max(r.max_error, mean_abs_difference(lhs, rhs));
    }
    r.passed = r.max_error <= r.tolerance;
    return r;
}

SuiteResult ply_roundtrip_suite(std::uint64_t seed) {
    SuiteResult r{"ply-roundtrip", 0.0, 0.0, false, "bitwise write/read stability, 20k gaussians"};
    Rng rng(seed ^ 0x27d4eb2f);
    GaussianCloud cloud;
    const std::size_t n = 20000;
    cloud.resize(n);
    for (float& v : cloud.positions) v = static_cast<float>(rng.uniform(-2.0, 2.0));
    for (float& v : cloud.rotations) v = static_cast<float>(rng.normal());
    for (float& v : cloud.log_scales) v = static_cast<float>(rng.uniform(-6.0, 0.0));
    for (float& v : cloud.opacity_logits) v = static_cast<float>(rng.uniform(-4.0, 4.0));
    for (float& v : cloud.sh) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "gausskin_validate_roundtrip.ply";
    ply_write(cloud, path.string());
    const GaussianCloud back = ply_read(path.string());
    std::filesystem::remove(path);

    const bool equal = back.positions == cloud.positions && back.rotations == cloud.rotations &&
                       back.log_scales == cloud.log_scales &&
                       back.opacity_logits == cloud.opacity_logits && back.sh == cloud.sh;
    r.max_error = equal ? 0.0 : 1.0;
    r.passed = equal;
    return r;
}

} // namespace

AverageInstance random_average_instance(Rng& rng, int max_joints, int max_active) {
    const int joints = 2 + static_cast<int>(rng.index(std::max(1, max_joints - 1)));
    std::vector<UnitQuaternion> chain(joints);
    UnitQuaternion acc = UnitQuaternion::identity();
    for (int j = 0; j < joints; ++j) {
        const double angle = rng.uniform(0.0, 50.0 * kPi / 180.0);
        acc = quat_compose(acc, UnitQuaternion::from_axis_angle(rng.unit_vector(), angle));
        chain[j] = acc;
    }

    AverageInstance inst;
    const int active = 1 + static_cast<int>(rng.index(std::min(max_active, joints)));
    const int start = static_cast<int>(rng.index(joints - active + 1));
    std::vector<double> raw(active);
    double total = 0.0;
    for (int k = 0; k < active; ++k) {
        raw[k] = rng.uniform(0.05, 1.0);
        total += raw[k];
    }
    std::size_t max_k = 0;
    for (int k = 1; k < active; ++k)
        if (raw[k] > raw[max_k]) max_k = k;
    for (int k = 0; k < active; ++k) {
        inst.bones.push_back(chain[start + k]);
        inst.weights.push_back(raw[k] / total);
    }
    inst.warm_start = max_k;
    return inst;
}

std::vector<SuiteResult> run_validation_suites(std::uint64_t seed, int workers) {
    std::vector<SuiteResult> results;
    results.push_back(eigensolver_suite(seed));
    results.push_back(sh_equivariance_suite(seed));
    results.push_back(rigid_equivariance_suite(seed, workers));
    results.push_back(ply_roundtrip_suite(seed));
    return results;
}

} // namespace gausskin
