#include "gausskin/fixture.hpp"

#include <algorithm>
#include <cmath>

#include "gausskin/errors.hpp"
#include "gausskin/random.hpp"

namespace gausskin {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBoneLength = 0.25;
constexpr double kRingRadius = 0.1;

constexpr double kDcScale = 0.28209479177387814;

} // namespace

TestFixture make_test_rig(int bones, int gaussians_per_ring, int rings, std::uint64_t seed) {
    if (bones < 1) throw UsageError("fixture needs at least one bone");
    if (gaussians_per_ring < 1 || rings < 1)
        throw UsageError("fixture needs at least one ring and one gaussian per ring");

    TestFixture fx;

    std::vector<Joint> joints(bones);
    for (int j = 0; j < bones; ++j) {
        joints[j].name = "bone_" + std::to_string(j);
        joints[j].parent = j - 1;
        joints[j].bind_translation = (j == 0) ? Vec3{0, 0, 0} : Vec3{0, 0, kBoneLength};
    }
    fx.skeleton = Skeleton::create(std::move(joints));

    const int n = gaussians_per_ring * rings;
    fx.cloud.resize(n);
    fx.weights.joint_count = static_cast<std::uint32_t>(bones);

    Rng rng(seed);
    const double top = kBoneLength * std::max(1, bones - 1);
    int i = 0;
    for (int ring = 0; ring < rings; ++ring) {
        const double h = (rings == 1) ? 0.5 * top : top * ring / (rings - 1);
        for (int k = 0; k < gaussians_per_ring; ++k, ++i) {
            const double angle = 2.0 * kPi * k / gaussians_per_ring + rng.uniform(-0.04, 0.04);
            const double radius = kRingRadius * rng.uniform(0.92, 1.08);

            float* pos = &fx.cloud.positions[3 * i];
            pos[0] = static_cast<float>(radius * std::cos(angle));
            pos[1] = static_cast<float>(radius * std::sin(angle));
            pos[2] = static_cast<float>(h + rng.uniform(-0.01, 0.01));

            const UnitQuaternion q = UnitQuaternion::from_axis_angle(rng.unit_vector(),
                                                                     rng.uniform(0.0, kPi));
            float* rot = &fx.cloud.rotations[4 * i];
            rot[0] = static_cast<float>(q.w);
            rot[1] = static_cast<float>(q.x);
            rot[2] = static_cast<float>(q.y);
            rot[3] = static_cast<float>(q.z);

            float* scale = &fx.cloud.log_scales[3 * i];
            for (int a = 0; a < 3; ++a)
                scale[a] = static_cast<float>(std::log(0.016) + rng.uniform(-0.35, 0.35));

            fx.cloud.opacity_logits[i] = static_cast<float>(rng.uniform(1.2, 3.0));

            // Smooth hue over the tube plus a mild view-dependent sheen in
            // the low orders.
            const double hue[3] = {0.5 + 0.32 * std::cos(angle),
                                   0.5 + 0.32 * std::sin(angle + 2.0),
                                   0.45 + 0.3 * (top > 0 ? h / top : 0.5)};
            float* sh = &fx.cloud.sh[48 * i];
            for (int ch = 0; ch < 3; ++ch)
                sh[ch] = static_cast<float>((hue[ch] - 0.5) / kDcScale);
            for (int band = 1; band <= 3; ++band) {
                const double amp = 0.10 / band;
                for (int m = band * band; m < (band + 1) * (band + 1); ++m)
                    for (int ch = 0; ch < 3; ++ch)
                        sh[m * 3 + ch] = static_cast<float>(rng.uniform(-amp, amp));
            }

            // Triangular kernel over the nearby joints. A convex blend of
            // only two rotations has its polar factor equal to the quaternion
            // average, so bindings need a third influence for the rotation
            // modes to be distinguishable at all. Weights are quantized to
            // the 1/256 grid with the dominant one taking the exact
            // complement, making every row sum to exactly 1.0.
            if (bones == 1) {
                const std::uint32_t joint = 0;
                const double weight = 1.0;
                fx.weights.append_row({&joint, 1}, {&weight, 1});
            } else {
                const double s = std::clamp(h / kBoneLength, 0.0, double(bones - 1));
                constexpr double kKernelRadius = 1.75;
                std::vector<std::uint32_t> row_joints;
                std::vector<double> raw;
                double raw_sum = 0.0;
                for (int j = std::max(0, int(std::floor(s - kKernelRadius)));
                     j < bones && j <= int(std::ceil(s + kKernelRadius)); ++j) {
                    const double v = 1.0 - std::abs(s - j) / kKernelRadius;
                    if (v <= 0.0) continue;
                    row_joints.push_back(static_cast<std::uint32_t>(j));
                    raw.push_back(v);
                    raw_sum += v;
                }
                std::size_t dominant = 0;
                for (std::size_t k = 1; k < raw.size(); ++k)
                    if (raw[k] > raw[dominant]) dominant = k;
                std::vector<double> values(raw.size(), 0.0);
                double others = 0.0;
                for (std::size_t k = 0; k < raw.size(); ++k) {
                    if (k == dominant) continue;
                    values[k] = std::round(raw[k] / raw_sum * 256.0) / 256.0;
                    others += values[k];
                }
                values[dominant] = 1.0 - others;
                if (values[dominant] <= 0.0) {
                    values.assign(raw.size(), 0.0);
                    values[dominant] = 1.0;
                }
                std::vector<std::uint32_t> kept_joints;
                std::vector<double> kept_values;
                for (std::size_t k = 0; k < values.size(); ++k) {
                    if (values[k] <= 0.0) continue;
                    kept_joints.push_back(row_joints[k]);
                    kept_values.push_back(values[k]);
                }
                fx.weights.append_row(kept_joints, kept_values);
            }
        }
    }
    return fx;
}

AnimationClip make_test_clip(const Skeleton& skeleton, int frame_count, double frame_rate,
                             std::uint64_t seed) {
    if (frame_count < 1) throw UsageError("clip needs at least one frame");
    if (!(frame_rate > 0.0)) throw UsageError("clip frame rate must be positive");

    const std::size_t joints = skeleton.joint_count();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> twist_amp(joints), bend_amp(joints), phase(joints);
    for (std::size_t j = 0; j < joints; ++j) {
        twist_amp[j] = (j == 0) ? rng.uniform(0.0, 10.0) : rng.uniform(45.0, 75.0);
        bend_amp[j] = rng.uniform(4.0, 14.0);
        phase[j] = rng.uniform(0.0, 2.0 * kPi);
    }

    AnimationClip clip;
    clip.frame_rate = frame_rate;
    clip.joint_count = static_cast<std::uint32_t>(joints);
    clip.frames.reserve(frame_count);
    for (int f = 0; f < frame_count; ++f) {
        const double cycle = 2.0 * kPi * f / frame_count;
        Pose pose;
        pose.time = f / frame_rate;
        // Frame 0 is exactly the rest pose; the loop returns to it.
        pose.root_translation = {0.03 * std::sin(cycle), 0.03 * (1.0 - std::cos(cycle)), 0.0};
        for (std::size_t j = 0; j < joints; ++j) {
            const double twist =
                twist_amp[j] * (std::sin(cycle + phase[j]) - std::sin(phase[j])) * kPi / 180.0;
            const double bend =
                bend_amp[j] * (std::sin(2.0 * cycle + phase[j]) - std::sin(phase[j])) * kPi / 180.0;
            const Vec3 bend_axis = (j % 2) ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            pose.rotations.push_back(
                quat_compose(UnitQuaternion::from_axis_angle({0, 0, 1}, twist),
                             UnitQuaternion::from_axis_angle(bend_axis, bend)));
        }
        clip.frames.push_back(std::move(pose));
    }
    return clip;
}

Pose make_twist_pose(const Skeleton& skeleton, double degrees) {
    // Twist about the chain axis plus bends about alternating lateral axes.
    // Identical per-joint rotations would leave all bone transforms on one
    // one-parameter subgroup (powers of the same rotation), where blends stay
    // coaxial and every rotation mode agrees; alternating the bend axis is
    // what makes the improper baseline measurably diverge.
    Pose pose = Pose::rest(skeleton.joint_count());
    const double twist = degrees * kPi / 180.0;
    for (std::size_t j = 1; j < skeleton.joint_count(); ++j) {
        const Vec3 bend_axis = (j % 2) ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        pose.rotations[j] = quat_compose(UnitQuaternion::from_axis_angle({0, 0, 1}, twist),
                                         UnitQuaternion::from_axis_angle(bend_axis, 0.5 * twist));
    }
    return pose;
}

Camera make_fixture_camera(const Skeleton& skeleton, int width, int height) {
    const double top = kBoneLength * std::max<std::size_t>(1, skeleton.joint_count() - 1);
    const Vec3 target{0, 0, 0.5 * top};
    const Vec3 eye{0.0, -(top + 0.55), 0.5 * top};
    Camera cam = Camera::look_at(eye, target, width, height, 1.1 * std::min(width, height));
    cam.near_plane = 0.05;
    cam.far_plane = 10.0;
    return cam;
}

} // namespace gausskin
