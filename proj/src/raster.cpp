#include "gausskin/raster.hpp"

#include <algorithm>
#include <cmath>

#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/parallel.hpp"

namespace gausskin {

namespace {

constexpr int kTileSize = 16;
constexpr double kLowPass = 0.3;
constexpr double kAlphaCap = 0.999;
constexpr double kAlphaSkip = 1.0 / 255.0;
constexpr double kTransmittanceCutoff = 1e-4;

} // namespace

FrameBuffer::FrameBuffer(int w, int h, const Vec3& bg) : width(w), height(h), background(bg) {
    rgb.assign(std::size_t(3) * w * h, 0.0);
    alpha.assign(std::size_t(w) * h, 0.0);
}

std::optional<Splat2D> project(const Vec3& position, const UnitQuaternion& rotation,
                               const Vec3& scale, double opacity, const Camera& cam) {
    const Vec3 t = cam.view * position;
    if (!(t.z > cam.near_plane && t.z < cam.far_plane)) return std::nullopt;

    // Clamped tangent-plane point for the Jacobian, as in the reference
    // splatting pipeline; the center itself projects unclamped.
    const double lim_x = 1.3 * (0.5 * cam.width / cam.fx);
    const double lim_y = 1.3 * (0.5 * cam.height / cam.fy);
    const double jx = std::clamp(t.x / t.z, -lim_x, lim_x) * t.z;
    const double jy = std::clamp(t.y / t.z, -lim_y, lim_y) * t.z;

    const double inv_z = 1.0 / t.z;
    const double j00 = cam.fx * inv_z;
    const double j02 = -cam.fx * jx * inv_z * inv_z;
    const double j11 = cam.fy * inv_z;
    const double j12 = -cam.fy * jy * inv_z * inv_z;

    const Mat3 cov_world = covariance3d(rotation, scale);
    const Mat3& w = cam.view.rotation.m;
    const Mat3 cov_cam = w * cov_world * transpose(w);

    // Rows of the 2x3 Jacobian: (j00, 0, j02) and (0, j11, j12).
    const double r0[3] = {j00, 0.0, j02};
    const double r1[3] = {0.0, j11, j12};
    double q0[3], q1[3];
    for (int c = 0; c < 3; ++c) {
        q0[c] = r0[0] * cov_cam.m[0][c] + r0[1] * cov_cam.m[1][c] + r0[2] * cov_cam.m[2][c];
        q1[c] = r1[0] * cov_cam.m[0][c] + r1[1] * cov_cam.m[1][c] + r1[2] * cov_cam.m[2][c];
    }

    Splat2D splat;
    splat.cov[0] = q0[0] * r0[0] + q0[1] * r0[1] + q0[2] * r0[2] + kLowPass;
    splat.cov[1] = q0[0] * r1[0] + q0[1] * r1[1] + q0[2] * r1[2];
    splat.cov[2] = q1[0] * r1[0] + q1[1] * r1[1] + q1[2] * r1[2] + kLowPass;
    splat.center = {cam.fx * t.x * inv_z + cam.cx, cam.fy * t.y * inv_z + cam.cy};
    splat.depth = t.z;
    splat.opacity = opacity;

    const double mid = 0.5 * (splat.cov[0] + splat.cov[2]);
    const double disc = std::sqrt(std::max(0.0, mid * mid - (splat.cov[0] * splat.cov[2] -
                                                             splat.cov[1] * splat.cov[1])));
    const double radius = 3.0 * std::sqrt(std::max(1e-12, mid + disc));
    if (splat.center.x + radius < 0.0 || splat.center.x - radius > cam.width ||
        splat.center.y + radius < 0.0 || splat.center.y - radius > cam.height)
        return std::nullopt;
    return splat;
}

void depth_sort(std::vector<Splat2D>& splats) {
    std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });
}

std::pair<Vec3, double> composite_pixel(std::span<const std::pair<Vec3, double>> contributions,
                                        const Vec3& background) {
    Vec3 color{0, 0, 0};
    double transmittance = 1.0;
    for (const auto& [c, a] : contributions) {
        color = color + c * (a * transmittance);
        transmittance *= 1.0 - a;
        if (transmittance < kTransmittanceCutoff) break;
    }
    color = color + background * transmittance;
    return {color, 1.0 - transmittance};
}

FrameBuffer render(const PosedCloud& posed, const Camera& cam, int workers,
                   const Vec3& background) {
    if (workers <= 0) workers = default_worker_count();
    FrameBuffer fb(cam.width, cam.height, background);

    const std::size_t n = posed.size();
    const Vec3 cam_center = cam.center();
    const bool canonicalize = posed.mode == SkinningMode::kViewdirCanonical;

    std::vector<std::optional<Splat2D>> projected(n);
    parallel_for(0, n, workers, [&](std::size_t i) {
        auto splat = project(posed.positions[i], posed.rotations[i], posed.scales[i],
                             posed.opacities[i], cam);
        if (!splat) return;
        Vec3 dir = posed.positions[i] - cam_center;
        const double len = norm(dir);
        dir = len > 0.0 ? dir * (1.0 / len) : Vec3{0, 0, 1};
        if (canonicalize)
            dir = canonicalize_viewdir(dir, quat_to_matrix(posed.view_canonicalization[i]));
        splat->color = sh_eval_color(posed.sh[i], dir);
        splat->source_index = static_cast<std::uint32_t>(i);
        projected[i] = *splat;
    });

    std::vector<Splat2D> splats;
    splats.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (projected[i]) splats.push_back(*projected[i]);
    depth_sort(splats);

    const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
    std::vector<std::vector<std::uint32_t>> bins(std::size_t(tiles_x) * tiles_y);
    for (std::uint32_t s = 0; s < splats.size(); ++s) {
        const Splat2D& sp = splats[s];
        const double mid = 0.5 * (sp.cov[0] + sp.cov[2]);
        const double disc = std::sqrt(
            std::max(0.0, mid * mid - (sp.cov[0] * sp.cov[2] - sp.cov[1] * sp.cov[1])));
        const double radius = 3.0 * std::sqrt(std::max(1e-12, mid + disc));
        const int x0 = std::clamp(int((sp.center.x - radius) / kTileSize), 0, tiles_x - 1);
        const int x1 = std::clamp(int((sp.center.x + radius) / kTileSize), 0, tiles_x - 1);
        const int y0 = std::clamp(int((sp.center.y - radius) / kTileSize), 0, tiles_y - 1);
        const int y1 = std::clamp(int((sp.center.y + radius) / kTileSize), 0, tiles_y - 1);
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx) bins[std::size_t(ty) * tiles_x + tx].push_back(s);
    }

    parallel_for(0, bins.size(), workers, [&](std::size_t tile) {
        const auto& bin = bins[tile];
        const int tx = int(tile % tiles_x);
        const int ty = int(tile / tiles_x);
        const int px0 = tx * kTileSize;
        const int py0 = ty * kTileSize;
        const int px1 = std::min(px0 + kTileSize, cam.width);
        const int py1 = std::min(py0 + kTileSize, cam.height);

        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const double cx = px + 0.5;
                const double cy = py + 0.5;
                Vec3 color{0, 0, 0};
                double transmittance = 1.0;
                for (const std::uint32_t s : bin) {
                    const Splat2D& sp = splats[s];
                    const double det2 = sp.cov[0] * sp.cov[2] - sp.cov[1] * sp.cov[1];
                    const double dx = cx - sp.center.x;
                    const double dy = cy - sp.center.y;
                    const double power = -0.5 *
                                         (sp.cov[2] * dx * dx - 2.0 * sp.cov[1] * dx * dy +
                                          sp.cov[0] * dy * dy) /
                                         det2;
                    if (power > 0.0) continue;
                    const double a = std::min(kAlphaCap, sp.opacity * std::exp(power));
                    if (a < kAlphaSkip) continue;
                    color = color + sp.color * (a * transmittance);
                    transmittance *= 1.0 - a;
                    if (transmittance < kTransmittanceCutoff) break;
                }
                double* out = fb.pixel(px, py);
                out[0] = color.x + background.x * transmittance;
                out[1] = color.y + background.y * transmittance;
                out[2] = color.z + background.z * transmittance;
                fb.alpha[std::size_t(py) * cam.width + px] = 1.0 - transmittance;
            }
        }
    });

    return fb;
}

} // namespace gausskin
