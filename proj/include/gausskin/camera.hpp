#pragma once

#include <string>

#include "gausskin/rotation.hpp"

namespace gausskin {

// Pinhole camera. `view` maps world to camera space with +z forward and +y
// down (image rows grow downwards); pixels = (fx*X/Z + cx, fy*Y/Z + cy).
struct Camera {
    RigidTransform view;
    double fx = 500.0, fy = 500.0;
    double cx = 256.0, cy = 256.0;
    int width = 512, height = 512;
    double near_plane = 0.01, far_plane = 100.0;

    // Camera position in world coordinates.
    Vec3 center() const {
        const RigidTransform inv = view.inverse();
        return inv.translation;
    }

    static Camera look_at(const Vec3& eye, const Vec3& target, int width, int height,
                          double focal_px, const Vec3& world_up = {0, 0, 1});
};

// Versioned JSON ("gausskin-cam/1"); extrinsic stored as rotation quaternion
// plus translation of the world-to-camera transform.
Camera load_camera(const std::string& path);
void save_camera(const Camera& camera, const std::string& path);

} // namespace gausskin
