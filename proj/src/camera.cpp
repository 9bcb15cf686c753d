#include "gausskin/camera.hpp"

#include <fstream>

#include <json.hpp>

#include "gausskin/errors.hpp"

namespace gausskin {

using nlohmann::json;

Camera Camera::look_at(const Vec3& eye, const Vec3& target, int width, int height,
                       double focal_px, const Vec3& world_up) {
    const Vec3 forward = normalized(target - eye);
    const Vec3 right = normalized(cross(forward, world_up));
    const Vec3 down = cross(forward, right); // +y down in camera space

    Mat3 r;
    r.m[0][0] = right.x;
    r.m[0][1] = right.y;
    r.m[0][2] = right.z;
    r.m[1][0] = down.x;
    r.m[1][1] = down.y;
    r.m[1][2] = down.z;
    r.m[2][0] = forward.x;
    r.m[2][1] = forward.y;
    r.m[2][2] = forward.z;

    Camera cam;
    cam.view.rotation = RotationMatrix::checked(r);
    cam.view.translation = -(cam.view.rotation * eye);
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = focal_px;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    return cam;
}

Camera load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("version") || doc["version"] != "gausskin-cam/1")
        throw IoError(path + ": version: expected \"gausskin-cam/1\"");

    Camera cam;
    try {
        cam.width = doc.at("width").get<int>();
        cam.height = doc.at("height").get<int>();
        cam.fx = doc.at("fx").get<double>();
        cam.fy = doc.at("fy").get<double>();
        cam.cx = doc.at("cx").get<double>();
        cam.cy = doc.at("cy").get<double>();
        cam.near_plane = doc.at("near").get<double>();
        cam.far_plane = doc.at("far").get<double>();
        const json& view = doc.at("view");
        const json& r = view.at("rotation");
        if (!r.is_array() || r.size() != 3)
            throw IoError(path + ": view.rotation: expected a 3x3 row-major matrix");
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m.m[i][j] = r.at(i).at(j).get<double>();
        cam.view.rotation = RotationMatrix::checked(m);
        const json& t = view.at("translation");
        cam.view.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (cam.width < 1 || cam.height < 1) throw IoError(path + ": width/height: must be >= 1");
    if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) throw IoError(path + ": fx/fy: must be positive");
    if (!(cam.near_plane > 0.0) || !(cam.far_plane > cam.near_plane))
        throw IoError(path + ": near/far: need 0 < near < far");
    return cam;
}

void save_camera(const Camera& camera, const std::string& path) {
    const auto& m = camera.view.rotation.m.m;
    const json rotation = {{m[0][0], m[0][1], m[0][2]},
                           {m[1][0], m[1][1], m[1][2]},
                           {m[2][0], m[2][1], m[2][2]}};
    const json doc = {{"version", "gausskin-cam/1"},
                      {"width", camera.width},
                      {"height", camera.height},
                      {"fx", camera.fx},
                      {"fy", camera.fy},
                      {"cx", camera.cx},
                      {"cy", camera.cy},
                      {"near", camera.near_plane},
                      {"far", camera.far_plane},
                      {"view",
                       {{"rotation", rotation},
                        {"translation",
                         {camera.view.translation.x, camera.view.translation.y,
                          camera.view.translation.z}}}}};
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError(path + ": write failed");
}

} // namespace gausskin
