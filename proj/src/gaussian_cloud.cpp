#include "gausskin/gaussian_cloud.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gausskin/errors.hpp"

namespace gausskin {

namespace {

// The on-disk property order; f_rest is channel-grouped (15 l>=1
// coefficients for channel 0, then 1, then 2).
std::vector<std::string> required_properties() {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int k = 0; k < 45; ++k) names.push_back("f_rest_" + std::to_string(k));
    names.emplace_back("opacity");
    for (int k = 0; k < 3; ++k) names.push_back("scale_" + std::to_string(k));
    for (int k = 0; k < 4; ++k) names.push_back("rot_" + std::to_string(k));
    return names;
}

std::size_t ply_type_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
        type == "float32")
        return 4;
    if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
    return 0;
}

struct PropertyRef {
    std::string type;
    std::size_t byte_offset = 0;
};

} // namespace

void GaussianCloud::resize(std::size_t n) {
    positions.resize(3 * n);
    rotations.resize(4 * n);
    log_scales.resize(3 * n);
    opacity_logits.resize(n);
    sh.resize(48 * n);
}

ActivatedGaussian activate(const GaussianCloud& cloud, std::size_t index) {
    ActivatedGaussian g;
    const float* p = &cloud.positions[3 * index];
    g.position = {p[0], p[1], p[2]};
    const float* q = &cloud.rotations[4 * index];
    try {
        g.rotation = UnitQuaternion::normalized(q[0], q[1], q[2], q[3]);
    } catch (const DataError&) {
        throw DataError("gaussian " + std::to_string(index) + ": zero raw quaternion (corrupt asset)");
    }
    const float* s = &cloud.log_scales[3 * index];
    g.scale = {std::exp(double(s[0])), std::exp(double(s[1])), std::exp(double(s[2]))};
    g.opacity = sigmoid(cloud.opacity_logits[index]);
    const float* sh = &cloud.sh[48 * index];
    for (int k = 0; k < 16; ++k)
        for (int ch = 0; ch < 3; ++ch) g.sh.c[k][ch] = sh[k * 3 + ch];
    return g;
}

Mat3 covariance3d(const UnitQuaternion& q, const Vec3& scale) {
    const Mat3 r = quat_to_matrix(q).m;
    const double s2[3] = {scale.x * scale.x, scale.y * scale.y, scale.z * scale.z};
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v =
                r.m[i][0] * s2[0] * r.m[j][0] + r.m[i][1] * s2[1] * r.m[j][1] + r.m[i][2] * s2[2] * r.m[j][2];
            out.m[i][j] = v;
            out.m[j][i] = v;
        }
    return out;
}

double density_at(const ActivatedGaussian& g, const Vec3& x) {
    const Mat3 sigma = covariance3d(g.rotation, g.scale);
    const Vec3 d = x - g.position;

    // Cholesky solve of sigma * y = d; sigma is SPD for positive scales.
    double l[3][3] = {};
    l[0][0] = std::sqrt(sigma.m[0][0]);
    l[1][0] = sigma.m[1][0] / l[0][0];
    l[2][0] = sigma.m[2][0] / l[0][0];
    l[1][1] = std::sqrt(sigma.m[1][1] - l[1][0] * l[1][0]);
    l[2][1] = (sigma.m[2][1] - l[2][0] * l[1][0]) / l[1][1];
    l[2][2] = std::sqrt(sigma.m[2][2] - l[2][0] * l[2][0] - l[2][1] * l[2][1]);

    double z0 = d.x / l[0][0];
    double z1 = (d.y - l[1][0] * z0) / l[1][1];
    double z2 = (d.z - l[2][0] * z0 - l[2][1] * z1) / l[2][2];
    const double mahalanobis_sq = z0 * z0 + z1 * z1 + z2 * z2;
    return g.opacity * std::exp(-0.5 * mahalanobis_sq);
}

GaussianCloud ply_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");

    std::string line;
    if (!std::getline(in, line) || line != "ply") throw IoError(path + ": not a PLY file");

    std::size_t vertex_count = 0;
    bool saw_format = false;
    bool in_vertex_element = false;
    std::vector<std::pair<std::string, PropertyRef>> layout;
    std::size_t stride = 0;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream tokens(line);
        std::string word;
        tokens >> word;
        if (word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string fmt, version;
            tokens >> fmt >> version;
            if (fmt != "binary_little_endian")
                throw IoError(path + ": unsupported format \"" + fmt + "\" (binary_little_endian required)");
            saw_format = true;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            tokens >> name >> count;
            if (name == "vertex") {
                vertex_count = count;
                in_vertex_element = true;
            } else {
                if (count != 0)
                    throw IoError(path + ": unsupported non-empty element \"" + name + "\"");
                in_vertex_element = false;
            }
        } else if (word == "property") {
            if (!in_vertex_element) continue;
            std::string type, name;
            tokens >> type >> name;
            if (type == "list")
                throw IoError(path + ": list property \"" + name + "\" is not supported");
            const std::size_t size = ply_type_size(type);
            if (size == 0) throw IoError(path + ": unknown property type \"" + type + "\"");
            layout.emplace_back(name, PropertyRef{type, stride});
            stride += size;
        } else if (word == "end_header") {
            break;
        }
    }
    if (!saw_format) throw IoError(path + ": missing format declaration");

    // Resolve required properties; they must be float32.
    const std::vector<std::string> required = required_properties();
    std::vector<std::size_t> offsets;
    offsets.reserve(required.size());
    for (const std::string& name : required) {
        const auto it = std::find_if(layout.begin(), layout.end(),
                                     [&](const auto& p) { return p.first == name; });
        if (it == layout.end())
            throw IoError(path + ": missing required property \"" + name + "\"");
        if (it->second.type != "float" && it->second.type != "float32")
            throw IoError(path + ": property \"" + name + "\": non-float32 storage (" +
                          it->second.type + ")");
        offsets.push_back(it->second.byte_offset);
    }

    std::vector<char> payload(vertex_count * stride);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size())
        throw IoError(path + ": header/body length mismatch: expected " +
                      std::to_string(payload.size()) + " payload bytes, found " +
                      std::to_string(in.gcount()));

    GaussianCloud cloud;
    cloud.resize(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        const char* row = payload.data() + i * stride;
        float values[62];
        for (std::size_t k = 0; k < required.size(); ++k)
            std::memcpy(&values[k], row + offsets[k], sizeof(float));
        for (std::size_t k = 0; k < required.size(); ++k)
            if (!std::isfinite(values[k]))
                throw IoError(path + ": non-finite value in property \"" + required[k] +
                              "\" at vertex " + std::to_string(i));

        float* pos = &cloud.positions[3 * i];
        pos[0] = values[0];
        pos[1] = values[1];
        pos[2] = values[2];
        // values[3..5] are normals, ignored.
        float* sh = &cloud.sh[48 * i];
        for (int ch = 0; ch < 3; ++ch) sh[ch] = values[6 + ch];
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 1; k < 16; ++k) sh[k * 3 + ch] = values[9 + ch * 15 + (k - 1)];
        cloud.opacity_logits[i] = values[54];
        float* scale = &cloud.log_scales[3 * i];
        for (int k = 0; k < 3; ++k) scale[k] = values[55 + k];
        float* rot = &cloud.rotations[4 * i];
        for (int k = 0; k < 4; ++k) rot[k] = values[58 + k];
    }
    return cloud;
}

void ply_write(const GaussianCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open file for writing");

    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << "\n";
    for (const std::string& name : required_properties()) out << "property float " << name << "\n";
    out << "end_header\n";

    std::vector<float> row(62);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const float* pos = &cloud.positions[3 * i];
        row[0] = pos[0];
        row[1] = pos[1];
        row[2] = pos[2];
        row[3] = row[4] = row[5] = 0.0f; // normals
        const float* sh = &cloud.sh[48 * i];
        for (int ch = 0; ch < 3; ++ch) row[6 + ch] = sh[ch];
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 1; k < 16; ++k) row[9 + ch * 15 + (k - 1)] = sh[k * 3 + ch];
        row[54] = cloud.opacity_logits[i];
        const float* scale = &cloud.log_scales[3 * i];
        for (int k = 0; k < 3; ++k) row[55 + k] = scale[k];
        const float* rot = &cloud.rotations[4 * i];
        for (int k = 0; k < 4; ++k) row[58 + k] = rot[k];
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError(path + ": write failed");
}

} // namespace gausskin
