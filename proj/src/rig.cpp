#include "gausskin/rig.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gausskin/errors.hpp"

namespace gausskin {

using nlohmann::json;

namespace {

json quat_to_json(const UnitQuaternion& q) { return json::array({q.w, q.x, q.y, q.z}); }

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

UnitQuaternion quat_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw IoError(where + ": expected a [w,x,y,z] quaternion");
    try {
        return UnitQuaternion::from_stored(j[0].get<double>(), j[1].get<double>(),
                                           j[2].get<double>(), j[3].get<double>());
    } catch (const DataError& e) {
        throw IoError(where + ": " + e.what());
    }
}

Vec3 vec_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw IoError(where + ": expected a [x,y,z] vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json load_document(const std::string& path, const char* expected_version) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("version") || doc["version"] != expected_version)
        throw IoError(path + ": version: expected \"" + expected_version + "\"");
    return doc;
}

void write_document(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError(path + ": write failed");
}

} // namespace

Skeleton Skeleton::create(std::vector<Joint> joints) {
    Skeleton s;
    s.joints = std::move(joints);
    s.bind_world.resize(s.joints.size());
    s.inverse_bind.resize(s.joints.size());
    for (std::size_t j = 0; j < s.joints.size(); ++j) {
        const int parent = s.joints[j].parent;
        if (parent >= static_cast<int>(j))
            throw DataError("joint " + std::to_string(j) +
                            ": parent must precede the joint (cycles are impossible in a valid forest)");
        if (parent < -1) throw DataError("joint " + std::to_string(j) + ": invalid parent index");
        s.bind_world[j] = parent < 0 ? s.joints[j].bind_local()
                                     : s.bind_world[parent] * s.joints[j].bind_local();
        s.inverse_bind[j] = s.bind_world[j].inverse();
    }
    return s;
}

void SkinWeights::append_row(std::span<const std::uint32_t> joint_ids, std::span<const double> values) {
    if (joint_ids.size() != values.size()) throw DataError("weight row: joint/weight count mismatch");
    if (joint_ids.size() > kMaxInfluences)
        throw DataError("weight row exceeds " + std::to_string(kMaxInfluences) + " influences");
    for (std::size_t k = 0; k < joint_ids.size(); ++k) {
        if (joint_ids[k] >= joint_count)
            throw DataError("weight row references joint " + std::to_string(joint_ids[k]) +
                            " of " + std::to_string(joint_count));
        if (values[k] < 0.0) throw DataError("negative skinning weight");
        joints.push_back(joint_ids[k]);
        weights.push_back(values[k]);
    }
    offsets.push_back(static_cast<std::uint32_t>(joints.size()));
}

std::size_t SkinWeights::normalize_rows(double warn_tolerance) {
    std::size_t adjusted = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        double sum = 0.0;
        for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) sum += weights[k];
        if (sum <= 0.0)
            throw DataError("weight row " + std::to_string(i) + " sums to zero");
        if (std::abs(sum - 1.0) > warn_tolerance) ++adjusted;
        if (std::abs(sum - 1.0) > 1e-12)
            for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) weights[k] /= sum;
    }
    return adjusted;
}

std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
    if (pose.rotations.size() != skeleton.joint_count())
        throw DataError("pose has " + std::to_string(pose.rotations.size()) + " rotations for " +
                        std::to_string(skeleton.joint_count()) + " joints");
    std::vector<RigidTransform> world(skeleton.joint_count());
    for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
        const RigidTransform local{quat_to_matrix(pose.rotations[j]), {0, 0, 0}};
        const int parent = skeleton.joints[j].parent;
        if (parent < 0) {
            world[j] = local * skeleton.joints[j].bind_local();
            world[j].translation = world[j].translation + pose.root_translation;
        } else {
            world[j] = world[parent] * local * skeleton.joints[j].bind_local();
        }
    }
    return world;
}

std::vector<RigidTransform> skinning_transforms(const Skeleton& skeleton, const Pose& pose) {
    if (pose.rotations.size() != skeleton.joint_count())
        throw DataError("pose has " + std::to_string(pose.rotations.size()) + " rotations for " +
                        std::to_string(skeleton.joint_count()) + " joints");
    // T_j = world_j * bind_world_j^-1 expands to T_parent * B_p * rot * B_p^-1
    // with B_p the parent's bind world; the cancelled form keeps the rest
    // pose exactly at the identity, which world * inverse_bind would not.
    std::vector<RigidTransform> t(skeleton.joint_count());
    for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
        const int parent = skeleton.joints[j].parent;
        const bool rest = pose.rotations[j].is_identity();
        if (parent < 0) {
            t[j] = rest ? RigidTransform::identity()
                        : RigidTransform{quat_to_matrix(pose.rotations[j]), {0, 0, 0}};
            t[j].translation = t[j].translation + pose.root_translation;
        } else if (rest) {
            t[j] = t[parent];
        } else {
            const RigidTransform local{quat_to_matrix(pose.rotations[j]), {0, 0, 0}};
            t[j] = t[parent] * (skeleton.bind_world[parent] * local * skeleton.inverse_bind[parent]);
        }
    }
    return t;
}

Skeleton load_rig(const std::string& path) {
    const json doc = load_document(path, "gausskin-rig/1");
    if (!doc.contains("joints") || !doc["joints"].is_array())
        throw IoError(path + ": joints: missing or not an array");
    std::vector<Joint> joints;
    for (std::size_t j = 0; j < doc["joints"].size(); ++j) {
        const json& node = doc["joints"][j];
        const std::string where = path + ": joints[" + std::to_string(j) + "]";
        Joint joint;
        joint.name = node.value("name", "joint_" + std::to_string(j));
        if (!node.contains("parent") || !node["parent"].is_number_integer())
            throw IoError(where + ".parent: missing or not an integer");
        joint.parent = node["parent"].get<int>();
        if (!node.contains("bind_local")) throw IoError(where + ".bind_local: missing");
        joint.bind_rotation =
            quat_from_json(node["bind_local"].value("rotation", json::array({1, 0, 0, 0})),
                           where + ".bind_local.rotation");
        joint.bind_translation =
            vec_from_json(node["bind_local"].value("translation", json::array({0, 0, 0})),
                          where + ".bind_local.translation");
        joints.push_back(std::move(joint));
    }
    try {
        return Skeleton::create(std::move(joints));
    } catch (const DataError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void save_rig(const Skeleton& skeleton, const std::string& path) {
    json joints = json::array();
    for (const Joint& j : skeleton.joints) {
        joints.push_back({{"name", j.name},
                          {"parent", j.parent},
                          {"bind_local",
                           {{"rotation", quat_to_json(j.bind_rotation)},
                            {"translation", vec_to_json(j.bind_translation)}}}});
    }
    write_document({{"version", "gausskin-rig/1"}, {"joints", joints}}, path);
}

AnimationClip load_clip(const std::string& path) {
    const json doc = load_document(path, "gausskin-clip/1");
    AnimationClip clip;
    if (!doc.contains("frame_rate") || !doc["frame_rate"].is_number())
        throw IoError(path + ": frame_rate: missing or not a number");
    clip.frame_rate = doc["frame_rate"].get<double>();
    if (!(clip.frame_rate > 0.0)) throw IoError(path + ": frame_rate: must be positive");
    if (!doc.contains("joint_count")) throw IoError(path + ": joint_count: missing");
    clip.joint_count = doc["joint_count"].get<std::uint32_t>();
    if (!doc.contains("frames") || !doc["frames"].is_array() || doc["frames"].empty())
        throw IoError(path + ": frames: missing, not an array, or empty");

    for (std::size_t f = 0; f < doc["frames"].size(); ++f) {
        const json& node = doc["frames"][f];
        const std::string where = path + ": frames[" + std::to_string(f) + "]";
        Pose pose;
        if (!node.contains("rotations") || !node["rotations"].is_array() ||
            node["rotations"].size() != clip.joint_count)
            throw IoError(where + ".rotations: expected " + std::to_string(clip.joint_count) +
                          " quaternions");
        for (std::size_t j = 0; j < clip.joint_count; ++j)
            pose.rotations.push_back(
                quat_from_json(node["rotations"][j], where + ".rotations[" + std::to_string(j) + "]"));
        pose.root_translation =
            vec_from_json(node.value("root_translation", json::array({0, 0, 0})),
                          where + ".root_translation");
        pose.time = f / clip.frame_rate;
        clip.frames.push_back(std::move(pose));
    }
    return clip;
}

void save_clip(const AnimationClip& clip, const std::string& path) {
    json frames = json::array();
    for (const Pose& pose : clip.frames) {
        json rotations = json::array();
        for (const UnitQuaternion& q : pose.rotations) rotations.push_back(quat_to_json(q));
        frames.push_back(
            {{"rotations", rotations}, {"root_translation", vec_to_json(pose.root_translation)}});
    }
    write_document({{"version", "gausskin-clip/1"},
                    {"frame_rate", clip.frame_rate},
                    {"joint_count", clip.joint_count},
                    {"frames", frames}},
                   path);
}

SkinWeights load_weights(const std::string& path) {
    const json doc = load_document(path, "gausskin-weights/1");
    SkinWeights w;
    if (!doc.contains("joint_count")) throw IoError(path + ": joint_count: missing");
    w.joint_count = doc["joint_count"].get<std::uint32_t>();
    if (!doc.contains("rows") || !doc["rows"].is_array())
        throw IoError(path + ": rows: missing or not an array");

    for (std::size_t i = 0; i < doc["rows"].size(); ++i) {
        const json& row = doc["rows"][i];
        const std::string where = path + ": rows[" + std::to_string(i) + "]";
        if (!row.is_array()) throw IoError(where + ": expected an array of [joint, weight] pairs");
        std::vector<std::uint32_t> joints;
        std::vector<double> values;
        for (const json& entry : row) {
            if (!entry.is_array() || entry.size() != 2)
                throw IoError(where + ": expected [joint, weight] pairs");
            joints.push_back(entry[0].get<std::uint32_t>());
            values.push_back(entry[1].get<double>());
        }
        try {
            w.append_row(joints, values);
        } catch (const DataError& e) {
            throw IoError(where + ": " + e.what());
        }
    }
    try {
        const std::size_t adjusted = w.normalize_rows();
        if (adjusted > 0)
            std::cerr << "warning: " << path << ": " << adjusted
                      << " weight row(s) renormalized to unit sum\n";
    } catch (const DataError& e) {
        throw IoError(path + ": " + e.what());
    }
    return w;
}

void save_weights(const SkinWeights& weights, const std::string& path) {
    json rows = json::array();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        json row = json::array();
        const auto joints = weights.row_joints(i);
        const auto values = weights.row_weights(i);
        for (std::size_t k = 0; k < joints.size(); ++k)
            row.push_back(json::array({joints[k], values[k]}));
        rows.push_back(std::move(row));
    }
    write_document(
        {{"version", "gausskin-weights/1"}, {"joint_count", weights.joint_count}, {"rows", rows}},
        path);
}

} // namespace gausskin
