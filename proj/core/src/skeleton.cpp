#include "emogait/skeleton.hpp"

#include <cmath>

namespace emogait {

void Skeleton::validate() const {
    auto count = static_cast<std::size_t>(joint_count);
    if (joint_count < 1) throw ValidationError("skeleton: joint_count must be >= 1");
    if (parent.size() != count || offset.size() != count || joint_names.size() != count) {
        throw ShapeError("skeleton: parent/offset/name arrays must all have joint_count entries");
    }
    if (parent[0] != -1) throw ValidationError("skeleton: joint 0 must be the root (parent -1)");
    for (int j = 1; j < joint_count; ++j) {
        int p = parent[static_cast<std::size_t>(j)];
        if (p < 0 || p >= j) {
            throw ValidationError("skeleton: parent of joint " + std::to_string(j) +
                                  " must precede it (got " + std::to_string(p) + ")");
        }
    }
    if (norm(offset[0]) > 1e-12) throw ValidationError("skeleton: root offset must be zero");
    for (int leaf : leaf_set) {
        if (leaf < 0 || leaf >= joint_count) throw ValidationError("skeleton: leaf index out of range");
    }
}

int Skeleton::joint_index(std::string_view name) const {
    for (std::size_t i = 0; i < joint_names.size(); ++i) {
        if (joint_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<Vec3> Skeleton::rest_positions() const {
    std::vector<Vec3> out(static_cast<std::size_t>(joint_count));
    out[0] = {0.0, 0.0, 0.0};
    for (int j = 1; j < joint_count; ++j) {
        out[static_cast<std::size_t>(j)] =
            out[static_cast<std::size_t>(parent[static_cast<std::size_t>(j)])] + offset[static_cast<std::size_t>(j)];
    }
    return out;
}

std::vector<std::vector<int>> Skeleton::children() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(joint_count));
    for (int j = 1; j < joint_count; ++j) {
        out[static_cast<std::size_t>(parent[static_cast<std::size_t>(j)])].push_back(j);
    }
    return out;
}

const Skeleton& default_skeleton() {
    static const Skeleton s = [] {
        Skeleton sk;
        struct JointSpec {
            const char* name;
            int parent;
            Vec3 offset;
        };
        const JointSpec joints[] = {
            {"Hips", -1, {0.0, 0.0, 0.0}},
            {"Spine", 0, {0.0, 0.12, 0.0}},
            {"Chest", 1, {0.0, 0.15, 0.0}},
            {"Neck", 2, {0.0, 0.13, 0.0}},
            {"Head", 3, {0.0, 0.14, 0.0}},
            {"LeftShoulder", 2, {-0.17, 0.06, 0.0}},
            {"LeftElbow", 5, {-0.27, 0.0, 0.0}},
            {"LeftWrist", 6, {-0.25, 0.0, 0.0}},
            {"LeftHand", 7, {-0.09, 0.0, 0.0}},
            {"RightShoulder", 2, {0.17, 0.06, 0.0}},
            {"RightElbow", 9, {0.27, 0.0, 0.0}},
            {"RightWrist", 10, {0.25, 0.0, 0.0}},
            {"RightHand", 11, {0.09, 0.0, 0.0}},
            {"LeftHip", 0, {-0.10, -0.06, 0.0}},
            {"LeftKnee", 13, {0.0, -0.42, 0.0}},
            {"LeftHeel", 14, {0.0, -0.42, 0.0}},
            {"LeftToe", 15, {0.0, -0.06, 0.14}},
            {"RightHip", 0, {0.10, -0.06, 0.0}},
            {"RightKnee", 17, {0.0, -0.42, 0.0}},
            {"RightHeel", 18, {0.0, -0.42, 0.0}},
            {"RightToe", 19, {0.0, -0.06, 0.14}},
        };
        for (const auto& j : joints) {
            sk.joint_names.emplace_back(j.name);
            sk.parent.push_back(j.parent);
            sk.offset.push_back(j.offset);
        }
        sk.joint_count = static_cast<int>(sk.parent.size());
        sk.leaf_set = {4, 8, 12, 16, 20};
        sk.validate();
        return sk;
    }();
    return s;
}

Pose forward_kinematics(const Skeleton& skeleton, const Vec3& root_position,
                        std::span<const Versor> rotations) {
    if (static_cast<int>(rotations.size()) != skeleton.joint_count - 1) {
        throw ShapeError("forward_kinematics: expected " + std::to_string(skeleton.joint_count - 1) +
                         " rotations, got " + std::to_string(rotations.size()));
    }
    for (std::size_t i = 0; i < rotations.size(); ++i) {
        if (std::abs(quat_norm(rotations[i]) - 1.0) > 1e-6) {
            throw ValidationError("forward_kinematics: non-unit versor for joint " + std::to_string(i + 1));
        }
    }
    Pose pose;
    pose.root_position = root_position;
    pose.rotations.assign(rotations.begin(), rotations.end());
    pose.positions = fk_positions<double>(skeleton, root_position, rotations);
    return pose;
}

std::vector<Versor> rotations_from_positions(const Skeleton& skeleton,
                                             std::span<const Vec3> positions) {
    if (static_cast<int>(positions.size()) != skeleton.joint_count) {
        throw ShapeError("rotations_from_positions: expected " + std::to_string(skeleton.joint_count) +
                         " positions, got " + std::to_string(positions.size()));
    }
    std::vector<Versor> out;
    out.reserve(static_cast<std::size_t>(skeleton.joint_count - 1));
    for (int j = 1; j < skeleton.joint_count; ++j) {
        const Vec3& off = skeleton.offset[static_cast<std::size_t>(j)];
        Vec3 bone = positions[static_cast<std::size_t>(j)] -
                    positions[static_cast<std::size_t>(skeleton.parent[static_cast<std::size_t>(j)])];
        if (norm(off) < 1e-12 || norm(bone) < 1e-12) {
            throw DegeneratePoseError("rotations_from_positions: zero-length bone at joint " +
                                      skeleton.joint_names[static_cast<std::size_t>(j)]);
        }
        out.push_back(shortest_arc(off, bone));
    }
    return out;
}

std::array<double, 3> quat_to_euler(const Versor& q) {
    if (std::abs(quat_norm(q) - 1.0) > 1e-6) {
        throw ValidationError("quat_to_euler: versor must be unit norm");
    }
    return euler_zyx(q);
}

std::vector<Versor> hemisphere_align(std::span<const Versor> sequence) {
    std::vector<Versor> out;
    out.reserve(sequence.size());
    for (const Versor& q : sequence) {
        bool flip;
        if (out.empty()) {
            flip = q.w < 0.0;
        } else {
            flip = quat_dot(out.back(), q) < 0.0;
        }
        out.push_back(flip ? Versor{-q.w, -q.x, -q.y, -q.z} : q);
    }
    return out;
}

void hemisphere_align_gait(Gait& gait) {
    if (gait.frames.empty()) return;
    std::size_t joints = gait.frames[0].rotations.size();
    std::vector<Versor> track(gait.frames.size());
    for (std::size_t j = 0; j < joints; ++j) {
        for (std::size_t t = 0; t < gait.frames.size(); ++t) track[t] = gait.frames[t].rotations[j];
        std::vector<Versor> aligned = hemisphere_align(track);
        for (std::size_t t = 0; t < gait.frames.size(); ++t) gait.frames[t].rotations[j] = aligned[t];
    }
}

} // namespace emogait
