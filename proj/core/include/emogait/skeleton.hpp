#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emogait/emotion.hpp"
#include "emogait/errors.hpp"
#include "emogait/geometry.hpp"

namespace emogait {

/// A joint tree: parent indices in topological order (parent[0] = -1,
/// parent[j] < j), a fixed offset per joint in the parent's rest frame, and
/// names used to resolve feet/hips/etc. by role.
struct Skeleton {
    int joint_count = 0;
    std::vector<int> parent;
    std::vector<Vec3> offset;
    std::vector<std::string> joint_names;
    std::vector<int> leaf_set;

    /// Throws ValidationError on any broken invariant (orphaned joints,
    /// non-topological parents, nonzero root offset).
    void validate() const;

    /// Index of the named joint, or -1.
    int joint_index(std::string_view name) const;

    /// World positions of the rest pose (all rotations identity, root at
    /// origin): cumulative offsets along each path from the root.
    std::vector<Vec3> rest_positions() const;

    /// Children of each joint, derived from `parent`.
    std::vector<std::vector<int>> children() const;

    bool operator==(const Skeleton&) const = default;
};

/// The default 21-joint humanoid used throughout (hips root; head, hands and
/// toes as leaves). Offsets are in meters, Y up, rest pose facing +Z.
const Skeleton& default_skeleton();

/// One frame of a gait: world-frame joint positions, one versor per non-root
/// joint (rotations[j-1] drives joint j), and the root position. When both
/// positions and rotations are populated they agree through
/// forward_kinematics within 1e-6.
struct Pose {
    std::vector<Vec3> positions;
    std::vector<Versor> rotations;
    Vec3 root_position{};
};

/// A pose sequence with its skeleton, frame rate and annotated emotion.
/// All frames share the one skeleton.
struct Gait {
    Skeleton skeleton;
    std::vector<Pose> frames;
    double frame_rate = 10.0;
    EmotionVector emotion;

    Gait() : skeleton(default_skeleton()) {}

    int length() const { return static_cast<int>(frames.size()); }
};

/// World positions from per-joint rotations applied to the fixed offsets:
/// positions[j] = rotate(rotations[j-1], offset[j]) + positions[parent[j]],
/// root at root_position. Each versor must be unit within 1e-6.
Pose forward_kinematics(const Skeleton& skeleton, const Vec3& root_position,
                        std::span<const Versor> rotations);

/// Templated position-only core shared with the differentiable path.
/// `rotations` are assumed unit; no validation happens here.
template <class R>
std::vector<Vec3T<R>> fk_positions(const Skeleton& skeleton, const Vec3T<R>& root_position,
                                   std::span<const QuatT<R>> rotations) {
    std::vector<Vec3T<R>> out(static_cast<std::size_t>(skeleton.joint_count));
    out[0] = root_position;
    for (int j = 1; j < skeleton.joint_count; ++j) {
        Vec3T<R> bone = rotate(rotations[static_cast<std::size_t>(j - 1)], skeleton.offset[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(j)] = bone + out[static_cast<std::size_t>(skeleton.parent[static_cast<std::size_t>(j)])];
    }
    return out;
}

/// Recovers per-joint shortest-arc versors taking each offset direction to
/// the observed bone direction. Twist about the bone axis is unobservable
/// from positions and is left at zero.
std::vector<Versor> rotations_from_positions(const Skeleton& skeleton,
                                             std::span<const Vec3> positions);

/// Intrinsic Z-Y-X Euler angles of a unit versor, each in [0, 2*pi).
std::array<double, 3> quat_to_euler(const Versor& q);

/// Flips quaternion signs along a sequence so output[0].w >= 0 and every
/// consecutive dot product is nonnegative. Represented rotations unchanged.
std::vector<Versor> hemisphere_align(std::span<const Versor> sequence);

/// In-place hemisphere alignment of each joint's versor track across frames.
void hemisphere_align_gait(Gait& gait);

} // namespace emogait
