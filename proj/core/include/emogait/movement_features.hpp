#pragma once

#include <span>
#include <vector>

#include "emogait/skeleton.hpp"

namespace emogait {

enum class Foot { Left, Right };

struct FootContact {
    int frame = 0;
    Foot foot = Foot::Left;
    bool operator==(const FootContact&) const = default;
};

/// Per-frame trajectory features of the root joint. All sequences have the
/// gait's length; height_dev sums to ~0 over the gait.
struct RootFeatures {
    std::vector<double> height_dev;  // h: root height minus per-gait mean
    std::vector<double> speed;       // s: ground-plane step magnitude
    std::vector<double> speed_lp;    // s_bar: causal low-pass of s
    std::vector<double> orient_diff; // delta in [0, pi]
    std::vector<double> curvature;   // kappa >= 0
    std::vector<double> orientation; // alpha: facing heading, (-pi, pi]
};

/// Stepping phase anchored at 0 on left contacts and pi on right contacts,
/// advancing linearly between contacts; frequency is the per-frame phase
/// increment.
struct SteppingFeatures {
    std::vector<double> phase;      // theta in [0, 2*pi)
    std::vector<double> frequency;  // omega in [0, pi)
    std::vector<FootContact> contacts;
};

/// Heel and toe world positions per frame.
struct FootPositions {
    std::vector<Vec3> left_heel, left_toe, right_heel, right_toe;
};

struct FootJointIndices {
    int left_heel = -1, left_toe = -1, right_heel = -1, right_toe = -1;
};

struct HipJointIndices {
    int left = -1, right = -1;
};

/// Contact detector thresholds, relative so that detection survives unit
/// changes: a heel is in contact when its height is within height_fraction of
/// the leg length above the per-clip minimum AND its ground-plane speed is
/// below speed_fraction of the mean root speed.
struct ContactParams {
    double height_fraction = 0.05;
    double speed_fraction = 0.10;
};

/// Resolves feet/hips from joint names (e.g. "LeftHeel"/"LeftAnkle",
/// "LeftToe", "LeftHip"); throws ValidationError when a role is missing.
FootJointIndices resolve_foot_joints(const Skeleton& skeleton);
HipJointIndices resolve_hip_joints(const Skeleton& skeleton);

/// h[t] = y0[t] - mean_t(y0).
std::vector<double> root_height_deviation(const Gait& gait);

/// s[t] = ||XZ(root[t]) - XZ(root[t-1])||, s[0] = s[1]; s_bar is the causal
/// single-pole filter s_bar[t] = 0.8 s_bar[t-1] + 0.2 s[t] with s_bar[0] = s[0].
struct RootSpeed {
    std::vector<double> s;
    std::vector<double> s_bar;
};
RootSpeed root_speed(const Gait& gait);

/// Facing heading per frame: the ground-plane angle of up x (leftHip - rightHip).
std::vector<double> root_orientation(const Gait& gait);

/// delta[t]: unsigned angle between [sin(alpha), cos(alpha)] and the unit root
/// step direction; carried forward over stationary frames.
std::vector<double> orientation_difference(std::span<const double> alpha, const Gait& gait);

/// kappa[t] = ||tau[t] - tau[t-1]|| with tau the ground-plane root step;
/// the first two frames copy the first defined value.
std::vector<double> trajectory_curvature(const Gait& gait);

/// Detected heel strikes, collapsed to the first frame of each contact run
/// and cleaned to alternate left/right. Throws InsufficientStepsError when
/// fewer than two contacts remain.
std::vector<FootContact> detect_foot_contacts(const Gait& gait, const ContactParams& params = {});

/// Phase/frequency from contact events over total_frames frames. Phase is
/// exactly 0 at left contacts and pi at right contacts; before the first and
/// after the last contact the nearest half-period's rate extrapolates.
SteppingFeatures stepping_phase(std::span<const FootContact> contacts, int total_frames);

FootPositions foot_positions(const Gait& gait);

/// Bundles the per-gait root features (requires at least 3 frames).
RootFeatures extract_root_features(const Gait& gait);

} // namespace emogait
