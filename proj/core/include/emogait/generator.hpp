#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emogait/model.hpp"
#include "emogait/motion_io.hpp"

namespace emogait {

/// Desired ground-plane path: an ordered polyline of (x, z) waypoints with an
/// arc-length parameterization. Beyond the last waypoint the final segment's
/// direction extends indefinitely.
struct TrajectorySpec {
    std::vector<std::array<double, 2>> waypoints;

    /// One "x z" pair per line; '#' starts a comment.
    static TrajectorySpec from_file(const std::string& path);
    static TrajectorySpec from_text(const std::string& text);

    void validate() const; // needs >= 2 distinct waypoints
    double total_length() const;
    std::array<double, 2> point_at(double arc) const;
    std::array<double, 2> tangent_at(double arc) const;
    /// Distance from a point to the polyline (final segment extended).
    double distance_to(const std::array<double, 2>& p) const;
    /// n points at uniform arc spacing over the full path.
    std::vector<std::array<double, 2>> resample(int n) const;
};

struct EmotionSchedule {
    std::vector<EmotionVector> steps;
    int length() const { return static_cast<int>(steps.size()); }
};

/// Componentwise linear interpolation from start to end over `steps` steps,
/// L1-normalized per step; hits both endpoints exactly.
EmotionSchedule build_emotion_schedule(const EmotionVector& start, const EmotionVector& end,
                                       int steps);

struct RolloutStats {
    double mean_path_deviation = 0.0; // of the realized root against the desired path
    double mean_stride = 0.0;         // mean realized per-step root displacement
    double max_step = 0.0;
};

struct RolloutResult {
    Gait gait;               // seed frames (re-based onto the path) + generated frames
    EmotionSchedule schedule;
    RolloutStats stats;
};

inline constexpr int kRolloutSeedFrames = 18;

/// Autoregressive generation: the first 18 seed frames are rigidly re-based
/// onto the path start, then each step extracts features from the trailing
/// window (desired-path s/s_bar/kappa and the scheduled emotion as controls),
/// predicts one step, advances the root along the path by the predicted
/// speed, applies the predicted height deviation and facing offset, and feeds
/// the new frame back. steps == 0 returns the untouched seed frames.
RolloutResult rollout(grad::ParameterStore& store, const ModelConfig& config, const Gait& seed_gait,
                      const TrajectorySpec& trajectory, const EmotionSchedule& schedule, int steps);

struct AugmentSpec {
    int trajectories = 4;
    int emotions = 10;
    int transition_pairs = 5;
    int steps = 200;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 1;
    bool write_bvh_files = false;
};

struct AugmentResult {
    CorpusManifest manifest;
    std::vector<std::string> failures;
    int single_emotion_items = 0;
    int transition_items = 0;
};

/// Generates trajectories x emotions single-emotion gaits plus
/// trajectories x transition_pairs emotion-transition gaits (pairs drawn from
/// the emotion list without replacement), writing one gait JSON per item and
/// a manifest enumerating the outputs. Failed items are recorded, not fatal.
AugmentResult augment_corpus(grad::ParameterStore& store, const ModelConfig& config,
                             const Gait& seed_gait, const AugmentSpec& spec);

} // namespace emogait
