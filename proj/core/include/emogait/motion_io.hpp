#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emogait/skeleton.hpp"

namespace emogait {

/// A parsed motion file: world-frame joint positions per frame.
struct MotionClip {
    Skeleton skeleton;
    std::vector<std::vector<Vec3>> frames;
    double frame_rate = 0.0;
    std::string source_id;

    int length() const { return static_cast<int>(frames.size()); }
};

/// Corpus index: one entry per motion file with its annotated emotion and
/// train/val/test split tag. The seed makes the split reproducible.
struct CorpusManifest {
    struct Entry {
        std::string path;
        EmotionVector emotion;
        std::string split; // "train" / "val" / "test" / "" (unsplit)
    };
    std::vector<Entry> entries;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parses BVH text (HIERARCHY + MOTION) with standard hierarchical channel
/// semantics; per-frame world positions come from composing each joint's
/// local channel rotations down the tree. The root's OFFSET is folded into
/// the frame positions so the returned skeleton keeps a zero root offset.
MotionClip parse_bvh(std::string_view text, std::string source_id = "");

/// Serializes a clip to BVH. `rotations` holds the per-bone versors of each
/// frame (J-1 per frame); they are converted to hierarchy-consistent local
/// channel rotations (exactly for single-child joints, least-squares at
/// multi-child joints), so a standard reader reproduces the clip positions.
/// Channels are written as Zrotation Yrotation Xrotation in degrees, numbers
/// with 6 significant digits.
std::string write_bvh(const MotionClip& clip, std::span<const std::vector<Versor>> rotations);

/// Keeps every stride-th frame (output k = input k*stride, count = T/stride),
/// then cuts non-overlapping windows of `window` frames. Emotion is left at
/// its default; callers attach manifest labels. A short clip yields an empty
/// list.
std::vector<Gait> window_and_downsample(const MotionClip& clip, int stride = 4, int window = 60);

/// Deterministically shuffles entries under manifest.seed and assigns
/// train/val/test tags by the given fractions (which must be nonnegative and
/// sum to 1). Same seed, same split.
CorpusManifest split_corpus(const CorpusManifest& manifest,
                            std::array<double, 3> fractions = {0.8, 0.1, 0.1});

// ---- gait and manifest documents ----

std::string gait_to_json(const Gait& gait, const std::vector<EmotionVector>* schedule = nullptr);
Gait gait_from_json(const std::string& text, std::vector<EmotionVector>* schedule_out = nullptr);
void save_gait(const std::string& path, const Gait& gait,
               const std::vector<EmotionVector>* schedule = nullptr);
Gait load_gait(const std::string& path, std::vector<EmotionVector>* schedule_out = nullptr);

void save_manifest(const std::string& path, const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::string& path);

/// Builds a Gait (positions + recovered rotations) from clip frames.
Gait gait_from_positions(const Skeleton& skeleton, const std::vector<std::vector<Vec3>>& frames,
                         double frame_rate);

/// Loaded corpus split into the three sets. BVH entries are windowed and
/// downsampled with the given parameters; gait JSON entries are taken as-is.
/// Untagged entries land in train.
struct Corpus {
    std::vector<Gait> train, val, test;
};
Corpus load_corpus(const std::string& manifest_path, int stride = 4, int window = 60);

} // namespace emogait
