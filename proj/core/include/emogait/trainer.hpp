#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "emogait/model.hpp"
#include "emogait/motion_io.hpp"

namespace emogait {

struct TrainConfig {
    double learning_rate = 0.001;
    double lr_decay = 0.999;            // per-epoch multiplicative decay
    double teacher_forcing_decay = 0.995; // beta: teacher forcing prob = beta^epoch
    int epochs = 300;
    int batch_size = 32;
    std::uint64_t seed = 0;
    LossWeights lambdas;
    double grad_clip_norm = 5.0;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

struct CurriculumState {
    int epoch = 0;
    double teacher_forcing_prob = 1.0;

    static CurriculumState at_epoch(int epoch, double beta);
};

/// Returns the ground-truth step with probability prob, otherwise the model's
/// own prediction; one draw per call.
template <class StepT>
const StepT& curriculum_mix(const StepT& truth, const StepT& predicted, double prob, Rng& rng) {
    if (prob < 0.0 || prob > 1.0) throw ValidationError("curriculum_mix: prob must be in [0, 1]");
    return rng.bernoulli(prob) ? truth : predicted;
}

struct EpochLog {
    int epoch = 0;
    double train_total = 0.0;
    double motion = 0.0, pose = 0.0, affective = 0.0, root = 0.0, foot_contact = 0.0;
    double val_total = 0.0;
    double lr = 0.0;
    double tf_prob = 0.0;
    std::int64_t tf_truth_draws = 0;
    std::int64_t tf_total_draws = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    std::string best_checkpoint; // serialized checkpoint of the best-validation epoch
    int skipped_degenerate_windows = 0;
};

/// Curriculum-scheduled training: per gait, the input window slides one frame
/// at a time and the model predicts the next step; with probability beta^E the
/// ground truth re-enters the working sequence, otherwise the prediction does
/// (with its features re-extracted). Gradients accumulate over batches of
/// windows (averaged, so batch size does not rescale the learning rate), are
/// clipped in global norm, and Adam-stepped; the learning rate decays per
/// epoch. Validation runs fully self-fed (teacher forcing off).
TrainResult train(const Corpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config, grad::ParameterStore& store,
                  const FeatureDefinitionTable* feature_table = nullptr);

struct EvalResult {
    double pose_error = 0.0;        // relative to the truth clip's bbox diagonal
    double rotation_error_deg = 0.0; // mean absolute wrapped Euler component difference
    int clips_evaluated = 0;
    int clips_skipped = 0;
};

/// 18-frame seed / 42-frame prediction protocol: the first 18 frames of each
/// clip are given, the remaining 42 are predicted autoregressively with the
/// ground-truth trajectory controls. Clips shorter than 60 frames are skipped
/// with a warning on stderr. Never mutates the parameters.
EvalResult evaluate(grad::ParameterStore& store, const ModelConfig& model_config,
                    std::span<const Gait> test_set,
                    const FeatureDefinitionTable* feature_table = nullptr);

/// Longest diagonal of the axis-aligned box around every joint of every frame.
double bbox_diagonal(const Gait& gait);

/// Error sums between a predicted pose and its ground truth: per-joint
/// Euclidean distances plus absolute wrapped Euler-component differences.
struct PoseErrorSums {
    double position_sum = 0.0;
    int position_count = 0;
    double rotation_sum = 0.0; // radians
    int rotation_count = 0;
};
void accumulate_pose_errors(const Pose& truth, const Pose& predicted, PoseErrorSums& sums);

void write_loss_log_csv(const std::string& path, std::span<const EpochLog> log);

} // namespace emogait
