#pragma once

#include <vector>

#include "emogait/model.hpp"
#include "emogait/motion_io.hpp"
#include "emogait/skeleton.hpp"
#include "emogait/trainer.hpp"
#include "emogait/util.hpp"

namespace emogait::fixtures {

/// Gait style knobs for the procedural walker.
struct WalkStyle {
    double speed = 0.10;       // root advance per frame (m)
    int half_period = 5;       // frames from one heel strike to the other foot's
    double arm_swing = 0.25;   // shoulder swing amplitude (rad)
    double torso_pitch = 0.02; // forward slouch (rad)
    double head_pitch = 0.0;   // downward head pitch (rad)
    double step_lift = 0.05;   // swing foot lift (m)
    double root_height = 0.85; // mean root height (m)
    double bob = 0.010;        // vertical root oscillation (m)
    EmotionVector emotion;
};

WalkStyle happy_style();
WalkStyle sad_style();
WalkStyle angry_style();
WalkStyle neutral_style();

/// Procedural walking gait on the default skeleton: straight-line root
/// motion, two-bone leg solve with planted stance feet, arm counter-swing and
/// style-dependent posture. Every frame is FK-consistent (positions reproduce
/// from the versors).
Gait make_walk_gait(const WalkStyle& style, int frames, double frame_rate = 10.0);

/// The four emotion-styled training gaits used by the overfit experiments.
std::vector<Gait> fixture_gaits(int frames = 60);

Corpus fixture_corpus(int frames = 60);

/// Positions-only gait whose heels dip into the contact band (with zero
/// ground-plane speed) exactly at the requested frames.
Gait make_planted_contact_gait(const std::vector<FootContact>& contacts, int frames);

/// Airborne character: heels bob and drift on every frame, so no frame passes
/// both the height and the stillness gate.
Gait make_hovering_gait(int frames);

/// Uniformly random unit quaternion.
Versor random_versor(Rng& rng);

/// Random bounded-angle versors for every non-root joint (a "reachable" pose
/// in the sense that no bone folds back on its parent).
std::vector<Versor> random_pose_rotations(const Skeleton& skeleton, Rng& rng,
                                          double max_angle = 2.5);

/// Tiny-but-trainable model configuration used by gradient checks and the
/// overfit acceptance run.
ModelConfig tiny_model_config();

/// Desk-scale training configuration matching the acceptance criteria
/// (300 epochs, lr 0.001 with 0.999 decay, beta 0.995, all lambdas 1).
TrainConfig overfit_train_config();

} // namespace emogait::fixtures
