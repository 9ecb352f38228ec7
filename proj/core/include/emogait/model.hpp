#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emogait/affect_features.hpp"
#include "emogait/grad/param_store.hpp"
#include "emogait/grad/scalar_tape.hpp"
#include "emogait/grad/tape.hpp"
#include "emogait/movement_features.hpp"
#include "emogait/skeleton.hpp"
#include "emogait/util.hpp"

namespace emogait {

/// Architecture hyperparameters. The layer counts are fixed (two 3-layer
/// encoder stacks, a single-layer root encoder, a 2-layer versor head and
/// three single-layer scalar heads); widths and window length are tunable.
struct ModelConfig {
    int emotion_dims = 4; // C
    int joint_count = 21; // J
    int window = 60;      // T: input frames per prediction
    int pred_steps = 1;   // T_pred
    int h1 = 32;
    int h2 = 32;
    int h3 = 256;
    int h4 = 32;

    int affective_input_dims() const { return kAffectiveDims + emotion_dims; }
    int stepping_input_dims() const { return 5 + emotion_dims; }
    int versor_dims() const { return 4 * (joint_count - 1); }
    int gamma_dims() const { return h1 + h2; }

    /// The root latent (H4) split into contiguous (h, s, delta) parts.
    std::array<int, 3> root_latent_split() const {
        int base = h4 / 3, rem = h4 % 3;
        return {base + (rem > 0 ? 1 : 0), base + (rem > 1 ? 1 : 0), base};
    }

    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

/// All per-frame features of one gait, extracted once and sliced into model
/// inputs and training targets.
struct GaitFeatures {
    std::vector<AffectiveVector> affective;
    RootFeatures root;
    SteppingFeatures stepping;
};

/// Phase source for windows where contact detection cannot anchor a phase
/// (e.g. short rollout windows): extrapolate from theta0 at the window start
/// with a constant per-frame increment.
struct PhaseFallback {
    double theta0 = 0.0;
    double omega = 0.0;
};

/// Extracts affective + movement features for every frame. Throws
/// InsufficientStepsError when contacts cannot be detected and no fallback
/// is given.
GaitFeatures extract_gait_features(const Gait& gait, const FeatureDefinitionTable& defs,
                                   const ContactParams& contact_params = {},
                                   const PhaseFallback* phase_fallback = nullptr);

/// Per-frame encoder input rows:
///   i1 = [a; m]            (18 + C)
///   i2 = [sin th, cos th, omega, s_bar, kappa; m]  (5 + C)
///   q  = flattened versors (4 (J-1))
///   root = [h, s, delta]
struct EncoderInputs {
    std::vector<std::vector<double>> affective_emotion;
    std::vector<std::vector<double>> stepping_emotion;
    std::vector<std::vector<double>> versors;
    std::vector<std::array<double, 3>> root;

    int length() const { return static_cast<int>(versors.size()); }
    void validate(const ModelConfig& config) const;
};

/// Builds encoder inputs for frames [begin, end) of a gait, with a constant
/// emotion or a per-frame emotion sequence (indexed by absolute frame).
EncoderInputs build_encoder_inputs(const Gait& gait, const GaitFeatures& features,
                                   const EmotionVector& emotion, int begin, int end,
                                   const ModelConfig& config);
EncoderInputs build_encoder_inputs(const Gait& gait, const GaitFeatures& features,
                                   std::span<const EmotionVector> emotions, int begin, int end,
                                   const ModelConfig& config);

/// Encoder outputs per input frame.
struct LatentState {
    std::vector<std::vector<double>> gamma;      // [T][H1+H2]
    std::vector<std::vector<double>> q_tilde;    // [T][H3]
    std::vector<std::vector<double>> root_tilde; // [T][H4]
};

/// Predictor outputs for the T_pred following steps. Versors are normalized
/// to unit quadruples; the raw pre-normalization values feed the unit-norm
/// regularizer of the motion loss.
struct Prediction {
    std::vector<std::vector<double>> versors_raw; // [T_pred][4(J-1)]
    std::vector<std::vector<Versor>> versors;     // [T_pred][J-1]
    std::vector<double> height_dev;               // h_hat
    std::vector<double> speed;                    // s_hat
    std::vector<double> orient_diff;              // delta_hat
};

/// Creates and initializes all trainable parameters: Glorot-uniform weights,
/// zero biases. Idempotent naming; draw order is fixed by creation order.
void init_model_params(grad::ParameterStore& store, const ModelConfig& config, Rng& rng);

/// Tape-level forward pass: encoder over the input window, predictor from the
/// final frame's latents.
struct ModelVars {
    std::vector<grad::Var> gamma;
    std::vector<grad::Var> q_tilde;
    std::vector<grad::Var> root_tilde;
    grad::Var versors_raw; // [T_pred * 4(J-1)]
    grad::Var height_dev;  // [T_pred]
    grad::Var speed;       // [T_pred]
    grad::Var orient_diff; // [T_pred]
};
ModelVars record_forward(grad::Tape& tape, const EncoderInputs& inputs,
                         grad::ParameterStore& store, const ModelConfig& config);

/// Value-level wrappers around record_forward.
LatentState encode(const EncoderInputs& inputs, grad::ParameterStore& store,
                   const ModelConfig& config);
Prediction predict_from_latent(const LatentState& latent, grad::ParameterStore& store,
                               const ModelConfig& config);
Prediction predict(const EncoderInputs& inputs, grad::ParameterStore& store,
                   const ModelConfig& config);

// ---- losses ----

struct LossWeights {
    double motion = 1.0;
    double pose = 1.0;
    double affective = 1.0;
    double root = 1.0;
    double foot_contact = 1.0;
    double versor_reg = 0.01; // lambda_versor inside the motion loss
};

struct LossBreakdown {
    double motion = 0.0, pose = 0.0, affective = 0.0, root = 0.0, foot_contact = 0.0;
    double total = 0.0;
};

/// lambda-weighted sum of the five terms.
double total_loss(const LossBreakdown& parts, const LossWeights& weights);

// Templated per-step kernels shared between the plain API and the
// differentiable training path (R = double or grad::Scalar).

template <class R>
R sum_terms(std::vector<R>& terms) {
    R acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
    return acc;
}

/// Squared wrapped Euler-angle difference summed over joints, plus the
/// unit-norm regularizer on the raw quadruples.
template <class R>
R motion_loss_step(std::span<const Versor> truth, std::span<const QuatT<R>> pred_raw,
                   double lambda_versor) {
    std::vector<R> terms;
    terms.reserve(truth.size() * 4);
    for (std::size_t j = 0; j < truth.size(); ++j) {
        std::array<double, 3> et = euler_zyx(truth[j]);
        QuatT<R> qn = quat_normalized(pred_raw[j]);
        std::array<R, 3> ep = euler_zyx(qn);
        for (int c = 0; c < 3; ++c) {
            R d = wrap_angle(et[static_cast<std::size_t>(c)] - ep[static_cast<std::size_t>(c)]);
            terms.push_back(d * d);
        }
        R excess = quat_norm(pred_raw[j]) - 1.0;
        terms.push_back(excess * excess * lambda_versor);
    }
    return sum_terms(terms);
}

/// Root-relative squared position error summed over non-root joints.
template <class R>
R pose_loss_step(std::span<const Vec3> x_true, std::span<const Vec3T<R>> x_hat) {
    std::vector<R> terms;
    terms.reserve((x_true.size() - 1) * 3);
    for (std::size_t j = 1; j < x_true.size(); ++j) {
        R dx = (x_true[j].x - x_true[0].x) - (x_hat[j].x - x_hat[0].x);
        R dy = (x_true[j].y - x_true[0].y) - (x_hat[j].y - x_hat[0].y);
        R dz = (x_true[j].z - x_true[0].z) - (x_hat[j].z - x_hat[0].z);
        terms.push_back(dx * dx + dy * dy + dz * dz);
    }
    return sum_terms(terms);
}

template <class R>
R affective_loss_step(const AffectiveVector& truth, const std::array<R, kAffectiveDims>& pred) {
    std::vector<R> terms;
    terms.reserve(kAffectiveDims);
    for (int i = 0; i < kAffectiveDims; ++i) {
        R d = truth[static_cast<std::size_t>(i)] - pred[static_cast<std::size_t>(i)];
        terms.push_back(d * d);
    }
    return sum_terms(terms);
}

/// L1 over the [h, s, delta] triple.
template <class R>
R root_loss_step(const std::array<double, 3>& truth, const R& h, const R& s, const R& d) {
    using std::abs;
    return abs(truth[0] - h) + abs(truth[1] - s) + abs(truth[2] - d);
}

/// L1 over the 12 heel/toe coordinates.
template <class R>
R foot_contact_loss_step(const std::array<Vec3, 4>& truth, const std::array<Vec3T<R>, 4>& pred) {
    using std::abs;
    std::vector<R> terms;
    terms.reserve(12);
    for (int f = 0; f < 4; ++f) {
        const Vec3& t = truth[static_cast<std::size_t>(f)];
        const Vec3T<R>& p = pred[static_cast<std::size_t>(f)];
        terms.push_back(abs(t.x - p.x));
        terms.push_back(abs(t.y - p.y));
        terms.push_back(abs(t.z - p.z));
    }
    return sum_terms(terms);
}

// Plain (double) loss operations over prediction steps.

double loss_motion(std::span<const std::vector<Versor>> truth,
                   std::span<const std::vector<double>> pred_raw, double lambda_versor);
double loss_pose(std::span<const std::vector<Vec3>> x_true,
                 std::span<const std::vector<Vec3>> x_hat);
double loss_affective(std::span<const AffectiveVector> a_true,
                      std::span<const AffectiveVector> a_hat);
double loss_root(std::span<const std::array<double, 3>> root_true,
                 std::span<const std::array<double, 3>> root_hat);
double loss_foot_contact(std::span<const std::array<Vec3, 4>> feet_true,
                         std::span<const std::array<Vec3, 4>> feet_hat);

/// Ground truth for the predicted step(s) used when recording the training
/// loss. Poses must carry positions; feet indices refer to the skeleton.
struct StepTargets {
    const Skeleton* skeleton = nullptr;
    const FeatureDefinitionTable* feature_defs = nullptr;
    FootJointIndices feet;
    std::vector<const Pose*> poses;                 // [T_pred]
    std::vector<AffectiveVector> affective;         // [T_pred]
    std::vector<std::array<double, 3>> root;        // [T_pred] (h, s, delta)
};

/// Differentiable loss over one prediction: builds the scalar-tape graph
/// (versor normalization, FK at the true root, feature extraction, Euler
/// conversion, the five losses), backpropagates it, and returns both the
/// loss values and the gradient seeds for the tensor-tape outputs.
struct RecordedLoss {
    LossBreakdown values;
    std::vector<double> d_versors_raw;
    std::vector<double> d_height_dev;
    std::vector<double> d_speed;
    std::vector<double> d_orient_diff;
};
RecordedLoss record_loss(const std::vector<double>& versors_raw, const std::vector<double>& h_hat,
                         const std::vector<double>& s_hat, const std::vector<double>& d_hat,
                         const StepTargets& targets, const LossWeights& weights,
                         const ModelConfig& config);

} // namespace emogait
