#include "emogait/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace emogait {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ValidationError("train config: learning_rate must be > 0");
    if (lr_decay <= 0.0 || lr_decay > 1.0) throw ValidationError("train config: lr_decay must be in (0, 1]");
    if (teacher_forcing_decay <= 0.0 || teacher_forcing_decay > 1.0) {
        throw ValidationError("train config: teacher_forcing_decay must be in (0, 1]");
    }
    if (epochs < 1 || batch_size < 1) throw ValidationError("train config: epochs and batch_size must be >= 1");
}

std::string TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["learning_rate"] = learning_rate;
    j["lr_decay"] = lr_decay;
    j["teacher_forcing_decay"] = teacher_forcing_decay;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["lambda_motion"] = lambdas.motion;
    j["lambda_pose"] = lambdas.pose;
    j["lambda_affective"] = lambdas.affective;
    j["lambda_root"] = lambdas.root;
    j["lambda_foot_contact"] = lambdas.foot_contact;
    j["lambda_versor"] = lambdas.versor_reg;
    j["grad_clip_norm"] = grad_clip_norm;
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.teacher_forcing_decay = j.value("teacher_forcing_decay", c.teacher_forcing_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.lambdas.motion = j.value("lambda_motion", c.lambdas.motion);
    c.lambdas.pose = j.value("lambda_pose", c.lambdas.pose);
    c.lambdas.affective = j.value("lambda_affective", c.lambdas.affective);
    c.lambdas.root = j.value("lambda_root", c.lambdas.root);
    c.lambdas.foot_contact = j.value("lambda_foot_contact", c.lambdas.foot_contact);
    c.lambdas.versor_reg = j.value("lambda_versor", c.lambdas.versor_reg);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
    c.validate();
    return c;
}

CurriculumState CurriculumState::at_epoch(int epoch, double beta) {
    CurriculumState s;
    s.epoch = epoch;
    s.teacher_forcing_prob = std::pow(beta, static_cast<double>(epoch));
    return s;
}

namespace {

/// Working copy of one gait: ground-truth frames progressively replaced by
/// model predictions under the curriculum, with re-extracted features for the
/// replaced frames.
struct WorkSequence {
    const Gait* truth = nullptr;
    const GaitFeatures* truth_features = nullptr;
    Gait work;
    GaitFeatures features;

    void reset() {
        work = *truth;
        features = *truth_features;
    }
};

struct FrameState {
    Pose pose;
    AffectiveVector affective{};
    double height_dev = 0.0, speed = 0.0, orient_diff = 0.0;
};

FrameState truth_frame_state(const Gait& gait, const GaitFeatures& f, int t) {
    auto ti = static_cast<std::size_t>(t);
    return {gait.frames[ti], f.affective[ti],
            f.root.height_dev[ti], f.root.speed[ti], f.root.orient_diff[ti]};
}

FrameState predicted_frame_state(const Prediction& pred, const Gait& truth_gait,
                                 const FeatureDefinitionTable& defs, int t) {
    // The predicted pose keeps the data root position: the trajectory is a
    // control during training, while h/s/delta carry the predicted root
    // features. Versors feed back exactly as emitted: the network regresses
    // toward the hemisphere-aligned data, so its raw sign is already the
    // continuous gauge, and dot-based re-flipping injects sign noise.
    FrameState fs;
    fs.pose = forward_kinematics(truth_gait.skeleton,
                                 truth_gait.frames[static_cast<std::size_t>(t)].positions[0],
                                 pred.versors[0]);
    fs.affective = extract_affective(fs.pose, defs);
    fs.height_dev = pred.height_dev[0];
    fs.speed = pred.speed[0];
    fs.orient_diff = pred.orient_diff[0];
    return fs;
}

void apply_frame_state(WorkSequence& seq, int t, const FrameState& fs) {
    auto ti = static_cast<std::size_t>(t);
    seq.work.frames[ti] = fs.pose;
    seq.features.affective[ti] = fs.affective;
    seq.features.root.height_dev[ti] = fs.height_dev;
    seq.features.root.speed[ti] = fs.speed;
    seq.features.root.orient_diff[ti] = fs.orient_diff;
}

struct WindowOutcome {
    LossBreakdown loss;
    Prediction prediction;
    bool degenerate = false;
};

/// Forward + loss for the window ending right before frame t; when training,
/// gradient seeds flow back through the tensor tape into the store.
WindowOutcome run_window(WorkSequence& seq, int t, grad::ParameterStore& store,
                         const ModelConfig& mc, const LossWeights& weights,
                         const FeatureDefinitionTable& defs, const FootJointIndices& feet,
                         bool with_grad) {
    const Gait& truth = *seq.truth;
    const GaitFeatures& tf = *seq.truth_features;
    int begin = t - mc.window;
    EncoderInputs inputs = build_encoder_inputs(seq.work, seq.features, truth.emotion, begin, t, mc);

    grad::Tape tape;
    ModelVars vars = record_forward(tape, inputs, store, mc);

    StepTargets targets;
    targets.skeleton = &truth.skeleton;
    targets.feature_defs = &defs;
    targets.feet = feet;
    auto ti = static_cast<std::size_t>(t);
    targets.poses = {&truth.frames[ti]};
    targets.affective = {tf.affective[ti]};
    targets.root = {{tf.root.height_dev[ti], tf.root.speed[ti], tf.root.orient_diff[ti]}};

    WindowOutcome out;
    try {
        RecordedLoss rec = record_loss(tape.value(vars.versors_raw).values,
                                       tape.value(vars.height_dev).values,
                                       tape.value(vars.speed).values,
                                       tape.value(vars.orient_diff).values, targets, weights, mc);
        out.loss = rec.values;
        if (with_grad) {
            tape.add_grad(vars.versors_raw, rec.d_versors_raw);
            tape.add_grad(vars.height_dev, rec.d_height_dev);
            tape.add_grad(vars.speed, rec.d_speed);
            tape.add_grad(vars.orient_diff, rec.d_orient_diff);
            tape.backward();
        }
    } catch (const DegeneratePoseError&) {
        out.degenerate = true;
        return out;
    }
    out.prediction = Prediction{};
    {
        const auto& raw = tape.value(vars.versors_raw).values;
        out.prediction.versors_raw.push_back(raw);
        std::vector<Versor> vs;
        for (std::size_t j = 0; j + 3 < raw.size(); j += 4) {
            Versor q{raw[j], raw[j + 1], raw[j + 2], raw[j + 3]};
            double n = quat_norm(q);
            if (!(n > 1e-12)) throw NumericalError("prediction produced a zero-norm versor");
            vs.push_back({q.w / n, q.x / n, q.y / n, q.z / n});
        }
        out.prediction.versors.push_back(std::move(vs));
        out.prediction.height_dev = tape.value(vars.height_dev).values;
        out.prediction.speed = tape.value(vars.speed).values;
        out.prediction.orient_diff = tape.value(vars.orient_diff).values;
    }
    return out;
}

} // namespace

TrainResult train(const Corpus& corpus, const ModelConfig& mc, const TrainConfig& tc,
                  grad::ParameterStore& store, const FeatureDefinitionTable* feature_table) {
    mc.validate();
    tc.validate();
    if (corpus.train.empty()) throw ValidationError("train: empty training set");
    for (const Gait& g : corpus.train) {
        if (g.length() <= mc.window) {
            throw ValidationError("train: every training gait must be longer than the model window");
        }
    }

    const FeatureDefinitionTable defs =
        feature_table != nullptr ? *feature_table : default_feature_table(corpus.train[0].skeleton);
    const FootJointIndices feet = resolve_foot_joints(corpus.train[0].skeleton);

    std::vector<GaitFeatures> train_features, val_features;
    for (const Gait& g : corpus.train) train_features.push_back(extract_gait_features(g, defs));
    for (const Gait& g : corpus.val) val_features.push_back(extract_gait_features(g, defs));

    Rng order_rng = Rng::for_purpose(tc.seed, "order");
    Rng curriculum_rng = Rng::for_purpose(tc.seed, "curriculum");

    TrainResult result;
    int batch_count = 0;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        CurriculumState cur = CurriculumState::at_epoch(epoch, tc.teacher_forcing_decay);
        const double lr = tc.learning_rate * std::pow(tc.lr_decay, static_cast<double>(epoch));

        std::vector<std::size_t> order(corpus.train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.tf_prob = cur.teacher_forcing_prob;
        std::int64_t windows = 0;

        store.zero_grads();
        batch_count = 0;
        for (std::size_t gi : order) {
            WorkSequence seq;
            seq.truth = &corpus.train[gi];
            seq.truth_features = &train_features[gi];
            seq.reset();
            const int len = seq.truth->length();
            for (int t = mc.window; t < len; ++t) {
                WindowOutcome out;
                try {
                    out = run_window(seq, t, store, mc, tc.lambdas, defs, feet, true);
                } catch (const NumericalError& e) {
                    throw NumericalError("training aborted at epoch " + std::to_string(epoch) +
                                         ", frame " + std::to_string(t) + ": " + e.what());
                }
                if (out.degenerate) {
                    ++result.skipped_degenerate_windows;
                    continue;
                }
                log.motion += out.loss.motion;
                log.pose += out.loss.pose;
                log.affective += out.loss.affective;
                log.root += out.loss.root;
                log.foot_contact += out.loss.foot_contact;
                log.train_total += total_loss(out.loss, tc.lambdas);
                ++windows;
                ++batch_count;
                if (batch_count == tc.batch_size) {
                    // Average the accumulated window gradients before the step.
                    for (const std::string& name : store.names()) {
                        for (double& g : store.get(name).grad) g /= static_cast<double>(batch_count);
                    }
                    clip_grad_norm(store, tc.grad_clip_norm);
                    adam_step(store, lr);
                    batch_count = 0;
                }
                FrameState truth_state = truth_frame_state(*seq.truth, *seq.truth_features, t);
                FrameState pred_state = predicted_frame_state(out.prediction, *seq.truth, defs, t);
                ++log.tf_total_draws;
                const FrameState& chosen =
                    curriculum_mix(truth_state, pred_state, cur.teacher_forcing_prob, curriculum_rng);
                if (&chosen == &truth_state) ++log.tf_truth_draws;
                apply_frame_state(seq, t, chosen);
            }
        }
        if (batch_count > 0) {
            for (const std::string& name : store.names()) {
                for (double& g : store.get(name).grad) g /= static_cast<double>(batch_count);
            }
            clip_grad_norm(store, tc.grad_clip_norm);
            adam_step(store, lr);
            batch_count = 0;
        }
        if (windows > 0) {
            double n = static_cast<double>(windows);
            log.train_total /= n;
            log.motion /= n;
            log.pose /= n;
            log.affective /= n;
            log.root /= n;
            log.foot_contact /= n;
        }

        // Validation: teacher forcing off (the model always sees its own
        // predictions once past the seed window); no gradients.
        double val_total = 0.0;
        std::int64_t val_windows = 0;
        for (std::size_t gi = 0; gi < corpus.val.size(); ++gi) {
            WorkSequence seq;
            seq.truth = &corpus.val[gi];
            seq.truth_features = &val_features[gi];
            seq.reset();
            const int len = seq.truth->length();
            if (len <= mc.window) continue;
            for (int t = mc.window; t < len; ++t) {
                WindowOutcome out = run_window(seq, t, store, mc, tc.lambdas, defs, feet, false);
                if (out.degenerate) continue;
                val_total += total_loss(out.loss, tc.lambdas);
                ++val_windows;
                apply_frame_state(seq, t,
                                  predicted_frame_state(out.prediction, *seq.truth, defs, t));
            }
        }
        log.val_total = val_windows > 0 ? val_total / static_cast<double>(val_windows) : log.train_total;
        result.log.push_back(log);

        if (log.val_total < result.best_val) {
            result.best_val = log.val_total;
            result.best_epoch = epoch;
            nlohmann::ordered_json meta;
            meta["model"] = nlohmann::ordered_json::parse(mc.to_json());
            meta["train"] = nlohmann::ordered_json::parse(tc.to_json());
            meta["epoch"] = epoch;
            result.best_checkpoint = grad::checkpoint_to_string(store, meta.dump());
        }
    }
    return result;
}

double bbox_diagonal(const Gait& gait) {
    if (gait.frames.empty()) throw ValidationError("bbox_diagonal: empty gait");
    Vec3 lo = gait.frames[0].positions[0], hi = lo;
    for (const Pose& f : gait.frames) {
        for (const Vec3& p : f.positions) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
    }
    return norm(hi - lo);
}

void accumulate_pose_errors(const Pose& truth, const Pose& predicted, PoseErrorSums& sums) {
    if (truth.positions.size() != predicted.positions.size() ||
        truth.rotations.size() != predicted.rotations.size()) {
        throw ShapeError("accumulate_pose_errors: pose sizes disagree");
    }
    for (std::size_t j = 0; j < truth.positions.size(); ++j) {
        sums.position_sum += distance(truth.positions[j], predicted.positions[j]);
        ++sums.position_count;
    }
    for (std::size_t j = 0; j < truth.rotations.size(); ++j) {
        auto et = quat_to_euler(truth.rotations[j]);
        auto ep = quat_to_euler(predicted.rotations[j]);
        for (int c = 0; c < 3; ++c) {
            sums.rotation_sum += std::abs(wrap_angle(et[static_cast<std::size_t>(c)] -
                                                     ep[static_cast<std::size_t>(c)]));
            ++sums.rotation_count;
        }
    }
}

EvalResult evaluate(grad::ParameterStore& store, const ModelConfig& mc,
                    std::span<const Gait> test_set, const FeatureDefinitionTable* feature_table) {
    constexpr int kSeedFrames = 18;
    constexpr int kClipFrames = 60;
    EvalResult result;
    double per_clip_pose = 0.0, per_clip_rot = 0.0;

    for (const Gait& truth : test_set) {
        if (truth.length() < kClipFrames) {
            std::cerr << "evaluate: skipping clip with " << truth.length() << " frames (< "
                      << kClipFrames << ")\n";
            ++result.clips_skipped;
            continue;
        }
        if (mc.window > kSeedFrames) {
            throw ValidationError("evaluate: model window exceeds the 18-frame seed protocol");
        }
        const FeatureDefinitionTable defs =
            feature_table != nullptr ? *feature_table : default_feature_table(truth.skeleton);
        GaitFeatures tf = extract_gait_features(truth, defs);
        double diag = bbox_diagonal(truth);
        if (diag <= 0.0) throw ValidationError("evaluate: degenerate clip bounding box");

        Gait work = truth;
        GaitFeatures wf = tf; // controls stay ground truth; affective tracks predictions
        PoseErrorSums sums;
        for (int t = kSeedFrames; t < kClipFrames; ++t) {
            EncoderInputs inputs =
                build_encoder_inputs(work, wf, truth.emotion, t - mc.window, t, mc);
            Prediction pred = predict(inputs, store, mc);
            Pose pose = forward_kinematics(truth.skeleton,
                                           truth.frames[static_cast<std::size_t>(t)].positions[0],
                                           pred.versors[0]);
            accumulate_pose_errors(truth.frames[static_cast<std::size_t>(t)], pose, sums);
            work.frames[static_cast<std::size_t>(t)] = pose;
            wf.affective[static_cast<std::size_t>(t)] = extract_affective(pose, defs);
        }
        per_clip_pose += (sums.position_sum / sums.position_count) / diag;
        per_clip_rot += (sums.rotation_sum / sums.rotation_count) * 180.0 / kPi;
        ++result.clips_evaluated;
    }
    if (result.clips_evaluated > 0) {
        result.pose_error = per_clip_pose / result.clips_evaluated;
        result.rotation_error_deg = per_clip_rot / result.clips_evaluated;
    }
    return result;
}

void write_loss_log_csv(const std::string& path, std::span<const EpochLog> log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open loss log for writing: " + path);
    out << "epoch,train_total,motion,pose,affective,root,foot_contact,val_total,lr,tf_prob\n";
    char buf[512];
    for (const EpochLog& row : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      row.epoch, row.train_total, row.motion, row.pose, row.affective, row.root,
                      row.foot_contact, row.val_total, row.lr, row.tf_prob);
        out << buf;
    }
}

} // namespace emogait
