#include "emogait/model.hpp"

#include <cmath>

#include <json.hpp>

namespace emogait {

void ModelConfig::validate() const {
    if (emotion_dims < 1 || joint_count < 2 || window < 1 || pred_steps < 1) {
        throw ValidationError("model config: dimensions must be positive");
    }
    if (h1 < 1 || h2 < 1 || h3 < 1 || h4 < 3) {
        throw ValidationError("model config: hidden widths must be positive (h4 >= 3)");
    }
}

std::string ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["emotion_dims"] = emotion_dims;
    j["joint_count"] = joint_count;
    j["window"] = window;
    j["pred_steps"] = pred_steps;
    j["h1"] = h1;
    j["h2"] = h2;
    j["h3"] = h3;
    j["h4"] = h4;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.emotion_dims = j.value("emotion_dims", c.emotion_dims);
    c.joint_count = j.value("joint_count", c.joint_count);
    c.window = j.value("window", c.window);
    c.pred_steps = j.value("pred_steps", c.pred_steps);
    c.h1 = j.value("h1", c.h1);
    c.h2 = j.value("h2", c.h2);
    c.h3 = j.value("h3", c.h3);
    c.h4 = j.value("h4", c.h4);
    c.validate();
    return c;
}

GaitFeatures extract_gait_features(const Gait& gait, const FeatureDefinitionTable& defs,
                                   const ContactParams& contact_params,
                                   const PhaseFallback* phase_fallback) {
    GaitFeatures f;
    f.affective.reserve(gait.frames.size());
    for (const Pose& p : gait.frames) f.affective.push_back(extract_affective(p, defs));
    f.root = extract_root_features(gait);
    try {
        std::vector<FootContact> contacts = detect_foot_contacts(gait, contact_params);
        f.stepping = stepping_phase(contacts, gait.length());
    } catch (const InsufficientStepsError&) {
        if (phase_fallback == nullptr) throw;
        int n = gait.length();
        f.stepping.phase.resize(static_cast<std::size_t>(n));
        f.stepping.frequency.assign(static_cast<std::size_t>(n), phase_fallback->omega);
        for (int t = 0; t < n; ++t) {
            f.stepping.phase[static_cast<std::size_t>(t)] =
                wrap_angle_positive(phase_fallback->theta0 + phase_fallback->omega * t);
        }
    }
    return f;
}

void EncoderInputs::validate(const ModelConfig& config) const {
    std::size_t n = versors.size();
    if (affective_emotion.size() != n || stepping_emotion.size() != n || root.size() != n) {
        throw ShapeError("encoder inputs: per-frame sequences must share one length");
    }
    for (std::size_t t = 0; t < n; ++t) {
        if (static_cast<int>(affective_emotion[t].size()) != config.affective_input_dims()) {
            throw ShapeError("encoder inputs: i1 row has wrong width");
        }
        if (static_cast<int>(stepping_emotion[t].size()) != config.stepping_input_dims()) {
            throw ShapeError("encoder inputs: i2 row has wrong width");
        }
        if (static_cast<int>(versors[t].size()) != config.versor_dims()) {
            throw ShapeError("encoder inputs: versor row has wrong width");
        }
    }
}

EncoderInputs build_encoder_inputs(const Gait& gait, const GaitFeatures& features,
                                   std::span<const EmotionVector> emotions, int begin, int end,
                                   const ModelConfig& config) {
    if (begin < 0 || end > gait.length() || begin >= end) {
        throw ShapeError("build_encoder_inputs: bad frame range");
    }
    EncoderInputs in;
    for (int t = begin; t < end; ++t) {
        auto ti = static_cast<std::size_t>(t);
        const EmotionVector& m = emotions[ti];
        if (m.dims() != config.emotion_dims) {
            throw ShapeError("build_encoder_inputs: emotion dimension mismatch");
        }
        std::vector<double> i1;
        i1.reserve(static_cast<std::size_t>(config.affective_input_dims()));
        for (double v : features.affective[ti]) i1.push_back(v);
        for (double v : m.components) i1.push_back(v);
        in.affective_emotion.push_back(std::move(i1));

        std::vector<double> i2;
        i2.reserve(static_cast<std::size_t>(config.stepping_input_dims()));
        double theta = features.stepping.phase[ti];
        i2.push_back(std::sin(theta));
        i2.push_back(std::cos(theta));
        i2.push_back(features.stepping.frequency[ti]);
        i2.push_back(features.root.speed_lp[ti]);
        i2.push_back(features.root.curvature[ti]);
        for (double v : m.components) i2.push_back(v);
        in.stepping_emotion.push_back(std::move(i2));

        const Pose& pose = gait.frames[ti];
        if (static_cast<int>(pose.rotations.size()) != config.joint_count - 1) {
            throw ShapeError("build_encoder_inputs: pose lacks versors");
        }
        std::vector<double> q;
        q.reserve(static_cast<std::size_t>(config.versor_dims()));
        for (const Versor& r : pose.rotations) {
            q.push_back(r.w);
            q.push_back(r.x);
            q.push_back(r.y);
            q.push_back(r.z);
        }
        in.versors.push_back(std::move(q));

        in.root.push_back({features.root.height_dev[ti], features.root.speed[ti],
                           features.root.orient_diff[ti]});
    }
    in.validate(config);
    return in;
}

EncoderInputs build_encoder_inputs(const Gait& gait, const GaitFeatures& features,
                                   const EmotionVector& emotion, int begin, int end,
                                   const ModelConfig& config) {
    std::vector<EmotionVector> all(static_cast<std::size_t>(gait.length()), emotion);
    return build_encoder_inputs(gait, features, all, begin, end, config);
}

void init_model_params(grad::ParameterStore& store, const ModelConfig& config, Rng& rng) {
    config.validate();
    auto glorot = [&](const std::string& name, int out, int in, int fan_out) {
        grad::Tensor& w = store.create(name + ".w", {out, in});
        double bound = std::sqrt(6.0 / static_cast<double>(in + fan_out));
        for (double& v : w.values) v = rng.uniform(-bound, bound);
        store.create(name + ".b", {out});
    };
    auto dense_init = [&](const std::string& name, int out, int in) { glorot(name, out, in, out); };

    dense_init("enc1.l0", config.h1, config.affective_input_dims());
    dense_init("enc1.l1", config.h1, config.h1);
    dense_init("enc1.l2", config.h1, config.h1);
    dense_init("enc2.l0", config.h2, config.stepping_input_dims());
    dense_init("enc2.l1", config.h2, config.h2);
    dense_init("enc2.l2", config.h2, config.h2);
    int gru_in = config.versor_dims() + config.gamma_dims();
    glorot("gru.ih", 3 * config.h3, gru_in, config.h3);
    glorot("gru.hh", 3 * config.h3, config.h3, config.h3);
    dense_init("root", config.h4, 3 + config.gamma_dims());
    dense_init("pred.versors.l0", config.h3, config.h3);
    dense_init("pred.versors.l1", config.pred_steps * config.versor_dims(), config.h3);
    auto split = config.root_latent_split();
    dense_init("pred.h", config.pred_steps, split[0]);
    dense_init("pred.s", config.pred_steps, split[1]);
    dense_init("pred.delta", config.pred_steps, split[2]);
}

ModelVars record_forward(grad::Tape& tape, const EncoderInputs& inputs,
                         grad::ParameterStore& store, const ModelConfig& config) {
    inputs.validate(config);
    const int T = inputs.length();
    if (T < 1) throw ShapeError("record_forward: empty input window");

    auto P = [&](const char* n) { return tape.param(&store.get(n)); };
    grad::Var e1w0 = P("enc1.l0.w"), e1b0 = P("enc1.l0.b");
    grad::Var e1w1 = P("enc1.l1.w"), e1b1 = P("enc1.l1.b");
    grad::Var e1w2 = P("enc1.l2.w"), e1b2 = P("enc1.l2.b");
    grad::Var e2w0 = P("enc2.l0.w"), e2b0 = P("enc2.l0.b");
    grad::Var e2w1 = P("enc2.l1.w"), e2b1 = P("enc2.l1.b");
    grad::Var e2w2 = P("enc2.l2.w"), e2b2 = P("enc2.l2.b");
    grad::GruParamVars gru{P("gru.ih.w"), P("gru.hh.w"), P("gru.ih.b"), P("gru.hh.b")};
    grad::Var rw = P("root.w"), rb = P("root.b");
    grad::Var pv0w = P("pred.versors.l0.w"), pv0b = P("pred.versors.l0.b");
    grad::Var pv1w = P("pred.versors.l1.w"), pv1b = P("pred.versors.l1.b");
    grad::Var phw = P("pred.h.w"), phb = P("pred.h.b");
    grad::Var psw = P("pred.s.w"), psb = P("pred.s.b");
    grad::Var pdw = P("pred.delta.w"), pdb = P("pred.delta.b");

    ModelVars out;
    std::vector<grad::Var> gru_inputs;
    gru_inputs.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        auto ti = static_cast<std::size_t>(t);
        grad::Var i1 = tape.leaf(inputs.affective_emotion[ti]);
        grad::Var g1 = tape.elu(tape.dense(e1w0, e1b0, i1));
        g1 = tape.elu(tape.dense(e1w1, e1b1, g1));
        g1 = tape.elu(tape.dense(e1w2, e1b2, g1));
        grad::Var i2 = tape.leaf(inputs.stepping_emotion[ti]);
        grad::Var g2 = tape.elu(tape.dense(e2w0, e2b0, i2));
        g2 = tape.elu(tape.dense(e2w1, e2b1, g2));
        g2 = tape.elu(tape.dense(e2w2, e2b2, g2));
        std::array<grad::Var, 2> gs{g1, g2};
        grad::Var gamma = tape.concat(gs);
        out.gamma.push_back(gamma);

        grad::Var q = tape.leaf(inputs.versors[ti]);
        std::array<grad::Var, 2> qg{q, gamma};
        gru_inputs.push_back(tape.concat(qg));

        grad::Var root_in = tape.leaf(std::vector<double>{inputs.root[ti][0], inputs.root[ti][1],
                                                          inputs.root[ti][2]});
        std::array<grad::Var, 2> rg{root_in, gamma};
        out.root_tilde.push_back(tape.elu(tape.dense(rw, rb, tape.concat(rg))));
    }
    grad::Var h0 = tape.leaf(grad::Tensor::zeros({config.h3}));
    out.q_tilde = grad::gru_forward(tape, gru, gru_inputs, h0);

    grad::Var hidden = tape.elu(tape.dense(pv0w, pv0b, out.q_tilde.back()));
    out.versors_raw = tape.dense(pv1w, pv1b, hidden);

    auto split = config.root_latent_split();
    grad::Var rt = out.root_tilde.back();
    out.height_dev = tape.dense(phw, phb, tape.slice(rt, 0, split[0]));
    out.speed = tape.dense(psw, psb, tape.slice(rt, split[0], split[1]));
    out.orient_diff = tape.dense(pdw, pdb, tape.slice(rt, split[0] + split[1], split[2]));
    return out;
}

namespace {

Prediction prediction_from_values(const std::vector<double>& raw, const std::vector<double>& h,
                                  const std::vector<double>& s, const std::vector<double>& d,
                                  const ModelConfig& config) {
    Prediction p;
    const int per_step = config.versor_dims();
    p.height_dev = h;
    p.speed = s;
    p.orient_diff = d;
    for (int k = 0; k < config.pred_steps; ++k) {
        auto begin = raw.begin() + static_cast<std::ptrdiff_t>(k * per_step);
        std::vector<double> step_raw(begin, begin + per_step);
        std::vector<Versor> step_versors;
        step_versors.reserve(static_cast<std::size_t>(config.joint_count - 1));
        for (int j = 0; j + 3 < per_step; j += 4) {
            Versor q{step_raw[static_cast<std::size_t>(j)], step_raw[static_cast<std::size_t>(j + 1)],
                     step_raw[static_cast<std::size_t>(j + 2)], step_raw[static_cast<std::size_t>(j + 3)]};
            double n = quat_norm(q);
            if (!(n > 1e-12)) {
                throw NumericalError("predict: zero-norm raw versor quadruple");
            }
            step_versors.push_back({q.w / n, q.x / n, q.y / n, q.z / n});
        }
        p.versors_raw.push_back(std::move(step_raw));
        p.versors.push_back(std::move(step_versors));
    }
    return p;
}

} // namespace

LatentState encode(const EncoderInputs& inputs, grad::ParameterStore& store,
                   const ModelConfig& config) {
    grad::Tape tape;
    ModelVars vars = record_forward(tape, inputs, store, config);
    LatentState s;
    for (grad::Var g : vars.gamma) s.gamma.push_back(tape.value(g).values);
    for (grad::Var q : vars.q_tilde) s.q_tilde.push_back(tape.value(q).values);
    for (grad::Var r : vars.root_tilde) s.root_tilde.push_back(tape.value(r).values);
    return s;
}

Prediction predict_from_latent(const LatentState& latent, grad::ParameterStore& store,
                               const ModelConfig& config) {
    if (latent.q_tilde.empty() || latent.root_tilde.empty()) {
        throw ShapeError("predict_from_latent: empty latent state");
    }
    grad::Tape tape;
    grad::Var qt = tape.leaf(latent.q_tilde.back());
    grad::Var rt = tape.leaf(latent.root_tilde.back());
    grad::Var hidden = tape.elu(tape.dense(tape.param(&store.get("pred.versors.l0.w")),
                                           tape.param(&store.get("pred.versors.l0.b")), qt));
    grad::Var raw = tape.dense(tape.param(&store.get("pred.versors.l1.w")),
                               tape.param(&store.get("pred.versors.l1.b")), hidden);
    auto split = config.root_latent_split();
    grad::Var h = tape.dense(tape.param(&store.get("pred.h.w")), tape.param(&store.get("pred.h.b")),
                             tape.slice(rt, 0, split[0]));
    grad::Var s = tape.dense(tape.param(&store.get("pred.s.w")), tape.param(&store.get("pred.s.b")),
                             tape.slice(rt, split[0], split[1]));
    grad::Var d = tape.dense(tape.param(&store.get("pred.delta.w")),
                             tape.param(&store.get("pred.delta.b")),
                             tape.slice(rt, split[0] + split[1], split[2]));
    return prediction_from_values(tape.value(raw).values, tape.value(h).values, tape.value(s).values,
                                  tape.value(d).values, config);
}

Prediction predict(const EncoderInputs& inputs, grad::ParameterStore& store,
                   const ModelConfig& config) {
    grad::Tape tape;
    ModelVars vars = record_forward(tape, inputs, store, config);
    return prediction_from_values(tape.value(vars.versors_raw).values,
                                  tape.value(vars.height_dev).values, tape.value(vars.speed).values,
                                  tape.value(vars.orient_diff).values, config);
}

double total_loss(const LossBreakdown& parts, const LossWeights& weights) {
    return weights.motion * parts.motion + weights.pose * parts.pose +
           weights.affective * parts.affective + weights.root * parts.root +
           weights.foot_contact * parts.foot_contact;
}

double loss_motion(std::span<const std::vector<Versor>> truth,
                   std::span<const std::vector<double>> pred_raw, double lambda_versor) {
    if (truth.size() != pred_raw.size()) throw ShapeError("loss_motion: step count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        std::vector<Versor> raw;
        raw.reserve(truth[k].size());
        if (pred_raw[k].size() != truth[k].size() * 4) {
            throw ShapeError("loss_motion: quadruple count mismatch");
        }
        for (std::size_t j = 0; j < truth[k].size(); ++j) {
            raw.push_back({pred_raw[k][4 * j], pred_raw[k][4 * j + 1], pred_raw[k][4 * j + 2],
                           pred_raw[k][4 * j + 3]});
        }
        acc += motion_loss_step<double>(truth[k], raw, lambda_versor);
    }
    return acc;
}

double loss_pose(std::span<const std::vector<Vec3>> x_true, std::span<const std::vector<Vec3>> x_hat) {
    if (x_true.size() != x_hat.size()) throw ShapeError("loss_pose: step count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < x_true.size(); ++k) {
        if (x_true[k].size() != x_hat[k].size()) throw ShapeError("loss_pose: joint count mismatch");
        acc += pose_loss_step<double>(x_true[k], x_hat[k]);
    }
    return acc;
}

double loss_affective(std::span<const AffectiveVector> a_true, std::span<const AffectiveVector> a_hat) {
    if (a_true.size() != a_hat.size()) throw ShapeError("loss_affective: step count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a_true.size(); ++k) {
        std::array<double, kAffectiveDims> pred = a_hat[k];
        acc += affective_loss_step<double>(a_true[k], pred);
    }
    return acc;
}

double loss_root(std::span<const std::array<double, 3>> root_true,
                 std::span<const std::array<double, 3>> root_hat) {
    if (root_true.size() != root_hat.size()) throw ShapeError("loss_root: step count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < root_true.size(); ++k) {
        acc += root_loss_step<double>(root_true[k], root_hat[k][0], root_hat[k][1], root_hat[k][2]);
    }
    return acc;
}

double loss_foot_contact(std::span<const std::array<Vec3, 4>> feet_true,
                         std::span<const std::array<Vec3, 4>> feet_hat) {
    if (feet_true.size() != feet_hat.size()) throw ShapeError("loss_foot_contact: step count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < feet_true.size(); ++k) {
        acc += foot_contact_loss_step<double>(feet_true[k], feet_hat[k]);
    }
    return acc;
}

RecordedLoss record_loss(const std::vector<double>& versors_raw, const std::vector<double>& h_hat,
                         const std::vector<double>& s_hat, const std::vector<double>& d_hat,
                         const StepTargets& targets, const LossWeights& weights,
                         const ModelConfig& config) {
    using grad::Scalar;
    const int steps = config.pred_steps;
    const int per_step = config.versor_dims();
    if (static_cast<int>(versors_raw.size()) != steps * per_step ||
        static_cast<int>(h_hat.size()) != steps || static_cast<int>(s_hat.size()) != steps ||
        static_cast<int>(d_hat.size()) != steps) {
        throw ShapeError("record_loss: prediction sizes do not match config");
    }
    if (static_cast<int>(targets.poses.size()) != steps ||
        static_cast<int>(targets.affective.size()) != steps ||
        static_cast<int>(targets.root.size()) != steps) {
        throw ShapeError("record_loss: target sizes do not match config");
    }

    grad::ScalarTape tape;
    auto const_vec = [&](const Vec3& v) -> Vec3T<Scalar> {
        return {Scalar{&tape, tape.constant(v.x)}, Scalar{&tape, tape.constant(v.y)},
                Scalar{&tape, tape.constant(v.z)}};
    };

    std::vector<Scalar> raw_leaves;
    raw_leaves.reserve(versors_raw.size());
    for (double v : versors_raw) raw_leaves.push_back(grad::make_scalar(tape, v));
    std::vector<Scalar> h_leaves, s_leaves, d_leaves;
    for (double v : h_hat) h_leaves.push_back(grad::make_scalar(tape, v));
    for (double v : s_hat) s_leaves.push_back(grad::make_scalar(tape, v));
    for (double v : d_hat) d_leaves.push_back(grad::make_scalar(tape, v));

    std::vector<Scalar> motion_terms, pose_terms, aff_terms, root_terms, foot_terms;
    for (int k = 0; k < steps; ++k) {
        const Pose& truth = *targets.poses[static_cast<std::size_t>(k)];
        std::vector<QuatT<Scalar>> raw;
        raw.reserve(static_cast<std::size_t>(config.joint_count - 1));
        for (int j = 0; j < config.joint_count - 1; ++j) {
            int base = k * per_step + 4 * j;
            raw.push_back({raw_leaves[static_cast<std::size_t>(base)],
                           raw_leaves[static_cast<std::size_t>(base + 1)],
                           raw_leaves[static_cast<std::size_t>(base + 2)],
                           raw_leaves[static_cast<std::size_t>(base + 3)]});
            if (quat_norm(Versor{versors_raw[static_cast<std::size_t>(base)],
                                 versors_raw[static_cast<std::size_t>(base + 1)],
                                 versors_raw[static_cast<std::size_t>(base + 2)],
                                 versors_raw[static_cast<std::size_t>(base + 3)]}) <= 1e-12) {
                throw NumericalError("record_loss: zero-norm raw versor quadruple");
            }
        }
        motion_terms.push_back(
            motion_loss_step<Scalar>(truth.rotations, raw, weights.versor_reg));

        std::vector<QuatT<Scalar>> normalized;
        normalized.reserve(raw.size());
        for (const auto& q : raw) normalized.push_back(quat_normalized(q));
        // FK at the ground-truth root: the pose and foot losses compare bone
        // configurations; the root path itself is scored by the root loss.
        Vec3T<Scalar> root = const_vec(truth.positions[0]);
        std::vector<Vec3T<Scalar>> positions =
            fk_positions<Scalar>(*targets.skeleton, root, normalized);
        pose_terms.push_back(pose_loss_step<Scalar>(truth.positions, positions));

        std::array<Scalar, kAffectiveDims> aff =
            extract_affective_t<Scalar>(std::span<const Vec3T<Scalar>>(positions), *targets.feature_defs);
        aff_terms.push_back(
            affective_loss_step<Scalar>(targets.affective[static_cast<std::size_t>(k)], aff));

        root_terms.push_back(root_loss_step<Scalar>(targets.root[static_cast<std::size_t>(k)],
                                                    h_leaves[static_cast<std::size_t>(k)],
                                                    s_leaves[static_cast<std::size_t>(k)],
                                                    d_leaves[static_cast<std::size_t>(k)]));

        std::array<Vec3, 4> feet_true{
            truth.positions[static_cast<std::size_t>(targets.feet.left_heel)],
            truth.positions[static_cast<std::size_t>(targets.feet.left_toe)],
            truth.positions[static_cast<std::size_t>(targets.feet.right_heel)],
            truth.positions[static_cast<std::size_t>(targets.feet.right_toe)]};
        std::array<Vec3T<Scalar>, 4> feet_hat{
            positions[static_cast<std::size_t>(targets.feet.left_heel)],
            positions[static_cast<std::size_t>(targets.feet.left_toe)],
            positions[static_cast<std::size_t>(targets.feet.right_heel)],
            positions[static_cast<std::size_t>(targets.feet.right_toe)]};
        foot_terms.push_back(foot_contact_loss_step<Scalar>(feet_true, feet_hat));
    }

    Scalar motion = sum_terms(motion_terms);
    Scalar pose = sum_terms(pose_terms);
    Scalar aff = sum_terms(aff_terms);
    Scalar root = sum_terms(root_terms);
    Scalar foot = sum_terms(foot_terms);
    Scalar total = motion * weights.motion + pose * weights.pose + aff * weights.affective +
                   root * weights.root + foot * weights.foot_contact;

    RecordedLoss out;
    out.values.motion = grad::value_of(motion);
    out.values.pose = grad::value_of(pose);
    out.values.affective = grad::value_of(aff);
    out.values.root = grad::value_of(root);
    out.values.foot_contact = grad::value_of(foot);
    out.values.total = grad::value_of(total);
    if (!std::isfinite(out.values.total)) throw NumericalError("record_loss: non-finite loss");

    tape.backward(total.id);
    out.d_versors_raw.reserve(raw_leaves.size());
    for (const Scalar& s : raw_leaves) out.d_versors_raw.push_back(tape.adjoint(s.id));
    for (const Scalar& s : h_leaves) out.d_height_dev.push_back(tape.adjoint(s.id));
    for (const Scalar& s : s_leaves) out.d_speed.push_back(tape.adjoint(s.id));
    for (const Scalar& s : d_leaves) out.d_orient_diff.push_back(tape.adjoint(s.id));
    return out;
}

} // namespace emogait
