#include <benchmark/benchmark.h>

#include "emogait/grad/gradcheck.hpp"
#include "emogait/model.hpp"
#include "emogait/trainer.hpp"

using namespace emogait;

namespace {

std::vector<Versor> bench_pose_rotations(Rng& rng) {
    const Skeleton& sk = default_skeleton();
    std::vector<Versor> rot;
    for (int j = 1; j < sk.joint_count; ++j) {
        Vec3 axis{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (norm(axis) < 1e-6) axis = {0, 1, 0};
        rot.push_back(versor_from_axis_angle(axis, rng.uniform(-1.0, 1.0)));
    }
    return rot;
}

ModelConfig bench_config() {
    ModelConfig mc;
    mc.window = 12;
    mc.h1 = mc.h2 = 16;
    mc.h3 = 48;
    mc.h4 = 24;
    return mc;
}

EncoderInputs bench_inputs(const ModelConfig& mc, Rng& rng) {
    EncoderInputs in;
    for (int t = 0; t < mc.window; ++t) {
        std::vector<double> i1, i2, q;
        for (int i = 0; i < mc.affective_input_dims(); ++i) i1.push_back(rng.uniform(-1, 1));
        for (int i = 0; i < mc.stepping_input_dims(); ++i) i2.push_back(rng.uniform(-1, 1));
        for (int j = 0; j < mc.joint_count - 1; ++j) {
            q.push_back(1.0);
            q.push_back(0.0);
            q.push_back(0.0);
            q.push_back(0.0);
        }
        in.affective_emotion.push_back(std::move(i1));
        in.stepping_emotion.push_back(std::move(i2));
        in.versors.push_back(std::move(q));
        in.root.push_back({0.0, 0.1, 0.0});
    }
    return in;
}

} // namespace

static void BM_ForwardKinematics(benchmark::State& state) {
    const Skeleton& sk = default_skeleton();
    Rng rng(1);
    std::vector<Versor> rot = bench_pose_rotations(rng);
    for (auto _ : state) {
        Pose p = forward_kinematics(sk, {0, 0.9, 0}, rot);
        benchmark::DoNotOptimize(p.positions.data());
    }
}
BENCHMARK(BM_ForwardKinematics);

static void BM_ExtractAffective(benchmark::State& state) {
    const Skeleton& sk = default_skeleton();
    FeatureDefinitionTable defs = default_feature_table(sk);
    Rng rng(2);
    Pose p = forward_kinematics(sk, {0, 0.9, 0}, bench_pose_rotations(rng));
    for (auto _ : state) {
        AffectiveVector v = extract_affective(p, defs);
        benchmark::DoNotOptimize(v.data());
    }
}
BENCHMARK(BM_ExtractAffective);

static void BM_QuatToEuler(benchmark::State& state) {
    Rng rng(3);
    std::vector<Versor> rot = bench_pose_rotations(rng);
    for (auto _ : state) {
        for (const Versor& q : rot) {
            auto e = quat_to_euler(q);
            benchmark::DoNotOptimize(e.data());
        }
    }
}
BENCHMARK(BM_QuatToEuler);

static void BM_ModelForward(benchmark::State& state) {
    ModelConfig mc = bench_config();
    grad::ParameterStore ps;
    Rng init(4);
    init_model_params(ps, mc, init);
    Rng rng(5);
    EncoderInputs in = bench_inputs(mc, rng);
    for (auto _ : state) {
        Prediction p = predict(in, ps, mc);
        benchmark::DoNotOptimize(p.versors_raw.data());
    }
}
BENCHMARK(BM_ModelForward);

static void BM_TrainingWindow(benchmark::State& state) {
    // Forward + loss graph + backward for one sliding window, the unit of
    // training work.
    ModelConfig mc = bench_config();
    grad::ParameterStore ps;
    Rng init(6);
    init_model_params(ps, mc, init);
    Rng rng(7);
    EncoderInputs in = bench_inputs(mc, rng);
    const Skeleton& sk = default_skeleton();
    FeatureDefinitionTable defs = default_feature_table(sk);
    FootJointIndices feet = resolve_foot_joints(sk);
    Pose target_pose = forward_kinematics(sk, {0, 0.9, 0}, bench_pose_rotations(rng));
    StepTargets targets;
    targets.skeleton = &sk;
    targets.feature_defs = &defs;
    targets.feet = feet;
    targets.poses = {&target_pose};
    targets.affective = {extract_affective(target_pose, defs)};
    targets.root = {{0.0, 0.1, 0.0}};
    LossWeights weights;
    for (auto _ : state) {
        grad::Tape tape;
        ModelVars vars = record_forward(tape, in, ps, mc);
        RecordedLoss rec = record_loss(tape.value(vars.versors_raw).values,
                                       tape.value(vars.height_dev).values,
                                       tape.value(vars.speed).values,
                                       tape.value(vars.orient_diff).values, targets, weights, mc);
        tape.add_grad(vars.versors_raw, rec.d_versors_raw);
        tape.add_grad(vars.height_dev, rec.d_height_dev);
        tape.add_grad(vars.speed, rec.d_speed);
        tape.add_grad(vars.orient_diff, rec.d_orient_diff);
        tape.backward();
        benchmark::DoNotOptimize(rec.values.total);
        ps.zero_grads();
    }
}
BENCHMARK(BM_TrainingWindow);

BENCHMARK_MAIN();
