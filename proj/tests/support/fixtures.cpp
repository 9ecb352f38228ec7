#include "fixtures.hpp"

#include <cmath>

namespace emogait::fixtures {

namespace {

double smoothstep(double w) { return w * w * (3.0 - 2.0 * w); }

Versor axis_x(double angle) { return versor_from_axis_angle({1, 0, 0}, angle); }
Versor axis_z(double angle) { return versor_from_axis_angle({0, 0, 1}, angle); }

struct LegSolve {
    Versor knee, heel;
};

/// Two-bone solve from the hip to a heel target; the knee bends toward +Z.
LegSolve solve_leg(const Vec3& hip, const Vec3& heel_target, double l1, double l2) {
    Vec3 d = heel_target - hip;
    double dist = norm(d);
    double max_reach = 0.999 * (l1 + l2);
    if (dist > max_reach) dist = max_reach;
    if (dist < 1e-6) dist = 1e-6;
    Vec3 dir = scaled(d, 1.0 / norm(d));
    double a = (l1 * l1 - l2 * l2 + dist * dist) / (2.0 * dist);
    double h2 = l1 * l1 - a * a;
    double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    Vec3 perp = cross(dir, Vec3{1, 0, 0});
    double pn = norm(perp);
    if (pn < 1e-9) {
        perp = {0, 0, 1};
    } else {
        perp = scaled(perp, 1.0 / pn);
        if (perp.z < 0.0) perp = -perp;
    }
    Vec3 knee = hip + scaled(dir, a) + scaled(perp, h);
    Vec3 heel = hip + scaled(dir, dist);
    LegSolve out;
    out.knee = shortest_arc({0, -1, 0}, knee - hip);
    out.heel = shortest_arc({0, -1, 0}, heel - knee);
    return out;
}

/// Heel target for one foot at frame t: planted during the stance half-cycle,
/// a lifted smoothstep advance during swing.
Vec3 heel_track(double t, int half_period, double speed, double x_offset, double ground_y,
                double lift, double phase_shift) {
    const double cycle = 2.0 * half_period;
    double shifted = t - phase_shift;
    double k = std::floor(shifted / cycle);
    double u = shifted - k * cycle;
    const double stride = cycle * speed;
    const double reach = 0.5 * half_period * speed;
    double plant_z = (k * cycle + phase_shift) * speed + reach;
    if (u < static_cast<double>(half_period)) {
        return {x_offset, ground_y, plant_z};
    }
    double w = (u - half_period) / static_cast<double>(half_period);
    return {x_offset, ground_y + lift * std::sin(kPi * w), plant_z + smoothstep(w) * stride};
}

} // namespace

WalkStyle happy_style() {
    WalkStyle s;
    s.speed = 0.13;
    s.half_period = 4;
    s.arm_swing = 0.50;
    s.torso_pitch = -0.08;
    s.head_pitch = -0.10;
    s.step_lift = 0.06;
    s.bob = 0.014;
    s.emotion = EmotionVector({1, 0, 0, 0});
    return s;
}

WalkStyle sad_style() {
    WalkStyle s;
    s.speed = 0.06;
    s.half_period = 7;
    s.arm_swing = 0.12;
    s.torso_pitch = 0.30;
    s.head_pitch = 0.35;
    s.step_lift = 0.03;
    s.bob = 0.006;
    s.emotion = EmotionVector({0, 1, 0, 0});
    return s;
}

WalkStyle angry_style() {
    WalkStyle s;
    s.speed = 0.15;
    s.half_period = 4;
    s.arm_swing = 0.65;
    s.torso_pitch = 0.10;
    s.head_pitch = 0.05;
    s.step_lift = 0.07;
    s.bob = 0.016;
    s.emotion = EmotionVector({0, 0, 1, 0});
    return s;
}

WalkStyle neutral_style() {
    WalkStyle s;
    s.emotion = EmotionVector({0, 0, 0, 1});
    return s;
}

Gait make_walk_gait(const WalkStyle& style, int frames, double frame_rate) {
    const Skeleton& sk = default_skeleton();
    const double l1 = 0.42, l2 = 0.42;
    const double hip_drop = 0.06;
    const double heel_ground = 0.06; // heel joint height when the toe touches y=0
    const int hp = style.half_period;

    Gait gait;
    gait.skeleton = sk;
    gait.frame_rate = frame_rate;
    gait.emotion = style.emotion;

    for (int t = 0; t < frames; ++t) {
        double phase = kPi * static_cast<double>(t) / hp; // 0 at left strikes
        Vec3 root{0.0, style.root_height + style.bob * std::sin(2.0 * phase),
                  style.speed * static_cast<double>(t)};

        std::vector<Versor> rot(static_cast<std::size_t>(sk.joint_count - 1), versor_identity());
        auto set = [&](const char* name, const Versor& q) {
            int j = sk.joint_index(name);
            rot[static_cast<std::size_t>(j - 1)] = q;
        };

        // Torso and head posture.
        set("Spine", axis_x(style.torso_pitch * 0.5));
        set("Chest", axis_x(style.torso_pitch));
        set("Neck", axis_x(style.torso_pitch));
        set("Head", axis_x(style.torso_pitch + style.head_pitch +
                           0.03 * style.arm_swing * std::sin(2.0 * phase)));

        // Arms hang down (the shoulder bone keeps its rest direction, the
        // upper arm and forearm rotate from the T-pose) and counter-swing
        // against the same-side leg.
        double left_arm = style.arm_swing * std::cos(phase + kPi);
        double right_arm = style.arm_swing * std::cos(phase);
        set("LeftElbow", quat_mul(axis_x(left_arm), axis_z(kPi / 2.0)));
        set("LeftWrist", quat_mul(axis_x(left_arm + 0.25), axis_z(kPi / 2.0)));
        set("LeftHand", quat_mul(axis_x(left_arm + 0.25), axis_z(kPi / 2.0)));
        set("RightElbow", quat_mul(axis_x(right_arm), axis_z(-kPi / 2.0)));
        set("RightWrist", quat_mul(axis_x(right_arm + 0.25), axis_z(-kPi / 2.0)));
        set("RightHand", quat_mul(axis_x(right_arm + 0.25), axis_z(-kPi / 2.0)));

        // Legs: planted/swing heel targets solved to knee+heel versors.
        Vec3 left_hip = root + sk.offset[static_cast<std::size_t>(sk.joint_index("LeftHip"))];
        Vec3 right_hip = root + sk.offset[static_cast<std::size_t>(sk.joint_index("RightHip"))];
        Vec3 left_target = heel_track(t, hp, style.speed, left_hip.x, heel_ground, style.step_lift, 0.0);
        Vec3 right_target =
            heel_track(t, hp, style.speed, right_hip.x, heel_ground, style.step_lift, hp);
        LegSolve left = solve_leg(left_hip, left_target, l1, l2);
        LegSolve right = solve_leg(right_hip, right_target, l1, l2);
        set("LeftKnee", left.knee);
        set("LeftHeel", left.heel);
        set("RightKnee", right.knee);
        set("RightHeel", right.heel);
        // Toes stay at their rest orientation (flat foot).

        gait.frames.push_back(forward_kinematics(sk, root, rot));
    }
    hemisphere_align_gait(gait);
    return gait;
}

std::vector<Gait> fixture_gaits(int frames) {
    return {make_walk_gait(happy_style(), frames), make_walk_gait(sad_style(), frames),
            make_walk_gait(angry_style(), frames), make_walk_gait(neutral_style(), frames)};
}

Corpus fixture_corpus(int frames) {
    Corpus c;
    c.train = fixture_gaits(frames);
    return c;
}

Gait make_planted_contact_gait(const std::vector<FootContact>& contacts, int frames) {
    const Skeleton& sk = default_skeleton();
    Gait gait;
    gait.skeleton = sk;
    gait.frame_rate = 10.0;
    std::vector<Vec3> rest = sk.rest_positions();
    int lh = sk.joint_index("LeftHeel");
    int rh = sk.joint_index("RightHeel");
    for (int t = 0; t < frames; ++t) {
        Pose p;
        p.positions = rest;
        for (Vec3& v : p.positions) {
            v.y += 0.95;
            v.z += 0.1 * static_cast<double>(t);
        }
        // Heels ride high except at the planted frames; their ground-plane
        // position never moves, so only the height gate decides.
        p.positions[static_cast<std::size_t>(lh)] = {-0.10, 0.30, 0.0};
        p.positions[static_cast<std::size_t>(rh)] = {0.10, 0.30, 0.5};
        for (const FootContact& c : contacts) {
            if (c.frame != t) continue;
            if (c.foot == Foot::Left) {
                p.positions[static_cast<std::size_t>(lh)].y = 0.05;
            } else {
                p.positions[static_cast<std::size_t>(rh)].y = 0.05;
            }
        }
        p.root_position = p.positions[0];
        gait.frames.push_back(std::move(p));
    }
    return gait;
}

Gait make_hovering_gait(int frames) {
    const Skeleton& sk = default_skeleton();
    Gait gait;
    gait.skeleton = sk;
    gait.frame_rate = 10.0;
    std::vector<Vec3> rest = sk.rest_positions();
    int lh = sk.joint_index("LeftHeel");
    int rh = sk.joint_index("RightHeel");
    for (int t = 0; t < frames; ++t) {
        Pose p;
        p.positions = rest;
        for (Vec3& v : p.positions) {
            v.y += 1.4;
            v.z += 0.1 * static_cast<double>(t);
        }
        double bob = 0.15 * std::sin(0.7 * t);
        p.positions[static_cast<std::size_t>(lh)] = {-0.10, 0.5 + bob, 0.3 * t};
        p.positions[static_cast<std::size_t>(rh)] = {0.10, 0.5 - bob, 0.3 * t};
        p.root_position = p.positions[0];
        gait.frames.push_back(std::move(p));
    }
    return gait;
}

Versor random_versor(Rng& rng) {
    // Shoemake's uniform quaternion sampling.
    double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return {b * std::cos(kTwoPi * u3), a * std::sin(kTwoPi * u2), a * std::cos(kTwoPi * u2),
            b * std::sin(kTwoPi * u3)};
}

std::vector<Versor> random_pose_rotations(const Skeleton& skeleton, Rng& rng, double max_angle) {
    std::vector<Versor> rot;
    rot.reserve(static_cast<std::size_t>(skeleton.joint_count - 1));
    for (int j = 1; j < skeleton.joint_count; ++j) {
        Vec3 axis{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (norm(axis) < 1e-6) axis = {0, 1, 0};
        rot.push_back(versor_from_axis_angle(axis, rng.uniform(-max_angle, max_angle)));
    }
    return rot;
}

ModelConfig tiny_model_config() {
    ModelConfig mc;
    mc.window = 12;
    mc.h1 = 16;
    mc.h2 = 16;
    mc.h3 = 48;
    mc.h4 = 24;
    return mc;
}

TrainConfig overfit_train_config() {
    TrainConfig tc;
    tc.epochs = 300;
    tc.learning_rate = 0.001;
    tc.lr_decay = 0.999;
    tc.teacher_forcing_decay = 0.995;
    tc.batch_size = 32;
    tc.seed = 7;
    tc.lambdas = LossWeights{}; // all 1.0, versor regularizer 0.01
    return tc;
}

} // namespace emogait::fixtures
