#include "emogait/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emogait/util.hpp"

namespace emogait {

TrajectorySpec TrajectorySpec::from_text(const std::string& text) {
    TrajectorySpec spec;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, z;
        if (ls >> x >> z) {
            spec.waypoints.push_back({x, z});
        } else {
            std::string rest;
            ls.clear();
            ls >> rest;
            if (!rest.empty()) throw ParseError("trajectory file: expected 'x z' pair", line_no);
        }
    }
    spec.validate();
    return spec;
}

TrajectorySpec TrajectorySpec::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open trajectory file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_text(text);
}

void TrajectorySpec::validate() const {
    if (waypoints.size() < 2) throw ValidationError("trajectory needs at least 2 waypoints");
    bool distinct = false;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if (std::hypot(waypoints[i][0] - waypoints[i - 1][0], waypoints[i][1] - waypoints[i - 1][1]) >
            1e-9) {
            distinct = true;
        }
    }
    if (!distinct) throw ValidationError("trajectory waypoints are all coincident");
}

double TrajectorySpec::total_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        len += std::hypot(waypoints[i][0] - waypoints[i - 1][0], waypoints[i][1] - waypoints[i - 1][1]);
    }
    return len;
}

std::array<double, 2> TrajectorySpec::point_at(double arc) const {
    if (arc < 0.0) arc = 0.0;
    double remaining = arc;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        double dx = waypoints[i][0] - waypoints[i - 1][0];
        double dz = waypoints[i][1] - waypoints[i - 1][1];
        double seg = std::hypot(dx, dz);
        if (seg < 1e-12) continue;
        bool last = true;
        for (std::size_t k = i + 1; k < waypoints.size(); ++k) {
            if (std::hypot(waypoints[k][0] - waypoints[k - 1][0],
                           waypoints[k][1] - waypoints[k - 1][1]) > 1e-12) {
                last = false;
                break;
            }
        }
        if (remaining <= seg || last) {
            double u = remaining / seg;
            return {waypoints[i - 1][0] + u * dx, waypoints[i - 1][1] + u * dz};
        }
        remaining -= seg;
    }
    return waypoints.back();
}

std::array<double, 2> TrajectorySpec::tangent_at(double arc) const {
    if (arc < 0.0) arc = 0.0;
    double remaining = arc;
    std::array<double, 2> dir{0.0, 1.0};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        double dx = waypoints[i][0] - waypoints[i - 1][0];
        double dz = waypoints[i][1] - waypoints[i - 1][1];
        double seg = std::hypot(dx, dz);
        if (seg < 1e-12) continue;
        dir = {dx / seg, dz / seg};
        if (remaining <= seg) return dir;
        remaining -= seg;
    }
    return dir;
}

double TrajectorySpec::distance_to(const std::array<double, 2>& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        double ax = waypoints[i - 1][0], az = waypoints[i - 1][1];
        double dx = waypoints[i][0] - ax, dz = waypoints[i][1] - az;
        double seg2 = dx * dx + dz * dz;
        if (seg2 < 1e-24) continue;
        double u = ((p[0] - ax) * dx + (p[1] - az) * dz) / seg2;
        bool last_segment = true;
        for (std::size_t k = i + 1; k < waypoints.size(); ++k) {
            if (std::hypot(waypoints[k][0] - waypoints[k - 1][0],
                           waypoints[k][1] - waypoints[k - 1][1]) > 1e-12) {
                last_segment = false;
                break;
            }
        }
        double lo = 0.0;
        double hi = last_segment ? std::numeric_limits<double>::infinity() : 1.0;
        u = std::clamp(u, lo, hi);
        double qx = ax + u * dx, qz = az + u * dz;
        best = std::min(best, std::hypot(p[0] - qx, p[1] - qz));
    }
    return best;
}

std::vector<std::array<double, 2>> TrajectorySpec::resample(int n) const {
    if (n < 2) throw ValidationError("trajectory resample needs at least 2 points");
    double len = total_length();
    std::vector<std::array<double, 2>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        out.push_back(point_at(len * static_cast<double>(k) / static_cast<double>(n - 1)));
    }
    return out;
}

EmotionSchedule build_emotion_schedule(const EmotionVector& start, const EmotionVector& end,
                                       int steps) {
    if (steps < 2) throw ValidationError("emotion schedule needs at least 2 steps");
    if (start.dims() != end.dims()) throw ValidationError("emotion schedule endpoints must share dims");
    EmotionVector s = start.normalized();
    EmotionVector e = end.normalized();
    EmotionSchedule schedule;
    schedule.steps.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        double w = static_cast<double>(k) / static_cast<double>(steps - 1);
        std::vector<double> comps(static_cast<std::size_t>(s.dims()));
        for (int c = 0; c < s.dims(); ++c) {
            comps[static_cast<std::size_t>(c)] = (1.0 - w) * s.components[static_cast<std::size_t>(c)] +
                                                 w * e.components[static_cast<std::size_t>(c)];
        }
        EmotionVector step(std::move(comps));
        double sum = step.sum();
        if (sum <= 0.0) throw ValidationError("emotion schedule: zero-sum intermediate vector");
        step.normalize();
        schedule.steps.push_back(std::move(step));
    }
    schedule.steps.front() = s;
    schedule.steps.back() = e;
    return schedule;
}

namespace {

double heading_of(double x, double z) { return std::atan2(x, z); }

Versor yaw_versor(double angle) { return versor_from_axis_angle({0.0, 1.0, 0.0}, angle); }

/// Facing heading of a pose from its hip joints (same construction as
/// root_orientation).
double pose_heading(const Pose& pose, const HipJointIndices& hips) {
    Vec3 d = pose.positions[static_cast<std::size_t>(hips.left)] -
             pose.positions[static_cast<std::size_t>(hips.right)];
    double fx = d.z, fz = -d.x;
    if (std::hypot(fx, fz) < 1e-9) throw DegeneratePoseError("pose_heading: degenerate hip axis");
    return heading_of(fx, fz);
}

Pose rebuild_pose(const Skeleton& skeleton, const Vec3& root, std::span<const Versor> rotations) {
    return forward_kinematics(skeleton, root, rotations);
}

/// Rigidly re-bases a pose sequence: yaw about the pivot, then translate so
/// that pivot lands on new_pivot.
void rebase_frames(std::vector<Pose>& frames, const Skeleton& skeleton, double yaw,
                   const Vec3& pivot, const Vec3& new_pivot) {
    Versor r = yaw_versor(yaw);
    for (Pose& f : frames) {
        Vec3 rel = f.positions[0] - pivot;
        Vec3 root = rotate(r, rel) + new_pivot;
        std::vector<Versor> rot(f.rotations.size());
        for (std::size_t j = 0; j < f.rotations.size(); ++j) rot[j] = quat_mul(r, f.rotations[j]);
        f = rebuild_pose(skeleton, root, rot);
    }
}

} // namespace

RolloutResult rollout(grad::ParameterStore& store, const ModelConfig& config, const Gait& seed_gait,
                      const TrajectorySpec& trajectory, const EmotionSchedule& schedule, int steps) {
    config.validate();
    trajectory.validate();
    if (steps < 0) throw ValidationError("rollout: steps must be >= 0");
    if (seed_gait.length() < kRolloutSeedFrames) {
        throw ValidationError("rollout: seed gait needs at least " +
                              std::to_string(kRolloutSeedFrames) + " frames");
    }
    if (config.window > kRolloutSeedFrames) {
        throw ValidationError("rollout: model window exceeds the seed length");
    }
    if (steps > 0 && schedule.length() != steps) {
        throw ValidationError("rollout: schedule length must equal the rollout steps");
    }

    RolloutResult result;
    result.schedule = schedule;
    result.gait.skeleton = seed_gait.skeleton;
    result.gait.frame_rate = seed_gait.frame_rate;
    result.gait.emotion = schedule.steps.empty() ? seed_gait.emotion : schedule.steps.back();
    result.gait.frames.assign(seed_gait.frames.begin(),
                              seed_gait.frames.begin() + kRolloutSeedFrames);
    if (steps == 0) {
        result.gait.emotion = seed_gait.emotion;
        return result;
    }

    const Skeleton& skeleton = seed_gait.skeleton;
    const FeatureDefinitionTable defs = default_feature_table(skeleton);
    const HipJointIndices hips = resolve_hip_joints(skeleton);

    // Seed features (fallback phase if the seed is too short for detection).
    Gait seed_window;
    seed_window.skeleton = skeleton;
    seed_window.frames = result.gait.frames;
    seed_window.frame_rate = seed_gait.frame_rate;
    PhaseFallback fallback{0.0, 0.4};
    GaitFeatures feats = extract_gait_features(seed_window, defs, {}, &fallback);

    // Re-base the seed so its last frame stands at the path start, facing
    // along the path.
    {
        const Pose& last = result.gait.frames.back();
        auto p0 = trajectory.point_at(0.0);
        auto tan0 = trajectory.tangent_at(0.0);
        double yaw = wrap_angle(heading_of(tan0[0], tan0[1]) - pose_heading(last, hips));
        Vec3 pivot = last.positions[0];
        Vec3 new_pivot{p0[0], pivot.y, p0[1]};
        rebase_frames(result.gait.frames, skeleton, yaw, pivot, new_pivot);
    }
    // Re-extract seed features after the re-base (h, s, s_bar are invariant,
    // alpha/delta change with the yaw).
    seed_window.frames = result.gait.frames;
    feats = extract_gait_features(seed_window, defs, {}, &fallback);

    double seed_mean_height = 0.0;
    for (const Pose& f : result.gait.frames) seed_mean_height += f.positions[0].y;
    seed_mean_height /= static_cast<double>(result.gait.frames.size());

    const double path_len = trajectory.total_length();
    const double desired_step = path_len / static_cast<double>(steps);

    // Per-frame feature tracks for the growing sequence.
    std::vector<AffectiveVector> affective = feats.affective;
    std::vector<double> h = feats.root.height_dev;
    std::vector<double> s = feats.root.speed;
    std::vector<double> s_bar = feats.root.speed_lp;
    std::vector<double> delta = feats.root.orient_diff;
    std::vector<double> kappa = feats.root.curvature;
    std::vector<double> theta = feats.stepping.phase;
    std::vector<double> omega = feats.stepping.frequency;
    std::vector<EmotionVector> emotions(result.gait.frames.size(), seed_gait.emotion.normalized());

    double arc = 0.0;
    std::array<double, 2> prev_xz{result.gait.frames.back().positions[0].x,
                                  result.gait.frames.back().positions[0].z};
    std::array<double, 2> prev_tau = trajectory.tangent_at(0.0);
    prev_tau = {prev_tau[0] * desired_step, prev_tau[1] * desired_step};

    for (int k = 0; k < steps; ++k) {
        const int n = static_cast<int>(result.gait.frames.size());
        const int begin = n - config.window;

        // Window h: deviation from the seed's mean height, the same stable
        // reference the realized root rides on (a short window's own mean
        // would drift against the training-time per-gait normalization).
        for (int t = begin; t < n; ++t) {
            h[static_cast<std::size_t>(t)] =
                result.gait.frames[static_cast<std::size_t>(t)].positions[0].y - seed_mean_height;
        }

        Gait window;
        window.skeleton = skeleton;
        window.frame_rate = seed_gait.frame_rate;
        window.frames.assign(result.gait.frames.begin() + begin, result.gait.frames.end());
        GaitFeatures wf;
        wf.affective.assign(affective.begin() + begin, affective.end());
        wf.root.height_dev.assign(h.begin() + begin, h.end());
        wf.root.speed.assign(s.begin() + begin, s.end());
        wf.root.speed_lp.assign(s_bar.begin() + begin, s_bar.end());
        wf.root.orient_diff.assign(delta.begin() + begin, delta.end());
        wf.root.curvature.assign(kappa.begin() + begin, kappa.end());
        wf.stepping.phase.assign(theta.begin() + begin, theta.end());
        wf.stepping.frequency.assign(omega.begin() + begin, omega.end());
        std::vector<EmotionVector> we(emotions.begin() + begin, emotions.end());

        EncoderInputs inputs = build_encoder_inputs(window, wf, we, 0, config.window, config);
        Prediction pred = predict(inputs, store, config);
        if (!std::isfinite(pred.height_dev[0]) || !std::isfinite(pred.speed[0]) ||
            !std::isfinite(pred.orient_diff[0])) {
            throw NumericalError("rollout: non-finite prediction at step " + std::to_string(k));
        }

        // Root servo along the desired path.
        double step_len = std::max(0.0, pred.speed[0]);
        arc += step_len;
        auto xz = trajectory.point_at(arc);
        auto tan = trajectory.tangent_at(arc);
        if (arc > path_len) {
            // Continue along the final tangent beyond the path end.
            auto end_p = trajectory.point_at(path_len);
            xz = {end_p[0] + tan[0] * (arc - path_len), end_p[1] + tan[1] * (arc - path_len)};
        }
        Vec3 root{xz[0], seed_mean_height + pred.height_dev[0], xz[1]};

        Pose pose = forward_kinematics(skeleton, root, pred.versors[0]);
        double target_heading = wrap_angle(heading_of(tan[0], tan[1]) + pred.orient_diff[0]);
        double yaw = wrap_angle(target_heading - pose_heading(pose, hips));
        Versor r = yaw_versor(yaw);
        std::vector<Versor> rot(pose.rotations.size());
        for (std::size_t j = 0; j < pose.rotations.size(); ++j) rot[j] = quat_mul(r, pose.rotations[j]);
        pose = forward_kinematics(skeleton, root, rot);

        // Feed-back feature tracks for the new frame.
        try {
            affective.push_back(extract_affective(pose, defs));
        } catch (const DegeneratePoseError& e) {
            throw DegeneratePoseError("rollout: degenerate generated pose at step " +
                                      std::to_string(k) + ": " + e.what());
        }
        std::array<double, 2> tau{xz[0] - prev_xz[0], xz[1] - prev_xz[1]};
        double tau_len = std::hypot(tau[0], tau[1]);
        double realized_delta;
        if (tau_len > 1e-9) {
            double fx = std::sin(target_heading), fz = std::cos(target_heading);
            realized_delta = acos_clamped((fx * tau[0] + fz * tau[1]) / tau_len);
        } else {
            realized_delta = delta.back();
        }
        h.push_back(0.0); // recomputed per window
        s.push_back(desired_step);
        s_bar.push_back(0.8 * s_bar.back() + 0.2 * desired_step);
        delta.push_back(realized_delta);
        kappa.push_back(std::hypot(tau[0] - prev_tau[0], tau[1] - prev_tau[1]));
        // Phase advances at the seed's cadence (the stepping extractor's own
        // beyond-last-contact rule). Re-detecting contacts on generated
        // frames jitters the anchor and destabilizes the autoregression.
        theta.push_back(wrap_angle_positive(theta.back() + omega.back()));
        omega.push_back(omega.back());
        emotions.push_back(schedule.steps[static_cast<std::size_t>(k)]);

        result.stats.mean_stride += tau_len;
        result.stats.max_step = std::max(result.stats.max_step, tau_len);
        result.stats.mean_path_deviation += trajectory.distance_to(xz);
        prev_tau = tau;
        prev_xz = xz;
        result.gait.frames.push_back(std::move(pose));
    }
    result.stats.mean_stride /= static_cast<double>(steps);
    result.stats.mean_path_deviation /= static_cast<double>(steps);
    hemisphere_align_gait(result.gait);
    return result;
}

AugmentResult augment_corpus(grad::ParameterStore& store, const ModelConfig& config,
                             const Gait& seed_gait, const AugmentSpec& spec) {
    if (spec.trajectories < 1 || spec.emotions < 1 || spec.transition_pairs < 0) {
        throw ValidationError("augment: counts must be positive");
    }
    if (2 * spec.transition_pairs > spec.emotions) {
        throw ValidationError("augment: transition pairs are drawn without replacement and need "
                              "2*pairs <= emotions");
    }
    std::filesystem::create_directories(spec.out_dir);

    Rng traj_rng = Rng::for_purpose(spec.seed, "augment.trajectories");
    Rng emo_rng = Rng::for_purpose(spec.seed, "augment.emotions");
    Rng pair_rng = Rng::for_purpose(spec.seed, "augment.pairs");

    // Desired speed from the seed gait keeps the controls near the training
    // distribution.
    double mean_speed = 0.0;
    {
        RootSpeed sp = root_speed(seed_gait);
        for (double v : sp.s) mean_speed += v;
        mean_speed /= static_cast<double>(sp.s.size());
        if (mean_speed < 1e-6) mean_speed = 0.1;
    }
    const double total_len = mean_speed * static_cast<double>(spec.steps);

    std::vector<TrajectorySpec> trajectories;
    for (int i = 0; i < spec.trajectories; ++i) {
        TrajectorySpec t;
        int segments = 2 + static_cast<int>(traj_rng.uniform_index(3)); // 2..4
        double heading = 0.0;
        std::array<double, 2> at{0.0, 0.0};
        t.waypoints.push_back(at);
        for (int sgi = 0; sgi < segments; ++sgi) {
            if (sgi > 0) heading += traj_rng.uniform(-75.0, 75.0) * kPi / 180.0;
            double len = total_len / static_cast<double>(segments);
            at = {at[0] + std::sin(heading) * len, at[1] + std::cos(heading) * len};
            t.waypoints.push_back(at);
        }
        trajectories.push_back(std::move(t));
    }

    std::vector<EmotionVector> emotions;
    for (int i = 0; i < spec.emotions; ++i) {
        std::vector<double> comps(static_cast<std::size_t>(config.emotion_dims));
        for (double& c : comps) c = emo_rng.uniform();
        EmotionVector e(std::move(comps));
        e.normalize();
        emotions.push_back(std::move(e));
    }

    struct Item {
        int traj;
        EmotionVector start, end;
        bool transition;
        std::string file;
    };
    std::vector<Item> items;
    for (int ti = 0; ti < spec.trajectories; ++ti) {
        for (int ei = 0; ei < spec.emotions; ++ei) {
            char name[64];
            std::snprintf(name, sizeof name, "gen_t%03d_e%03d.json", ti, ei);
            items.push_back({ti, emotions[static_cast<std::size_t>(ei)],
                             emotions[static_cast<std::size_t>(ei)], false, name});
        }
        std::vector<std::size_t> order(emotions.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        pair_rng.shuffle(order);
        for (int pi = 0; pi < spec.transition_pairs; ++pi) {
            char name[64];
            std::snprintf(name, sizeof name, "trans_t%03d_p%03d.json", ti, pi);
            items.push_back({ti, emotions[order[static_cast<std::size_t>(2 * pi)]],
                             emotions[order[static_cast<std::size_t>(2 * pi + 1)]], true, name});
        }
    }

    AugmentResult result;
    result.manifest.seed = spec.seed;
    std::vector<std::string> errors(items.size());
    std::vector<char> ok(items.size(), 0);
    parallel_for(items.size(), spec.threads, [&](std::size_t i) {
        const Item& item = items[i];
        try {
            EmotionSchedule schedule = build_emotion_schedule(item.start, item.end, spec.steps);
            RolloutResult rr = rollout(store, config, seed_gait,
                                       trajectories[static_cast<std::size_t>(item.traj)], schedule,
                                       spec.steps);
            std::filesystem::path path = std::filesystem::path(spec.out_dir) / item.file;
            save_gait(path.string(), rr.gait, &rr.schedule.steps);
            if (spec.write_bvh_files) {
                MotionClip clip;
                clip.skeleton = rr.gait.skeleton;
                clip.frame_rate = rr.gait.frame_rate;
                std::vector<std::vector<Versor>> rot;
                for (const Pose& f : rr.gait.frames) {
                    clip.frames.push_back(f.positions);
                    rot.push_back(f.rotations);
                }
                std::filesystem::path bvh_path = path;
                bvh_path.replace_extension(".bvh");
                std::ofstream out(bvh_path, std::ios::binary);
                out << write_bvh(clip, rot);
            }
            ok[i] = 1;
        } catch (const std::exception& e) {
            errors[i] = std::string(item.file) + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (ok[i]) {
            result.manifest.entries.push_back({items[i].file, items[i].end, ""});
            if (items[i].transition) {
                ++result.transition_items;
            } else {
                ++result.single_emotion_items;
            }
        } else {
            result.failures.push_back(errors[i]);
        }
    }
    return result;
}

} // namespace emogait
