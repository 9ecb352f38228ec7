#include "emogait/movement_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace emogait {

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

int find_role(const Skeleton& skeleton, const char* side, std::span<const char* const> roles) {
    for (std::size_t i = 0; i < skeleton.joint_names.size(); ++i) {
        std::string name = lowercase(skeleton.joint_names[i]);
        if (name.find(side) == std::string::npos) continue;
        for (const char* role : roles) {
            if (name.find(role) != std::string::npos) return static_cast<int>(i);
        }
    }
    return -1;
}

std::array<double, 2> root_xz(const Gait& gait, int t) {
    const Vec3& p = gait.frames[static_cast<std::size_t>(t)].positions[0];
    return {p.x, p.z};
}

// tau[t] = XZ(root[t]) - XZ(root[t-1]); tau[0] = tau[1].
std::vector<std::array<double, 2>> root_tangents(const Gait& gait) {
    int n = gait.length();
    std::vector<std::array<double, 2>> tau(static_cast<std::size_t>(n));
    for (int t = 1; t < n; ++t) {
        auto a = root_xz(gait, t);
        auto b = root_xz(gait, t - 1);
        tau[static_cast<std::size_t>(t)] = {a[0] - b[0], a[1] - b[1]};
    }
    if (n > 1) tau[0] = tau[1];
    return tau;
}

double leg_length_to_root(const Skeleton& skeleton, int heel) {
    double len = 0.0;
    int j = heel;
    while (j > 0 && skeleton.parent[static_cast<std::size_t>(j)] != 0) {
        len += norm(skeleton.offset[static_cast<std::size_t>(j)]);
        j = skeleton.parent[static_cast<std::size_t>(j)];
    }
    return len;
}

} // namespace

FootJointIndices resolve_foot_joints(const Skeleton& skeleton) {
    static constexpr const char* heel_roles[] = {"heel", "ankle", "foot"};
    static constexpr const char* toe_roles[] = {"toe"};
    FootJointIndices idx;
    idx.left_heel = find_role(skeleton, "left", heel_roles);
    idx.right_heel = find_role(skeleton, "right", heel_roles);
    idx.left_toe = find_role(skeleton, "left", toe_roles);
    idx.right_toe = find_role(skeleton, "right", toe_roles);
    if (idx.left_heel < 0 || idx.right_heel < 0 || idx.left_toe < 0 || idx.right_toe < 0) {
        throw ValidationError("skeleton does not name left/right heel and toe joints");
    }
    return idx;
}

HipJointIndices resolve_hip_joints(const Skeleton& skeleton) {
    static constexpr const char* hip_roles[] = {"hip", "upleg", "thigh"};
    HipJointIndices idx;
    // Skip the root itself ("Hips"): look for side-qualified names.
    idx.left = find_role(skeleton, "left", hip_roles);
    idx.right = find_role(skeleton, "right", hip_roles);
    if (idx.left < 0 || idx.right < 0) {
        throw ValidationError("skeleton does not name left/right hip joints");
    }
    return idx;
}

std::vector<double> root_height_deviation(const Gait& gait) {
    int n = gait.length();
    if (n < 1) throw ValidationError("root_height_deviation: empty gait");
    double mean = 0.0;
    for (const Pose& f : gait.frames) mean += f.positions[0].y;
    mean /= static_cast<double>(n);
    std::vector<double> h(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) h[static_cast<std::size_t>(t)] = gait.frames[static_cast<std::size_t>(t)].positions[0].y - mean;
    return h;
}

RootSpeed root_speed(const Gait& gait) {
    int n = gait.length();
    if (n < 2) throw ValidationError("root_speed: need at least 2 frames");
    RootSpeed out;
    out.s.resize(static_cast<std::size_t>(n));
    out.s_bar.resize(static_cast<std::size_t>(n));
    auto tau = root_tangents(gait);
    for (int t = 0; t < n; ++t) {
        const auto& d = tau[static_cast<std::size_t>(t)];
        out.s[static_cast<std::size_t>(t)] = std::hypot(d[0], d[1]);
    }
    out.s_bar[0] = out.s[0];
    for (int t = 1; t < n; ++t) {
        out.s_bar[static_cast<std::size_t>(t)] = 0.8 * out.s_bar[static_cast<std::size_t>(t - 1)] + 0.2 * out.s[static_cast<std::size_t>(t)];
    }
    return out;
}

std::vector<double> root_orientation(const Gait& gait) {
    HipJointIndices hips = resolve_hip_joints(gait.skeleton);
    int n = gait.length();
    std::vector<double> alpha(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const auto& p = gait.frames[static_cast<std::size_t>(t)].positions;
        Vec3 d = p[static_cast<std::size_t>(hips.left)] - p[static_cast<std::size_t>(hips.right)];
        if (norm(d) < 1e-9) {
            throw DegeneratePoseError("root_orientation: coincident hips at frame " + std::to_string(t));
        }
        // forward = up x (leftHip - rightHip), projected to the ground plane
        double fx = d.z;
        double fz = -d.x;
        if (std::hypot(fx, fz) < 1e-9) {
            throw DegeneratePoseError("root_orientation: vertical hip axis at frame " + std::to_string(t));
        }
        alpha[static_cast<std::size_t>(t)] = std::atan2(fx, fz);
    }
    return alpha;
}

std::vector<double> orientation_difference(std::span<const double> alpha, const Gait& gait) {
    int n = gait.length();
    if (static_cast<int>(alpha.size()) != n) throw ShapeError("orientation_difference: alpha length mismatch");
    auto tau = root_tangents(gait);
    std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
    double prev = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto& d = tau[static_cast<std::size_t>(t)];
        double len = std::hypot(d[0], d[1]);
        if (len <= 1e-9) {
            delta[static_cast<std::size_t>(t)] = prev;
            continue;
        }
        double fx = std::sin(alpha[static_cast<std::size_t>(t)]);
        double fz = std::cos(alpha[static_cast<std::size_t>(t)]);
        double c = (fx * d[0] + fz * d[1]) / len;
        prev = acos_clamped(c);
        delta[static_cast<std::size_t>(t)] = prev;
    }
    return delta;
}

std::vector<double> trajectory_curvature(const Gait& gait) {
    int n = gait.length();
    if (n < 3) throw ValidationError("trajectory_curvature: need at least 3 frames");
    auto tau = root_tangents(gait);
    std::vector<double> kappa(static_cast<std::size_t>(n));
    for (int t = 2; t < n; ++t) {
        const auto& a = tau[static_cast<std::size_t>(t)];
        const auto& b = tau[static_cast<std::size_t>(t - 1)];
        kappa[static_cast<std::size_t>(t)] = std::hypot(a[0] - b[0], a[1] - b[1]);
    }
    kappa[0] = kappa[1] = kappa[2];
    return kappa;
}

std::vector<FootContact> detect_foot_contacts(const Gait& gait, const ContactParams& params) {
    int n = gait.length();
    if (n < 2) throw ValidationError("detect_foot_contacts: need at least 2 frames");
    const Skeleton& skeleton = gait.skeleton;
    FootJointIndices feet = resolve_foot_joints(skeleton);
    double mean_speed = 0.0;
    {
        RootSpeed sp = root_speed(gait);
        for (double v : sp.s) mean_speed += v;
        mean_speed /= static_cast<double>(n);
    }
    std::vector<FootContact> merged;
    for (Foot foot : {Foot::Left, Foot::Right}) {
        int heel = foot == Foot::Left ? feet.left_heel : feet.right_heel;
        double leg_len = leg_length_to_root(skeleton, heel);
        std::vector<double> height(static_cast<std::size_t>(n));
        std::vector<double> speed(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            height[static_cast<std::size_t>(t)] =
                gait.frames[static_cast<std::size_t>(t)].positions[static_cast<std::size_t>(heel)].y;
        }
        for (int t = 1; t < n; ++t) {
            const Vec3& a = gait.frames[static_cast<std::size_t>(t)].positions[static_cast<std::size_t>(heel)];
            const Vec3& b = gait.frames[static_cast<std::size_t>(t - 1)].positions[static_cast<std::size_t>(heel)];
            speed[static_cast<std::size_t>(t)] = std::hypot(a.x - b.x, a.z - b.z);
        }
        speed[0] = speed[1];
        double min_h = *std::min_element(height.begin(), height.end());
        double h_band = min_h + params.height_fraction * leg_len;
        double s_band = params.speed_fraction * mean_speed;
        bool in_run = false;
        for (int t = 0; t < n; ++t) {
            bool contact = height[static_cast<std::size_t>(t)] < h_band && speed[static_cast<std::size_t>(t)] < s_band;
            if (contact && !in_run) merged.push_back({t, foot});
            in_run = contact;
        }
    }
    std::sort(merged.begin(), merged.end(), [](const FootContact& a, const FootContact& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.foot == Foot::Left && b.foot == Foot::Right;
    });
    // Alternation cleanup: a repeated same-foot contact drops the later one;
    // simultaneous opposite-foot events keep only the first.
    std::vector<FootContact> cleaned;
    for (const FootContact& c : merged) {
        if (!cleaned.empty() && (cleaned.back().foot == c.foot || cleaned.back().frame == c.frame)) {
            continue;
        }
        cleaned.push_back(c);
    }
    if (cleaned.size() < 2) {
        throw InsufficientStepsError("detect_foot_contacts: fewer than 2 contacts detected");
    }
    return cleaned;
}

SteppingFeatures stepping_phase(std::span<const FootContact> contacts, int total_frames) {
    if (contacts.size() < 2) {
        throw InsufficientStepsError("stepping_phase: need at least 2 alternating contacts");
    }
    for (std::size_t i = 1; i < contacts.size(); ++i) {
        if (contacts[i].foot == contacts[i - 1].foot) {
            throw InsufficientStepsError("stepping_phase: contacts must alternate feet");
        }
        if (contacts[i].frame <= contacts[i - 1].frame) {
            throw ValidationError("stepping_phase: contact frames must increase");
        }
    }
    SteppingFeatures out;
    out.contacts.assign(contacts.begin(), contacts.end());
    out.phase.resize(static_cast<std::size_t>(total_frames));
    out.frequency.assign(static_cast<std::size_t>(total_frames), 0.0);

    // Unwrapped phase: contact i sits at base + i*pi.
    const double base = contacts[0].foot == Foot::Left ? 0.0 : kPi;
    auto unwrapped_at_contact = [&](std::size_t i) { return base + static_cast<double>(i) * kPi; };
    std::vector<double> unwrapped(static_cast<std::size_t>(total_frames));
    auto rate_of = [&](std::size_t seg) {
        int len = contacts[seg + 1].frame - contacts[seg].frame;
        return kPi / static_cast<double>(len);
    };
    for (int t = 0; t < total_frames; ++t) {
        double u;
        if (t <= contacts[0].frame) {
            u = unwrapped_at_contact(0) - static_cast<double>(contacts[0].frame - t) * rate_of(0);
        } else if (t >= contacts.back().frame) {
            std::size_t last = contacts.size() - 2;
            u = unwrapped_at_contact(contacts.size() - 1) +
                static_cast<double>(t - contacts.back().frame) * rate_of(last);
        } else {
            std::size_t seg = 0;
            while (contacts[seg + 1].frame < t) ++seg;
            if (contacts[seg + 1].frame == t) ++seg;
            // now contacts[seg].frame <= t < contacts[seg+1].frame, or t is a contact
            if (contacts[seg].frame == t) {
                u = unwrapped_at_contact(seg);
            } else {
                u = unwrapped_at_contact(seg) + static_cast<double>(t - contacts[seg].frame) * rate_of(seg);
            }
        }
        unwrapped[static_cast<std::size_t>(t)] = u;
        out.phase[static_cast<std::size_t>(t)] = wrap_angle_positive(u);
    }
    // Exact anchors at the contacts themselves.
    for (const FootContact& c : contacts) {
        if (c.frame >= 0 && c.frame < total_frames) {
            out.phase[static_cast<std::size_t>(c.frame)] = c.foot == Foot::Left ? 0.0 : kPi;
        }
    }
    for (int t = 1; t < total_frames; ++t) {
        out.frequency[static_cast<std::size_t>(t)] =
            unwrapped[static_cast<std::size_t>(t)] - unwrapped[static_cast<std::size_t>(t - 1)];
    }
    if (total_frames > 1) out.frequency[0] = out.frequency[1];
    return out;
}

FootPositions foot_positions(const Gait& gait) {
    FootJointIndices idx = resolve_foot_joints(gait.skeleton);
    FootPositions out;
    std::size_t n = gait.frames.size();
    out.left_heel.resize(n);
    out.left_toe.resize(n);
    out.right_heel.resize(n);
    out.right_toe.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& p = gait.frames[t].positions;
        out.left_heel[t] = p[static_cast<std::size_t>(idx.left_heel)];
        out.left_toe[t] = p[static_cast<std::size_t>(idx.left_toe)];
        out.right_heel[t] = p[static_cast<std::size_t>(idx.right_heel)];
        out.right_toe[t] = p[static_cast<std::size_t>(idx.right_toe)];
    }
    return out;
}

RootFeatures extract_root_features(const Gait& gait) {
    RootFeatures f;
    f.height_dev = root_height_deviation(gait);
    RootSpeed sp = root_speed(gait);
    f.speed = std::move(sp.s);
    f.speed_lp = std::move(sp.s_bar);
    f.orientation = root_orientation(gait);
    f.orient_diff = orientation_difference(f.orientation, gait);
    f.curvature = trajectory_curvature(gait);
    return f;
}

} // namespace emogait
