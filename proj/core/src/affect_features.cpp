#include "emogait/affect_features.hpp"

#include <json.hpp>

namespace emogait {

void FeatureDefinitionTable::validate(const Skeleton& skeleton) const {
    auto check = [&](int j) {
        if (j < 0 || j >= skeleton.joint_count) {
            throw ValidationError("feature table: joint index " + std::to_string(j) + " out of range");
        }
    };
    for (const auto& d : angles) {
        check(d.apex);
        check(d.a);
        check(d.b);
    }
    for (const auto& d : distance_ratios) {
        for (int j : d.num) check(j);
        for (int j : d.den) check(j);
    }
    for (const auto& d : area_ratios) {
        for (int j : d.num) check(j);
        for (int j : d.den) check(j);
    }
}

std::array<std::string, kAffectiveDims> FeatureDefinitionTable::column_names() {
    std::array<std::string, kAffectiveDims> names;
    int k = 0;
    for (int i = 1; i <= kAngleFeatures; ++i) names[static_cast<std::size_t>(k++)] = "a" + std::to_string(i);
    for (int i = 1; i <= kDistanceRatioFeatures; ++i) names[static_cast<std::size_t>(k++)] = "dr" + std::to_string(i);
    for (int i = 1; i <= kAreaRatioFeatures; ++i) names[static_cast<std::size_t>(k++)] = "ar" + std::to_string(i);
    return names;
}

FeatureDefinitionTable default_feature_table(const Skeleton& skeleton) {
    auto j = [&](const char* name) {
        int idx = skeleton.joint_index(name);
        if (idx < 0) throw ValidationError(std::string("default feature table: skeleton lacks joint ") + name);
        return idx;
    };
    FeatureDefinitionTable t;
    int root = j("Hips"), neck = j("Neck"), head = j("Head");
    int lsh = j("LeftShoulder"), rsh = j("RightShoulder");
    int lel = j("LeftElbow"), rel = j("RightElbow");
    int lwr = j("LeftWrist"), rwr = j("RightWrist");
    int lha = j("LeftHand"), rha = j("RightHand");
    int lhip = j("LeftHip"), rhip = j("RightHip");
    int lkn = j("LeftKnee"), rkn = j("RightKnee");
    int lhe = j("LeftHeel"), rhe = j("RightHeel");
    int lto = j("LeftToe"), rto = j("RightToe");

    t.angles = {{
        {neck, lsh, rsh},   // shoulder opening at the neck (slouch)
        {lsh, neck, lel},   // left shoulder
        {rsh, neck, rel},   // right shoulder
        {lel, lsh, lwr},    // left elbow
        {rel, rsh, rwr},    // right elbow
        {neck, head, root}, // head inclination over the torso line
        {root, lhip, rhip}, // pelvis opening
        {lhip, root, lkn},  // left hip
        {rhip, root, rkn},  // right hip
        {lkn, lhip, lhe},   // left knee
        {rkn, rhip, rhe},   // right knee
    }};
    t.distance_ratios = {{
        {{lto, rto}, {neck, root}},  // feet spread / torso length
        {{lha, rha}, {neck, root}},  // hand spread / torso length
        {{head, root}, {neck, root}},// head reach / torso length
        {{lto, rhe}, {neck, root}},  // stride reach / torso length
    }};
    t.area_ratios = {{
        {{lha, rha, neck}, {lto, rto, root}},  // arm span triangle over stance triangle
        {{lel, rel, neck}, {lkn, rkn, root}},  // elbow triangle over knee triangle
        {{head, lsh, rsh}, {lhip, rhip, root}},// head-shoulder triangle over pelvis triangle
    }};
    t.validate(skeleton);
    return t;
}

namespace {

int resolve_joint(const Skeleton& skeleton, const nlohmann::json& v) {
    if (v.is_number_integer()) {
        int idx = v.get<int>();
        if (idx < 0 || idx >= skeleton.joint_count) {
            throw ValidationError("feature config: joint index out of range");
        }
        return idx;
    }
    int idx = skeleton.joint_index(v.get<std::string>());
    if (idx < 0) throw ValidationError("feature config: unknown joint '" + v.get<std::string>() + "'");
    return idx;
}

} // namespace

FeatureDefinitionTable feature_table_from_json(const Skeleton& skeleton, const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text);
    FeatureDefinitionTable t;
    const auto& angles = doc.at("angles");
    const auto& drs = doc.at("distance_ratios");
    const auto& ars = doc.at("area_ratios");
    if (angles.size() != kAngleFeatures || drs.size() != kDistanceRatioFeatures ||
        ars.size() != kAreaRatioFeatures) {
        throw ValidationError("feature config: table must define exactly 11 angles, 4 distance ratios "
                              "and 3 area ratios");
    }
    for (int i = 0; i < kAngleFeatures; ++i) {
        const auto& a = angles[static_cast<std::size_t>(i)];
        if (a.size() != 3) throw ValidationError("feature config: angle entries need 3 joints");
        t.angles[static_cast<std::size_t>(i)] = {resolve_joint(skeleton, a[0]), resolve_joint(skeleton, a[1]),
                                                 resolve_joint(skeleton, a[2])};
    }
    for (int i = 0; i < kDistanceRatioFeatures; ++i) {
        const auto& d = drs[static_cast<std::size_t>(i)];
        if (d.size() != 2 || d[0].size() != 2 || d[1].size() != 2) {
            throw ValidationError("feature config: distance ratio entries need two joint pairs");
        }
        t.distance_ratios[static_cast<std::size_t>(i)] = {
            {resolve_joint(skeleton, d[0][0]), resolve_joint(skeleton, d[0][1])},
            {resolve_joint(skeleton, d[1][0]), resolve_joint(skeleton, d[1][1])}};
    }
    for (int i = 0; i < kAreaRatioFeatures; ++i) {
        const auto& a = ars[static_cast<std::size_t>(i)];
        if (a.size() != 2 || a[0].size() != 3 || a[1].size() != 3) {
            throw ValidationError("feature config: area ratio entries need two joint triples");
        }
        t.area_ratios[static_cast<std::size_t>(i)] = {
            {resolve_joint(skeleton, a[0][0]), resolve_joint(skeleton, a[0][1]), resolve_joint(skeleton, a[0][2])},
            {resolve_joint(skeleton, a[1][0]), resolve_joint(skeleton, a[1][1]), resolve_joint(skeleton, a[1][2])}};
    }
    t.validate(skeleton);
    return t;
}

double joint_angle(const Pose& pose, int apex, int a, int b) {
    return joint_angle_t<double>(pose.positions[static_cast<std::size_t>(apex)],
                                 pose.positions[static_cast<std::size_t>(a)],
                                 pose.positions[static_cast<std::size_t>(b)]);
}

double distance_ratio(const Pose& pose, std::array<int, 2> num_pair, std::array<int, 2> den_pair) {
    return distance_ratio_t<double>(pose.positions[static_cast<std::size_t>(num_pair[0])],
                                    pose.positions[static_cast<std::size_t>(num_pair[1])],
                                    pose.positions[static_cast<std::size_t>(den_pair[0])],
                                    pose.positions[static_cast<std::size_t>(den_pair[1])]);
}

double area_ratio(const Pose& pose, std::array<int, 3> num_tri, std::array<int, 3> den_tri) {
    return area_ratio_t<double>(pose.positions[static_cast<std::size_t>(num_tri[0])],
                                pose.positions[static_cast<std::size_t>(num_tri[1])],
                                pose.positions[static_cast<std::size_t>(num_tri[2])],
                                pose.positions[static_cast<std::size_t>(den_tri[0])],
                                pose.positions[static_cast<std::size_t>(den_tri[1])],
                                pose.positions[static_cast<std::size_t>(den_tri[2])]);
}

AffectiveVector extract_affective(const Pose& pose, const FeatureDefinitionTable& defs) {
    return extract_affective_t<double>(std::span<const Vec3>(pose.positions), defs);
}

} // namespace emogait
