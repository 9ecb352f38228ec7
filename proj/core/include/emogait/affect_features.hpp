#pragma once

#include <array>
#include <span>
#include <string>

#include "emogait/skeleton.hpp"

namespace emogait {

inline constexpr int kAffectiveDims = 18;
inline constexpr int kAngleFeatures = 11;
inline constexpr int kDistanceRatioFeatures = 4;
inline constexpr int kAreaRatioFeatures = 3;

/// The 18 scale-independent per-frame pose features, in the fixed order
/// [11 joint angles; 4 distance ratios; 3 area ratios].
using AffectiveVector = std::array<double, kAffectiveDims>;

/// Joint index table defining which triples/pairs produce each feature.
/// The cardinality (11 angles, 4 distance ratios, 3 area ratios) is fixed;
/// the concrete joints can be overridden from a config document.
struct FeatureDefinitionTable {
    struct AngleDef {
        int apex, a, b;
    };
    struct DistanceRatioDef {
        std::array<int, 2> num, den;
    };
    struct AreaRatioDef {
        std::array<int, 3> num, den;
    };

    std::array<AngleDef, kAngleFeatures> angles{};
    std::array<DistanceRatioDef, kDistanceRatioFeatures> distance_ratios{};
    std::array<AreaRatioDef, kAreaRatioFeatures> area_ratios{};

    /// Throws ValidationError when any joint index is out of range.
    void validate(const Skeleton& skeleton) const;

    /// Column names in extraction order (a1..a11, dr1..dr4, ar1..ar3).
    static std::array<std::string, kAffectiveDims> column_names();
};

/// Default table for the 21-joint skeleton: shoulder/elbow/hip/knee angles
/// plus neck and pelvis openness; spreads and reach over torso length;
/// upper-versus-lower-body triangle areas.
FeatureDefinitionTable default_feature_table(const Skeleton& skeleton);

/// Table from a JSON config document using joint names, e.g.
///   {"angles": [["Neck","LeftShoulder","RightShoulder"], ...],
///    "distance_ratios": [[["LeftToe","RightToe"],["Neck","Hips"]], ...],
///    "area_ratios": [[[...3 names...],[...3 names...]], ...]}
FeatureDefinitionTable feature_table_from_json(const Skeleton& skeleton, const std::string& json_text);

/// Angle subtended at `apex` by rays to `a` and `b`, in [0, pi].
double joint_angle(const Pose& pose, int apex, int a, int b);

/// ||num_pair|| / ||den_pair|| of joint distances.
double distance_ratio(const Pose& pose, std::array<int, 2> num_pair, std::array<int, 2> den_pair);

/// Triangle area ratio of two joint triples.
double area_ratio(const Pose& pose, std::array<int, 3> num_tri, std::array<int, 3> den_tri);

/// All 18 features of one pose in table order.
AffectiveVector extract_affective(const Pose& pose, const FeatureDefinitionTable& defs);

// ---- templated kernels shared with the differentiable path ----

template <class R>
R joint_angle_t(const Vec3T<R>& apex, const Vec3T<R>& a, const Vec3T<R>& b) {
    Vec3T<R> u = a - apex;
    Vec3T<R> v = b - apex;
    R nu = norm(u);
    R nv = norm(v);
    if (value_of(nu) < 1e-9 || value_of(nv) < 1e-9) {
        throw DegeneratePoseError("joint_angle: coincident joints");
    }
    return acos_clamped(dot(u, v) / (nu * nv));
}

template <class R>
R distance_ratio_t(const Vec3T<R>& n0, const Vec3T<R>& n1, const Vec3T<R>& d0, const Vec3T<R>& d1) {
    R den = norm(d0 - d1);
    if (value_of(den) < 1e-9) {
        throw DegeneratePoseError("distance_ratio: near-zero denominator distance");
    }
    return norm(n0 - n1) / den;
}

template <class R>
R triangle_area_t(const Vec3T<R>& a, const Vec3T<R>& b, const Vec3T<R>& c) {
    return norm(cross(b - a, c - a)) * 0.5;
}

template <class R>
R area_ratio_t(const Vec3T<R>& na, const Vec3T<R>& nb, const Vec3T<R>& nc, const Vec3T<R>& da,
               const Vec3T<R>& db, const Vec3T<R>& dc) {
    R den = triangle_area_t(da, db, dc);
    if (value_of(den) < 1e-12) {
        throw DegeneratePoseError("area_ratio: degenerate denominator triangle");
    }
    return triangle_area_t(na, nb, nc) / den;
}

template <class R>
std::array<R, kAffectiveDims> extract_affective_t(std::span<const Vec3T<R>> positions,
                                                  const FeatureDefinitionTable& defs) {
    auto at = [&](int j) -> const Vec3T<R>& { return positions[static_cast<std::size_t>(j)]; };
    std::array<R, kAffectiveDims> out{};
    int k = 0;
    for (const auto& d : defs.angles) {
        try {
            out[static_cast<std::size_t>(k)] = joint_angle_t(at(d.apex), at(d.a), at(d.b));
        } catch (const DegeneratePoseError& e) {
            throw DegeneratePoseError(std::string(e.what()) + " [feature " + std::to_string(k) + "]");
        }
        ++k;
    }
    for (const auto& d : defs.distance_ratios) {
        try {
            out[static_cast<std::size_t>(k)] =
                distance_ratio_t(at(d.num[0]), at(d.num[1]), at(d.den[0]), at(d.den[1]));
        } catch (const DegeneratePoseError& e) {
            throw DegeneratePoseError(std::string(e.what()) + " [feature " + std::to_string(k) + "]");
        }
        ++k;
    }
    for (const auto& d : defs.area_ratios) {
        try {
            out[static_cast<std::size_t>(k)] = area_ratio_t(at(d.num[0]), at(d.num[1]), at(d.num[2]),
                                                            at(d.den[0]), at(d.den[1]), at(d.den[2]));
        } catch (const DegeneratePoseError& e) {
            throw DegeneratePoseError(std::string(e.what()) + " [feature " + std::to_string(k) + "]");
        }
        ++k;
    }
    return out;
}

} // namespace emogait
