#pragma once

#include <string>
#include <vector>

#include "emogait/errors.hpp"

namespace emogait {

/// A point in the continuous emotion space: nonnegative weights over C
/// categorical emotions, normalized to a probability distribution. The
/// default four components are ordered [happy, sad, angry, neutral].
struct EmotionVector {
    std::vector<double> components;

    EmotionVector() : components{0.0, 0.0, 0.0, 1.0} {}
    explicit EmotionVector(std::vector<double> c) : components(std::move(c)) {}

    int dims() const { return static_cast<int>(components.size()); }

    double sum() const {
        double s = 0.0;
        for (double v : components) s += v;
        return s;
    }

    /// L1-normalizes in place. Components must be nonnegative and not all zero.
    void normalize() {
        double s = 0.0;
        for (double v : components) {
            if (v < 0.0) throw ValidationError("emotion component must be nonnegative");
            s += v;
        }
        if (s <= 0.0) throw ValidationError("emotion vector must have a positive sum");
        for (double& v : components) v /= s;
    }

    EmotionVector normalized() const {
        EmotionVector e = *this;
        e.normalize();
        return e;
    }

    bool operator==(const EmotionVector&) const = default;
};

/// Parses "h,s,a,n" style comma-separated component lists.
EmotionVector parse_emotion(const std::string& text);

} // namespace emogait
