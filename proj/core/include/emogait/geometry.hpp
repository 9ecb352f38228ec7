#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace emogait {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Scalar helpers with a double overload here and a differentiable overload in
// grad/scalar_tape.hpp. The templated geometry below calls them unqualified so
// the same code runs on plain doubles and on tape-recorded scalars.

inline double value_of(double x) { return x; }

/// A constant "in the same computation context" as `like` (trivial for double;
/// the tape overload allocates a constant node on `like`'s tape).
inline double make_const(double /*like*/, double v) { return v; }

inline double acos_clamped(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }
inline double asin_clamped(double x) { return std::asin(std::clamp(x, -1.0, 1.0)); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

/// Wraps an angle to [0, 2*pi).
inline double wrap_angle_positive(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

template <class R>
struct Vec3T {
    R x{}, y{}, z{};

    bool operator==(const Vec3T&) const = default;
};

using Vec3 = Vec3T<double>;

template <class R>
inline Vec3T<R> operator+(const Vec3T<R>& a, const Vec3T<R>& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <class R>
inline Vec3T<R> operator-(const Vec3T<R>& a, const Vec3T<R>& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <class R>
inline Vec3T<R> operator-(const Vec3T<R>& a) {
    return {-a.x, -a.y, -a.z};
}

template <class R, class S>
inline Vec3T<R> scaled(const Vec3T<R>& v, const S& s) {
    return {v.x * s, v.y * s, v.z * s};
}

template <class A, class B>
inline auto dot(const Vec3T<A>& a, const Vec3T<B>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class A, class B>
inline auto cross(const Vec3T<A>& a, const Vec3T<B>& b) -> Vec3T<decltype(a.x * b.y)> {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class R>
inline R norm(const Vec3T<R>& v) {
    using std::sqrt;
    return sqrt(dot(v, v));
}

template <class R>
inline Vec3T<R> normalized(const Vec3T<R>& v) {
    R n = norm(v);
    return {v.x / n, v.y / n, v.z / n};
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Unit quaternion (w, x, y, z) representing a 3D rotation.
template <class R>
struct QuatT {
    R w{}, x{}, y{}, z{};

    bool operator==(const QuatT&) const = default;
};

using Versor = QuatT<double>;

inline Versor versor_identity() { return {1.0, 0.0, 0.0, 0.0}; }

template <class R>
inline R quat_norm(const QuatT<R>& q) {
    using std::sqrt;
    return sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

template <class R>
inline QuatT<R> quat_normalized(const QuatT<R>& q) {
    R n = quat_norm(q);
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

template <class R>
inline QuatT<R> quat_conjugate(const QuatT<R>& q) {
    return {q.w, -q.x, -q.y, -q.z};
}

template <class A, class B>
inline auto quat_dot(const QuatT<A>& a, const QuatT<B>& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Hamilton product a*b (apply b first, then a).
template <class R>
inline QuatT<R> quat_mul(const QuatT<R>& a, const QuatT<R>& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

/// Rotates vector v by unit quaternion q: v + 2w(u x v) + 2 u x (u x v).
template <class R, class S>
inline Vec3T<R> rotate(const QuatT<R>& q, const Vec3T<S>& v) {
    // t = 2 (u x v)
    R tx = (q.y * v.z - q.z * v.y) * 2.0;
    R ty = (q.z * v.x - q.x * v.z) * 2.0;
    R tz = (q.x * v.y - q.y * v.x) * 2.0;
    return {v.x + q.w * tx + (q.y * tz - q.z * ty),
            v.y + q.w * ty + (q.z * tx - q.x * tz),
            v.z + q.w * tz + (q.x * ty - q.y * tx)};
}

inline Versor versor_from_axis_angle(const Vec3& axis, double angle) {
    Vec3 u = normalized(axis);
    double h = 0.5 * angle;
    double s = std::sin(h);
    return {std::cos(h), u.x * s, u.y * s, u.z * s};
}

/// Intrinsic Z-Y-X Euler decomposition, each angle wrapped to [0, 2*pi).
/// Composing Rz(out[0]) * Ry(out[1]) * Rx(out[2]) reproduces q's rotation.
/// At gimbal lock (|pitch| = pi/2) the roll is set to 0 by convention and the
/// yaw absorbs the free angle.
template <class R>
inline std::array<R, 3> euler_zyx(const QuatT<R>& q) {
    using std::atan2;
    using std::sqrt;
    R sin_pitch = (q.w * q.y - q.x * q.z) * 2.0;
    R r10 = (q.x * q.y + q.w * q.z) * 2.0;        // sin(yaw) cos(pitch)
    R r00 = 1.0 - (q.y * q.y + q.z * q.z) * 2.0;  // cos(yaw) cos(pitch)
    R r21 = (q.y * q.z + q.w * q.x) * 2.0;        // cos(pitch) sin(roll)
    R r22 = 1.0 - (q.x * q.x + q.y * q.y) * 2.0;  // cos(pitch) cos(roll)

    // |cos(pitch)| recovered from the yaw row keeps the pitch well
    // conditioned all the way to the pole (asin alone loses ~sqrt(eps)).
    R cos_pitch = sqrt(r10 * r10 + r00 * r00);
    R pitch = atan2(sin_pitch, cos_pitch);
    R yaw{}, roll{};
    if (value_of(cos_pitch) < 1e-4) {
        // Gimbal lock: yaw and roll are degenerate; fold the free angle into
        // yaw (roll 0 by convention) using entries that stay O(1) at the pole.
        R r01 = (q.x * q.y - q.w * q.z) * 2.0;    // -> -sin(yaw -/+ roll)
        R r11 = 1.0 - (q.x * q.x + q.z * q.z) * 2.0;
        yaw = atan2(-r01, r11);
        roll = make_const(pitch, 0.0);
    } else {
        yaw = atan2(r10, r00);
        roll = atan2(r21, r22);
    }
    return {wrap_angle_positive(yaw), wrap_angle_positive(pitch), wrap_angle_positive(roll)};
}

/// The shortest-arc rotation taking direction(from) to direction(to).
/// Antiparallel inputs rotate by pi about a fixed axis orthogonal to `from`
/// (world-up x from, falling back to world-x when from is vertical).
Versor shortest_arc(const Vec3& from, const Vec3& to);

/// Least-squares rotation q minimizing sum_i ||rotate(q, from_i) - to_i||^2
/// (Davenport's q-method). Exact when an exact rotation exists.
Versor best_fit_rotation(std::span<const std::pair<Vec3, Vec3>> pairs);

} // namespace emogait
