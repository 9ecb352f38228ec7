#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "emogait/geometry.hpp"

namespace emogait::grad {

/// Flat reverse-mode tape over scalar operations. Every op stores its parent
/// indices and local partial derivatives at forward time, so backward is a
/// single reverse sweep with no closures. Used for the loss-side math
/// (versor normalization, FK, feature extraction, Euler conversion) where the
/// graph is many small scalar ops; the network layers use the tensor Tape.
class ScalarTape {
public:
    int constant(double v) { return push(v, -1, 0.0, -1, 0.0); }
    int input(double v) { return push(v, -1, 0.0, -1, 0.0); }

    int unary(double value, int p0, double d0) { return push(value, p0, d0, -1, 0.0); }
    int binary(double value, int p0, double d0, int p1, double d1) {
        return push(value, p0, d0, p1, d1);
    }

    double value(int id) const { return val_[static_cast<std::size_t>(id)]; }

    /// Reverse sweep seeding d(root)/d(root) = 1.
    void backward(int root) {
        adj_.assign(val_.size(), 0.0);
        adj_[static_cast<std::size_t>(root)] = 1.0;
        for (int i = root; i >= 0; --i) {
            double a = adj_[static_cast<std::size_t>(i)];
            if (a == 0.0) continue;
            const Rec& r = rec_[static_cast<std::size_t>(i)];
            if (r.p0 >= 0) adj_[static_cast<std::size_t>(r.p0)] += r.d0 * a;
            if (r.p1 >= 0) adj_[static_cast<std::size_t>(r.p1)] += r.d1 * a;
        }
    }

    double adjoint(int id) const { return adj_[static_cast<std::size_t>(id)]; }

    void clear() {
        rec_.clear();
        val_.clear();
        adj_.clear();
    }

    std::size_t size() const { return val_.size(); }

private:
    struct Rec {
        int p0, p1;
        double d0, d1;
    };

    int push(double value, int p0, double d0, int p1, double d1) {
        rec_.push_back({p0, p1, d0, d1});
        val_.push_back(value);
        return static_cast<int>(val_.size()) - 1;
    }

    std::vector<Rec> rec_;
    std::vector<double> val_;
    std::vector<double> adj_;
};

/// Handle to a tape node with operator sugar, so the templated geometry in
/// geometry.hpp / skeleton.hpp runs unchanged on recorded scalars.
struct Scalar {
    ScalarTape* tape = nullptr;
    int id = -1;
};

inline Scalar make_scalar(ScalarTape& t, double v) { return {&t, t.input(v)}; }

inline double value_of(Scalar a) { return a.tape->value(a.id); }
inline Scalar make_const(Scalar like, double v) { return {like.tape, like.tape->constant(v)}; }

inline Scalar operator+(Scalar a, Scalar b) {
    return {a.tape, a.tape->binary(value_of(a) + value_of(b), a.id, 1.0, b.id, 1.0)};
}
inline Scalar operator-(Scalar a, Scalar b) {
    return {a.tape, a.tape->binary(value_of(a) - value_of(b), a.id, 1.0, b.id, -1.0)};
}
inline Scalar operator*(Scalar a, Scalar b) {
    return {a.tape, a.tape->binary(value_of(a) * value_of(b), a.id, value_of(b), b.id, value_of(a))};
}
inline Scalar operator/(Scalar a, Scalar b) {
    double bv = value_of(b);
    double av = value_of(a);
    return {a.tape, a.tape->binary(av / bv, a.id, 1.0 / bv, b.id, -av / (bv * bv))};
}
inline Scalar operator-(Scalar a) { return {a.tape, a.tape->unary(-value_of(a), a.id, -1.0)}; }

inline Scalar operator+(Scalar a, double c) { return {a.tape, a.tape->unary(value_of(a) + c, a.id, 1.0)}; }
inline Scalar operator+(double c, Scalar a) { return a + c; }
inline Scalar operator-(Scalar a, double c) { return a + (-c); }
inline Scalar operator-(double c, Scalar a) { return {a.tape, a.tape->unary(c - value_of(a), a.id, -1.0)}; }
inline Scalar operator*(Scalar a, double c) { return {a.tape, a.tape->unary(value_of(a) * c, a.id, c)}; }
inline Scalar operator*(double c, Scalar a) { return a * c; }
inline Scalar operator/(Scalar a, double c) { return a * (1.0 / c); }
inline Scalar operator/(double c, Scalar a) {
    double av = value_of(a);
    return {a.tape, a.tape->unary(c / av, a.id, -c / (av * av))};
}

inline Scalar sqrt(Scalar a) {
    double v = std::sqrt(value_of(a));
    return {a.tape, a.tape->unary(v, a.id, v > 0.0 ? 0.5 / v : 0.0)};
}
inline Scalar abs(Scalar a) {
    double v = value_of(a);
    return {a.tape, a.tape->unary(std::abs(v), a.id, v >= 0.0 ? 1.0 : -1.0)};
}
inline Scalar sin(Scalar a) {
    return {a.tape, a.tape->unary(std::sin(value_of(a)), a.id, std::cos(value_of(a)))};
}
inline Scalar cos(Scalar a) {
    return {a.tape, a.tape->unary(std::cos(value_of(a)), a.id, -std::sin(value_of(a)))};
}
inline Scalar atan2(Scalar y, Scalar x) {
    double yv = value_of(y);
    double xv = value_of(x);
    double den = xv * xv + yv * yv;
    return {y.tape, y.tape->binary(std::atan2(yv, xv), y.id, xv / den, x.id, -yv / den)};
}

/// acos of the input clamped to [-1, 1]; derivative 0 outside the open interval.
inline Scalar acos_clamped(Scalar a) {
    double v = value_of(a);
    double u = std::clamp(v, -1.0, 1.0);
    double d = std::abs(v) < 1.0 ? -1.0 / std::sqrt(1.0 - u * u) : 0.0;
    return {a.tape, a.tape->unary(std::acos(u), a.id, d)};
}
inline Scalar asin_clamped(Scalar a) {
    double v = value_of(a);
    double u = std::clamp(v, -1.0, 1.0);
    double d = std::abs(v) < 1.0 ? 1.0 / std::sqrt(1.0 - u * u) : 0.0;
    return {a.tape, a.tape->unary(std::asin(u), a.id, d)};
}

/// Wrap to (-pi, pi]; derivative 1 (the wrap is a piecewise shift).
inline Scalar wrap_angle(Scalar a) {
    return {a.tape, a.tape->unary(emogait::wrap_angle(value_of(a)), a.id, 1.0)};
}

/// Wrap to [0, 2*pi); derivative 1.
inline Scalar wrap_angle_positive(Scalar a) {
    return {a.tape, a.tape->unary(emogait::wrap_angle_positive(value_of(a)), a.id, 1.0)};
}

} // namespace emogait::grad
