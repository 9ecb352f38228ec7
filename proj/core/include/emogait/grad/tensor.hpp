#pragma once

#include <string>
#include <vector>

#include "emogait/errors.hpp"

namespace emogait::grad {

/// Dense value container with an optional gradient buffer of the same shape.
/// Rank is 1 (vectors) or 2 (row-major matrices) everywhere in this project.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor from_vector(std::vector<double> v);

    int size() const { return static_cast<int>(values.size()); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    bool is_vector() const { return shape.size() == 1; }
    bool is_matrix() const { return shape.size() == 2; }

    double& at(int i) { return values[static_cast<std::size_t>(i)]; }
    double at(int i) const { return values[static_cast<std::size_t>(i)]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r * cols() + c)]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r * cols() + c)]; }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
    void zero_grad() { grad.assign(values.size(), 0.0); }
    bool has_grad() const { return grad.size() == values.size() && !values.empty(); }

    /// Throws NumericalError if any value is NaN or infinite.
    void check_finite(const std::string& what) const;
};

} // namespace emogait::grad
