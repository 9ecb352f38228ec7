#include "emogait/grad/tensor.hpp"

#include <cmath>
#include <numeric>

namespace emogait::grad {

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    t.shape = std::move(shape);
    t.values.assign(n, 0.0);
    return t;
}

Tensor Tensor::from_vector(std::vector<double> v) {
    Tensor t;
    t.shape = {static_cast<int>(v.size())};
    t.values = std::move(v);
    return t;
}

void Tensor::check_finite(const std::string& what) const {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericalError("non-finite value in " + what);
    }
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient in " + what);
    }
}

} // namespace emogait::grad
