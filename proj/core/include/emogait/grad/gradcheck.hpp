#pragma once

#include <cstdint>
#include <functional>

#include "emogait/grad/param_store.hpp"

namespace emogait::grad {

struct GradCheckResult {
    double max_rel_error = 0.0;
    int coords_checked = 0;
};

/// Central-difference verification of analytic gradients.
///
/// loss_fn(store, with_grad) must return the loss value; when with_grad is
/// true it must also accumulate d(loss)/d(param) into the store's gradient
/// buffers (on top of zeroed gradients). The check samples up to max_coords
/// parameter coordinates, perturbs each by +/- epsilon, and compares
/// (f+ - f-) / (2 eps) against the analytic entry with relative error
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult finite_difference_check(
    const std::function<double(ParameterStore&, bool)>& loss_fn, ParameterStore& store,
    double epsilon, int max_coords = 200, std::uint64_t seed = 0);

} // namespace emogait::grad
