#include "emogait/grad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "emogait/util.hpp"

namespace emogait::grad {

GradCheckResult finite_difference_check(
    const std::function<double(ParameterStore&, bool)>& loss_fn, ParameterStore& store,
    double epsilon, int max_coords, std::uint64_t seed) {
    store.zero_grads();
    (void)loss_fn(store, true);

    // Snapshot the analytic gradient before the probing passes disturb it.
    std::map<std::string, std::vector<double>> analytic;
    for (const std::string& name : store.names()) analytic[name] = store.get(name).grad;

    std::vector<std::pair<std::string, std::size_t>> coords;
    for (const std::string& name : store.names()) {
        for (std::size_t i = 0; i < store.get(name).values.size(); ++i) coords.emplace_back(name, i);
    }
    Rng rng = Rng::for_purpose(seed, "gradcheck");
    rng.shuffle(coords);
    if (static_cast<int>(coords.size()) > max_coords) coords.resize(static_cast<std::size_t>(max_coords));

    GradCheckResult result;
    for (const auto& [name, idx] : coords) {
        double& slot = store.get(name).values[idx];
        const double x0 = slot;
        slot = x0 + epsilon;
        double fp = loss_fn(store, false);
        slot = x0 - epsilon;
        double fm = loss_fn(store, false);
        slot = x0;
        double numeric = (fp - fm) / (2.0 * epsilon);
        double a = analytic[name][idx];
        double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        result.max_rel_error = std::max(result.max_rel_error, rel);
        ++result.coords_checked;
    }
    return result;
}

} // namespace emogait::grad
