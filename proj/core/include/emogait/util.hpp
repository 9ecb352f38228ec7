#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace emogait {

/// Deterministic random source. One master seed is fanned out to independent
/// streams by purpose label, so adding a consumer does not perturb the draws
/// seen by the others. Distributions are hand-rolled: the standard library's
/// are implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Stream for a named purpose ("split", "init", "curriculum", ...).
    static Rng for_purpose(std::uint64_t master_seed, std::string_view label) {
        // FNV-1a over the label, folded with the master seed.
        std::uint64_t h = 14695981039346656037ull ^ master_seed;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own index draws.
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Thread cap resolved from the EMOGAIT_THREADS environment variable.
/// Deterministic mode forces 1.
int resolve_thread_cap(bool deterministic);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must be
/// independent; outputs should go to pre-sized slots so scheduling order
/// cannot change results.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace emogait
