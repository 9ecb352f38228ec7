#include <doctest.h>

#include <cmath>

#include "emogait/grad/gradcheck.hpp"
#include "emogait/grad/scalar_tape.hpp"
#include "emogait/grad/tape.hpp"
#include "fixtures.hpp"

using namespace emogait;
using grad::ParameterStore;
using grad::Tape;
using grad::Tensor;
using grad::Var;

namespace {

void fill_random(Tensor& t, Rng& rng, double scale = 0.5) {
    for (double& v : t.values) v = rng.uniform(-scale, scale);
}

/// Scalar loss: sum of squares of a tape node.
double sum_squares_and_seed(Tape& tape, Var v, bool with_grad) {
    const Tensor& t = tape.value(v);
    double acc = 0.0;
    std::vector<double> seed(t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        acc += t.values[i] * t.values[i];
        seed[i] = 2.0 * t.values[i];
    }
    if (with_grad) {
        tape.add_grad(v, seed);
        tape.backward();
    }
    return acc;
}

} // namespace

TEST_SUITE("grad_engine") {

TEST_CASE("dense: identity weights pass through, zero input gives the bias") {
    ParameterStore store;
    Tensor& w = store.create("w", {3, 3});
    Tensor& b = store.create("b", {3});
    for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
    b.values = {0.5, -1.0, 2.0};

    Tape tape;
    Var x = tape.leaf(std::vector<double>{1.0, 2.0, 3.0});
    Var y = tape.dense(tape.param(&w), tape.param(&b), x);
    CHECK(tape.value(y).values[0] == doctest::Approx(1.5));
    CHECK(tape.value(y).values[1] == doctest::Approx(1.0));
    CHECK(tape.value(y).values[2] == doctest::Approx(5.0));

    Tape tape2;
    Var x0 = tape2.leaf(std::vector<double>{0.0, 0.0, 0.0});
    Var y0 = tape2.dense(tape2.param(&w), tape2.param(&b), x0);
    for (int i = 0; i < 3; ++i) CHECK(tape2.value(y0).values[static_cast<std::size_t>(i)] == b.values[static_cast<std::size_t>(i)]);

    Tape tape3;
    Var bad = tape3.leaf(std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(tape3.matvec(tape3.param(&w), bad), ShapeError);
}

TEST_CASE("dense gradients match finite differences to 1e-6") {
    Rng rng(1);
    ParameterStore store;
    fill_random(store.create("w", {4, 6}), rng);
    fill_random(store.create("b", {4}), rng);
    std::vector<double> input;
    for (int i = 0; i < 6; ++i) input.push_back(rng.uniform(-1, 1));

    auto loss = [&](ParameterStore& s, bool with_grad) {
        Tape tape;
        Var y = tape.dense(tape.param(&s.get("w")), tape.param(&s.get("b")), tape.leaf(input));
        return sum_squares_and_seed(tape, y, with_grad);
    };
    auto r = grad::finite_difference_check(loss, store, 1e-5, 200, 0);
    CHECK(r.coords_checked == 28);
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("elu values and gradient") {
    Tape tape;
    Var x = tape.leaf(std::vector<double>{0.0, 1.0, -20.0});
    Var y = tape.elu(x);
    CHECK(tape.value(y).values[0] == 0.0);
    CHECK(tape.value(y).values[1] == 1.0);
    CHECK(tape.value(y).values[2] == doctest::Approx(-1.0).epsilon(1e-8));

    Rng rng(2);
    ParameterStore store;
    fill_random(store.create("x", {8}), rng, 1.5);
    auto loss = [&](ParameterStore& s, bool with_grad) {
        Tape t;
        Var v = t.elu(t.param(&s.get("x")));
        return sum_squares_and_seed(t, v, with_grad);
    };
    CHECK(grad::finite_difference_check(loss, store, 1e-5, 200, 0).max_rel_error < 1e-3);
}

TEST_CASE("activation and arithmetic ops pass finite differences") {
    Rng rng(3);
    ParameterStore store;
    fill_random(store.create("a", {5}), rng);
    fill_random(store.create("b", {5}), rng);
    auto loss = [&](ParameterStore& s, bool with_grad) {
        Tape t;
        Var a = t.param(&s.get("a"));
        Var b = t.param(&s.get("b"));
        Var v = t.hadamard(t.sigmoid(a), t.tanh_act(b));
        v = t.add(v, t.scale(t.sub(a, b), 0.3));
        std::array<Var, 2> halves{t.slice(v, 0, 2), t.slice(v, 2, 3)};
        Var w = t.concat(halves);
        return sum_squares_and_seed(t, w, with_grad);
    };
    CHECK(grad::finite_difference_check(loss, store, 1e-5, 200, 1).max_rel_error < 1e-3);
}

TEST_CASE("gru: zero parameters and zero state give zero outputs") {
    ParameterStore store;
    int h = 4, in = 3;
    store.create("gru.ih.w", {3 * h, in});
    store.create("gru.hh.w", {3 * h, h});
    store.create("gru.ih.b", {3 * h});
    store.create("gru.hh.b", {3 * h});
    Tape tape;
    grad::GruParamVars p{tape.param(&store.get("gru.ih.w")), tape.param(&store.get("gru.hh.w")),
                         tape.param(&store.get("gru.ih.b")), tape.param(&store.get("gru.hh.b"))};
    std::vector<Var> inputs;
    for (int t = 0; t < 3; ++t) inputs.push_back(tape.leaf(std::vector<double>{0.3, -0.2, 0.9}));
    Var h0 = tape.leaf(Tensor::zeros({h}));
    auto states = grad::gru_forward(tape, p, inputs, h0);
    for (Var s : states) {
        for (double v : tape.value(s).values) CHECK(v == 0.0);
    }
}

TEST_CASE("gru: T=1 equals a single cell application") {
    Rng rng(4);
    ParameterStore store;
    int h = 5, in = 4;
    fill_random(store.create("ih.w", {3 * h, in}), rng);
    fill_random(store.create("hh.w", {3 * h, h}), rng);
    fill_random(store.create("ih.b", {3 * h}), rng);
    fill_random(store.create("hh.b", {3 * h}), rng);
    std::vector<double> x0, hinit;
    for (int i = 0; i < in; ++i) x0.push_back(rng.uniform(-1, 1));
    for (int i = 0; i < h; ++i) hinit.push_back(rng.uniform(-1, 1));

    Tape tape;
    grad::GruParamVars p{tape.param(&store.get("ih.w")), tape.param(&store.get("hh.w")),
                         tape.param(&store.get("ih.b")), tape.param(&store.get("hh.b"))};
    Var hv = tape.leaf(hinit);
    Var cell = grad::gru_cell(tape, p, tape.leaf(x0), hv);
    std::vector<Var> seq{tape.leaf(x0)};
    auto states = grad::gru_forward(tape, p, seq, hv);
    REQUIRE(states.size() == 1);
    for (int i = 0; i < h; ++i) {
        CHECK(tape.value(states[0]).values[static_cast<std::size_t>(i)] ==
              doctest::Approx(tape.value(cell).values[static_cast<std::size_t>(i)]).epsilon(1e-15));
    }
}

TEST_CASE("gru: T=3 backward-through-time matches finite differences on every parameter") {
    Rng rng(5);
    ParameterStore store;
    int h = 3, in = 2, T = 3;
    fill_random(store.create("ih.w", {3 * h, in}), rng);
    fill_random(store.create("hh.w", {3 * h, h}), rng);
    fill_random(store.create("ih.b", {3 * h}), rng);
    fill_random(store.create("hh.b", {3 * h}), rng);
    std::vector<std::vector<double>> xs;
    for (int t = 0; t < T; ++t) xs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});

    auto loss = [&](ParameterStore& s, bool with_grad) {
        Tape tape;
        grad::GruParamVars p{tape.param(&s.get("ih.w")), tape.param(&s.get("hh.w")),
                             tape.param(&s.get("ih.b")), tape.param(&s.get("hh.b"))};
        std::vector<Var> inputs;
        for (const auto& x : xs) inputs.push_back(tape.leaf(x));
        auto states = grad::gru_forward(tape, p, inputs, tape.leaf(Tensor::zeros({h})));
        double acc = 0.0;
        for (Var sv : states) {
            const Tensor& t = tape.value(sv);
            std::vector<double> seed(t.values.size());
            for (std::size_t i = 0; i < t.values.size(); ++i) {
                acc += t.values[i] * t.values[i];
                seed[i] = 2.0 * t.values[i];
            }
            if (with_grad) tape.add_grad(sv, seed);
        }
        if (with_grad) tape.backward();
        return acc;
    };
    auto r = grad::finite_difference_check(loss, store, 1e-5, 1000, 2);
    CHECK(r.coords_checked == static_cast<int>(store.coordinate_count()));
    CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    ParameterStore store;
    Tensor& p = store.create("p", {4});
    p.values = {1.0, -2.0, 3.0, 0.5};
    store.zero_grads();
    std::vector<double> before = p.values;
    adam_step(store, 0.01);
    CHECK(p.values == before);
    CHECK(store.step_count == 1);
}

TEST_CASE("adam: first-step update magnitude is bounded by lr") {
    Rng rng(6);
    ParameterStore store;
    Tensor& p = store.create("p", {16});
    fill_random(p, rng, 2.0);
    std::vector<double> before = p.values;
    p.ensure_grad();
    for (double& g : p.grad) g = rng.uniform(-3, 3);
    adam_step(store, 0.01);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        CHECK(std::abs(p.values[i] - before[i]) <= 0.01 * (1.0 + 1e-6));
    }
}

TEST_CASE("adam: missing gradients raise a usage error") {
    ParameterStore store;
    store.create("p", {4});
    CHECK_THROWS_AS(adam_step(store, 0.01), UsageError);
}

TEST_CASE("adam converges on a quadratic bowl") {
    Rng rng(7);
    ParameterStore store;
    Tensor& p = store.create("p", {8});
    fill_random(p, rng, 1.0);
    for (int step = 0; step < 500; ++step) {
        p.ensure_grad();
        for (std::size_t i = 0; i < p.values.size(); ++i) p.grad[i] = 2.0 * p.values[i];
        adam_step(store, 0.01);
    }
    double f = 0.0;
    for (double v : p.values) f += v * v;
    CHECK(f < 1e-4);
}

TEST_CASE("gradient clipping rescales only above the threshold") {
    ParameterStore store;
    Tensor& p = store.create("p", {2});
    p.ensure_grad();
    p.grad = {3.0, 4.0};
    clip_grad_norm(store, 10.0);
    CHECK(p.grad[0] == 3.0);
    clip_grad_norm(store, 2.5);
    CHECK(global_grad_norm(store) == doctest::Approx(2.5));
}

TEST_CASE("finite_difference_check: constant loss passes trivially") {
    ParameterStore store;
    store.create("p", {5});
    auto loss = [&](ParameterStore& s, bool with_grad) {
        if (with_grad) s.get("p").ensure_grad();
        return 42.0;
    };
    auto r = grad::finite_difference_check(loss, store, 1e-5, 200, 0);
    CHECK(r.max_rel_error == 0.0);
}

TEST_CASE("scalar tape: elementary partials match finite differences") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        double a0 = rng.uniform(-2, 2);
        double b0 = rng.uniform(0.2, 2.0);
        auto f = [&](double a, double b) {
            grad::ScalarTape tape;
            grad::Scalar sa = grad::make_scalar(tape, a);
            grad::Scalar sb = grad::make_scalar(tape, b);
            grad::Scalar v = sa * sb + sin(sa) / sb - sqrt(sb) * 0.7;
            v = v + atan2(sa, sb) + acos_clamped(sa * 0.3) + abs(sa - sb);
            tape.backward(v.id);
            return std::tuple<double, double, double>{tape.value(v.id), tape.adjoint(sa.id),
                                                      tape.adjoint(sb.id)};
        };
        auto [v, da, db] = f(a0, b0);
        const double eps = 1e-6;
        auto [vp, d1, d2] = f(a0 + eps, b0);
        auto [vm, d3, d4] = f(a0 - eps, b0);
        CHECK(da == doctest::Approx((vp - vm) / (2 * eps)).epsilon(1e-4));
        auto [vpb, d5, d6] = f(a0, b0 + eps);
        auto [vmb, d7, d8] = f(a0, b0 - eps);
        CHECK(db == doctest::Approx((vpb - vmb) / (2 * eps)).epsilon(1e-4));
        CHECK(std::isfinite(v));
    }
}

TEST_CASE("backward of a sum equals the sum of backwards") {
    Rng rng(9);
    ParameterStore store;
    fill_random(store.create("w", {3, 3}), rng);
    std::vector<double> input{0.2, -0.4, 0.8};

    auto grads_for = [&](bool first, bool second) {
        store.zero_grads();
        Tape tape;
        Var w = tape.param(&store.get("w"));
        Var y = tape.matvec(w, tape.leaf(input));
        std::vector<double> seed1(3, 0.0), seed2(3, 0.0);
        const Tensor& t = tape.value(y);
        for (int i = 0; i < 3; ++i) {
            seed1[static_cast<std::size_t>(i)] = 2.0 * t.values[static_cast<std::size_t>(i)];
            seed2[static_cast<std::size_t>(i)] = 1.0;
        }
        if (first) tape.add_grad(y, seed1);
        if (second) tape.add_grad(y, seed2);
        tape.backward();
        return store.get("w").grad;
    };
    auto g1 = grads_for(true, false);
    auto g2 = grads_for(false, true);
    auto gsum = grads_for(true, true);
    for (std::size_t i = 0; i < gsum.size(); ++i) {
        CHECK(gsum[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("non-finite activations raise a numerical error on backward") {
    ParameterStore store;
    Tensor& p = store.create("p", {2});
    p.values = {1e308, 1e308};
    Tape tape;
    Var v = tape.hadamard(tape.param(&p), tape.param(&p)); // overflows to inf
    std::vector<double> seed{1.0, 1.0};
    tape.add_grad(v, seed);
    CHECK_THROWS_AS(tape.backward(), NumericalError);
}

TEST_CASE("checkpoint round-trip preserves parameters, moments and step count") {
    Rng rng(10);
    ParameterStore store;
    fill_random(store.create("a.w", {3, 2}), rng);
    fill_random(store.create("b", {4}), rng);
    store.zero_grads();
    for (double& g : store.get("a.w").grad) g = rng.uniform(-1, 1);
    for (double& g : store.get("b").grad) g = rng.uniform(-1, 1);
    adam_step(store, 0.005);

    std::string text = grad::checkpoint_to_string(store, R"({"note": 1})");
    ParameterStore back;
    std::string meta = grad::checkpoint_from_string(text, back);
    CHECK(meta.find("note") != std::string::npos);
    CHECK(back.step_count == store.step_count);
    for (const std::string& name : store.names()) {
        CHECK(back.get(name).values == store.get(name).values);
        CHECK(back.moment1(name).values == store.moment1(name).values);
        CHECK(back.moment2(name).values == store.moment2(name).values);
    }
    // Serialization is bitwise stable.
    CHECK(grad::checkpoint_to_string(back, R"({"note": 1})") == text);
}

} // TEST_SUITE
