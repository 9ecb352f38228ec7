#include "emogait/grad/tape.hpp"

#include <cmath>
#include <string>

namespace emogait::grad {

Var Tape::push(Tensor t, std::function<void(Tape&)> back) {
    t.zero_grad();
    nodes_.push_back({std::move(t), nullptr, std::move(back)});
    return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::param(Tensor* bound) {
    Var v = push(*bound, nullptr);
    nodes_.back().bound = bound;
    return v;
}

void Tape::add_grad(Var v, std::span<const double> g) {
    Tensor& t = tensor(v);
    if (g.size() != t.values.size()) throw ShapeError("add_grad: seed size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) t.grad[i] += g[i];
}

void Tape::backward() {
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this);
    }
    for (Node& n : nodes_) {
        n.t.check_finite("tape node");
        if (n.bound) {
            n.bound->ensure_grad();
            for (std::size_t i = 0; i < n.t.grad.size(); ++i) n.bound->grad[i] += n.t.grad[i];
        }
    }
}

void Tape::backward_scalar(Var loss) {
    Tensor& t = tensor(loss);
    if (t.size() != 1) throw ShapeError("backward_scalar: loss node must have one element");
    t.grad[0] += 1.0;
    backward();
}

void Tape::clear() { nodes_.clear(); }

Var Tape::matvec(Var w, Var x) {
    const Tensor& wt = value(w);
    const Tensor& xt = value(x);
    if (!wt.is_matrix() || wt.cols() != xt.size()) {
        throw ShapeError("matvec: [" + std::to_string(wt.rows()) + "x" + std::to_string(wt.cols()) +
                         "] vs vector of length " + std::to_string(xt.size()));
    }
    const int m = wt.rows();
    const int n = wt.cols();
    Tensor out = Tensor::zeros({m});
    for (int r = 0; r < m; ++r) {
        const double* row = wt.values.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(n);
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += row[c] * xt.values[static_cast<std::size_t>(c)];
        out.at(r) = acc;
    }
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, wid = w.id, xid = x.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, wid, xid, m, n](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        const Tensor& wt2 = tp.nodes_[static_cast<std::size_t>(wid)].t;
        const Tensor& xt2 = tp.nodes_[static_cast<std::size_t>(xid)].t;
        std::vector<double>& wg = tp.nodes_[static_cast<std::size_t>(wid)].t.grad;
        std::vector<double>& xg = tp.nodes_[static_cast<std::size_t>(xid)].t.grad;
        for (int r = 0; r < m; ++r) {
            double g = og[static_cast<std::size_t>(r)];
            if (g == 0.0) continue;
            const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(n);
            for (int c = 0; c < n; ++c) {
                wg[base + static_cast<std::size_t>(c)] += g * xt2.values[static_cast<std::size_t>(c)];
                xg[static_cast<std::size_t>(c)] += g * wt2.values[base + static_cast<std::size_t>(c)];
            }
        }
    };
    return o;
}

Var Tape::dense(Var w, Var b, Var x) { return add(matvec(w, x), b); }

Var Tape::add(Var a, Var b) {
    const Tensor& at = value(a);
    const Tensor& bt = value(b);
    if (at.size() != bt.size()) throw ShapeError("add: size mismatch");
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = at.at(i) + bt.at(i);
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id, bid = b.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid, bid](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        std::vector<double>& bg = tp.nodes_[static_cast<std::size_t>(bid)].t.grad;
        for (std::size_t i = 0; i < og.size(); ++i) {
            ag[i] += og[i];
            bg[i] += og[i];
        }
    };
    return o;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& at = value(a);
    const Tensor& bt = value(b);
    if (at.size() != bt.size()) throw ShapeError("sub: size mismatch");
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = at.at(i) - bt.at(i);
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id, bid = b.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid, bid](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        std::vector<double>& bg = tp.nodes_[static_cast<std::size_t>(bid)].t.grad;
        for (std::size_t i = 0; i < og.size(); ++i) {
            ag[i] += og[i];
            bg[i] -= og[i];
        }
    };
    return o;
}

Var Tape::hadamard(Var a, Var b) {
    const Tensor& at = value(a);
    const Tensor& bt = value(b);
    if (at.size() != bt.size()) throw ShapeError("hadamard: size mismatch");
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = at.at(i) * bt.at(i);
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id, bid = b.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid, bid](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        const Tensor& at2 = tp.nodes_[static_cast<std::size_t>(aid)].t;
        const Tensor& bt2 = tp.nodes_[static_cast<std::size_t>(bid)].t;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        std::vector<double>& bg = tp.nodes_[static_cast<std::size_t>(bid)].t.grad;
        for (std::size_t i = 0; i < og.size(); ++i) {
            ag[i] += og[i] * bt2.values[i];
            bg[i] += og[i] * at2.values[i];
        }
    };
    return o;
}

Var Tape::scale(Var a, double s) {
    const Tensor& at = value(a);
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = at.at(i) * s;
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid, s](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * s;
    };
    return o;
}

Var Tape::concat(std::span<const Var> xs) {
    int total = 0;
    for (Var v : xs) total += value(v).size();
    Tensor out = Tensor::zeros({total});
    int at = 0;
    for (Var v : xs) {
        const Tensor& t = value(v);
        for (int i = 0; i < t.size(); ++i) out.at(at + i) = t.at(i);
        at += t.size();
    }
    Var o = push(std::move(out), nullptr);
    std::vector<int> ids;
    ids.reserve(xs.size());
    for (Var v : xs) ids.push_back(v.id);
    const int oid = o.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, ids](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        std::size_t at2 = 0;
        for (int id : ids) {
            std::vector<double>& g = tp.nodes_[static_cast<std::size_t>(id)].t.grad;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[at2 + i];
            at2 += g.size();
        }
    };
    return o;
}

Var Tape::slice(Var a, int offset, int len) {
    const Tensor& at = value(a);
    if (offset < 0 || len <= 0 || offset + len > at.size()) {
        throw ShapeError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + len) + ") out of bounds for size " +
                         std::to_string(at.size()));
    }
    Tensor out = Tensor::zeros({len});
    for (int i = 0; i < len; ++i) out.at(i) = at.at(offset + i);
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid, offset, len](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        for (int i = 0; i < len; ++i) ag[static_cast<std::size_t>(offset + i)] += og[static_cast<std::size_t>(i)];
    };
    return o;
}

Var Tape::elu(Var a) {
    const Tensor& at = value(a);
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) {
        double x = at.at(i);
        out.at(i) = x > 0.0 ? x : std::expm1(x);
    }
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid](Tape& tp) {
        const std::vector<double>& og = tp.nodes_[static_cast<std::size_t>(oid)].t.grad;
        const Tensor& at2 = tp.nodes_[static_cast<std::size_t>(aid)].t;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        for (std::size_t i = 0; i < og.size(); ++i) {
            double x = at2.values[i];
            ag[i] += og[i] * (x > 0.0 ? 1.0 : std::exp(x));
        }
    };
    return o;
}

Var Tape::sigmoid(Var a) {
    const Tensor& at = value(a);
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = 1.0 / (1.0 + std::exp(-at.at(i)));
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid](Tape& tp) {
        const Tensor& ot = tp.nodes_[static_cast<std::size_t>(oid)].t;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        for (std::size_t i = 0; i < ot.grad.size(); ++i) {
            double y = ot.values[i];
            ag[i] += ot.grad[i] * y * (1.0 - y);
        }
    };
    return o;
}

Var Tape::tanh_act(Var a) {
    const Tensor& at = value(a);
    Tensor out = Tensor::zeros(at.shape);
    for (int i = 0; i < out.size(); ++i) out.at(i) = std::tanh(at.at(i));
    Var o = push(std::move(out), nullptr);
    const int oid = o.id, aid = a.id;
    nodes_[static_cast<std::size_t>(oid)].back = [oid, aid](Tape& tp) {
        const Tensor& ot = tp.nodes_[static_cast<std::size_t>(oid)].t;
        std::vector<double>& ag = tp.nodes_[static_cast<std::size_t>(aid)].t.grad;
        for (std::size_t i = 0; i < ot.grad.size(); ++i) {
            double y = ot.values[i];
            ag[i] += ot.grad[i] * (1.0 - y * y);
        }
    };
    return o;
}

Var gru_cell(Tape& tape, const GruParamVars& p, Var x, Var h) {
    const int h3 = tape.value(p.w_hh).cols();
    Var gi = tape.dense(p.w_ih, p.b_ih, x); // [3H]
    Var gh = tape.dense(p.w_hh, p.b_hh, h); // [3H]
    Var r = tape.sigmoid(tape.add(tape.slice(gi, 0, h3), tape.slice(gh, 0, h3)));
    Var z = tape.sigmoid(tape.add(tape.slice(gi, h3, h3), tape.slice(gh, h3, h3)));
    Var n = tape.tanh_act(
        tape.add(tape.slice(gi, 2 * h3, h3), tape.hadamard(r, tape.slice(gh, 2 * h3, h3))));
    // h' = n + z . (h - n) = (1 - z) . n + z . h
    return tape.add(n, tape.hadamard(z, tape.sub(h, n)));
}

std::vector<Var> gru_forward(Tape& tape, const GruParamVars& p, std::span<const Var> inputs,
                             Var initial_state) {
    std::vector<Var> states;
    states.reserve(inputs.size());
    Var h = initial_state;
    for (Var x : inputs) {
        h = gru_cell(tape, p, x, h);
        states.push_back(h);
    }
    return states;
}

} // namespace emogait::grad
