#pragma once

#include <functional>
#include <span>
#include <vector>

#include "emogait/grad/tensor.hpp"

namespace emogait::grad {

/// Handle to a node on the tensor tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over tensor operations (dense layers, activations,
/// concatenation, slicing, elementwise arithmetic). One tape records one
/// forward pass; backward() runs a full reverse sweep and accumulates the
/// gradients of bound parameters into their owning Tensors.
class Tape {
public:
    /// Constant input; a gradient is tracked but goes nowhere.
    Var leaf(Tensor value);
    Var leaf(std::vector<double> v) { return leaf(Tensor::from_vector(std::move(v))); }

    /// Parameter input. Values are copied from *bound at record time; after
    /// backward(), d(output)/d(param) is accumulated into bound->grad.
    Var param(Tensor* bound);

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].t; }
    std::vector<double>& grad(Var v) { return nodes_[static_cast<std::size_t>(v.id)].t.grad; }

    /// Adds to the gradient seed of a node before backward().
    void add_grad(Var v, std::span<const double> g);

    /// Reverse sweep over every recorded node, then exports parameter
    /// gradients. Throws NumericalError if any value or gradient is
    /// non-finite.
    void backward();

    /// Seeds a single-element node with 1 and runs backward().
    void backward_scalar(Var loss);

    void clear();
    std::size_t size() const { return nodes_.size(); }

    // ---- operations ----
    Var matvec(Var w, Var x);             // [M x N] * [N] -> [M]
    Var dense(Var w, Var b, Var x);       // w x + b
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double s);
    Var concat(std::span<const Var> xs);
    Var slice(Var a, int offset, int len);
    Var elu(Var a);
    Var sigmoid(Var a);
    Var tanh_act(Var a);

private:
    struct Node {
        Tensor t;
        Tensor* bound = nullptr;
        std::function<void(Tape&)> back;
    };

    Var push(Tensor t, std::function<void(Tape&)> back);
    Tensor& tensor(Var v) { return nodes_[static_cast<std::size_t>(v.id)].t; }

    std::vector<Node> nodes_;
};

/// Gated recurrent unit parameters: input and recurrent weights with the
/// reset/update/candidate blocks stacked row-wise ([3H x N], [3H x H]).
struct GruParamVars {
    Var w_ih, w_hh, b_ih, b_hh;
};

/// One GRU step:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r . (W_hn h + b_hn))
///   h' = n + z . (h - n)
Var gru_cell(Tape& tape, const GruParamVars& p, Var x, Var h);

/// Unrolls gru_cell over a sequence, returning the hidden state after each
/// step. Backward through the recorded graph is exact BPTT.
std::vector<Var> gru_forward(Tape& tape, const GruParamVars& p, std::span<const Var> inputs,
                             Var initial_state);

} // namespace emogait::grad
