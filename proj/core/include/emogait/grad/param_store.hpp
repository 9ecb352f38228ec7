#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emogait/grad/tensor.hpp"

namespace emogait::grad {

/// Named trainable tensors with per-parameter Adam moment buffers and the
/// shared optimizer step counter. Creation order is preserved so that
/// initialization and updates are reproducible.
class ParameterStore {
public:
    Tensor& create(const std::string& name, std::vector<int> shape);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) != 0; }

    const std::vector<std::string>& names() const { return order_; }
    std::size_t count() const { return order_.size(); }

    /// Total number of scalar parameters.
    std::size_t coordinate_count() const;

    void zero_grads();
    bool all_grads_allocated() const;

    Tensor& moment1(const std::string& name) { return moments1_.at(name); }
    Tensor& moment2(const std::string& name) { return moments2_.at(name); }
    const Tensor& moment1(const std::string& name) const { return moments1_.at(name); }
    const Tensor& moment2(const std::string& name) const { return moments2_.at(name); }

    std::int64_t step_count = 0;

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> moments1_;
    std::map<std::string, Tensor> moments2_;
    std::vector<std::string> order_;
};

/// Bias-corrected Adam update over every parameter; gradients are zeroed
/// afterwards. Throws UsageError when a parameter has no gradient buffer.
void adam_step(ParameterStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// Euclidean norm of the concatenated gradient.
double global_grad_norm(const ParameterStore& store);

/// Rescales all gradients when their global norm exceeds max_norm.
void clip_grad_norm(ParameterStore& store, double max_norm);

/// Serializes parameters, Adam moments and the step counter (plus a caller
/// supplied JSON metadata string) to a versioned checkpoint document.
void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::string& meta_json);
std::string checkpoint_to_string(const ParameterStore& store, const std::string& meta_json);

/// Restores a checkpoint saved by save_checkpoint. Returns the metadata JSON.
std::string load_checkpoint(const std::string& path, ParameterStore& store);
std::string checkpoint_from_string(const std::string& text, ParameterStore& store);

} // namespace emogait::grad
