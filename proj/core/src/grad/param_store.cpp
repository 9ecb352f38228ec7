#include "emogait/grad/param_store.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace emogait::grad {

Tensor& ParameterStore::create(const std::string& name, std::vector<int> shape) {
    if (has(name)) throw UsageError("parameter '" + name + "' already exists");
    Tensor t = Tensor::zeros(shape);
    moments1_[name] = Tensor::zeros(shape);
    moments2_[name] = Tensor::zeros(shape);
    order_.push_back(name);
    return params_[name] = std::move(t);
}

Tensor& ParameterStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParameterStore::coordinate_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.values.size();
    return n;
}

void ParameterStore::zero_grads() {
    for (auto& [name, t] : params_) {
        t.ensure_grad();
        t.zero_grad();
    }
}

bool ParameterStore::all_grads_allocated() const {
    for (const auto& [name, t] : params_)
        if (!t.has_grad()) return false;
    return true;
}

void adam_step(ParameterStore& store, double lr, double beta1, double beta2, double eps) {
    for (const std::string& name : store.names()) {
        if (!store.get(name).has_grad()) {
            throw UsageError("adam_step: no gradient for parameter '" + name + "'");
        }
    }
    store.step_count += 1;
    const double t = static_cast<double>(store.step_count);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (const std::string& name : store.names()) {
        Tensor& p = store.get(name);
        Tensor& m = store.moment1(name);
        Tensor& v = store.moment2(name);
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            double g = p.grad[i];
            m.values[i] = beta1 * m.values[i] + (1.0 - beta1) * g;
            v.values[i] = beta2 * v.values[i] + (1.0 - beta2) * g * g;
            double m_hat = m.values[i] / bc1;
            double v_hat = v.values[i] / bc2;
            p.values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
        p.zero_grad();
    }
}

double global_grad_norm(const ParameterStore& store) {
    double ss = 0.0;
    for (const std::string& name : store.names()) {
        const Tensor& p = store.get(name);
        for (double g : p.grad) ss += g * g;
    }
    return std::sqrt(ss);
}

void clip_grad_norm(ParameterStore& store, double max_norm) {
    double n = global_grad_norm(store);
    if (n <= max_norm || n == 0.0) return;
    double s = max_norm / n;
    for (const std::string& name : store.names()) {
        for (double& g : store.get(name).grad) g *= s;
    }
}

namespace {

constexpr const char* kFormatTag = "emogait.checkpoint";
constexpr int kFormatVersion = 1;

} // namespace

std::string checkpoint_to_string(const ParameterStore& store, const std::string& meta_json) {
    nlohmann::ordered_json doc;
    doc["format"] = kFormatTag;
    doc["version"] = kFormatVersion;
    doc["step_count"] = store.step_count;
    doc["meta"] = meta_json.empty() ? nlohmann::ordered_json(nlohmann::ordered_json::object())
                                    : nlohmann::ordered_json::parse(meta_json);
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const std::string& name : store.names()) {
        nlohmann::ordered_json entry;
        entry["shape"] = store.get(name).shape;
        entry["values"] = store.get(name).values;
        entry["adam_m"] = store.moment1(name).values;
        entry["adam_v"] = store.moment2(name).values;
        params[name] = std::move(entry);
    }
    doc["params"] = std::move(params);
    return doc.dump();
}

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::string& meta_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open checkpoint file for writing: " + path);
    out << checkpoint_to_string(store, meta_json);
    if (!out) throw ValidationError("failed writing checkpoint: " + path);
}

std::string checkpoint_from_string(const std::string& text, ParameterStore& store) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != kFormatTag) {
        throw ValidationError("not an emogait checkpoint document");
    }
    if (doc.value("version", -1) != kFormatVersion) {
        throw ValidationError("unsupported checkpoint version");
    }
    store.step_count = doc.at("step_count").get<std::int64_t>();
    for (auto& [name, entry] : doc.at("params").items()) {
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        Tensor& p = store.has(name) ? store.get(name) : store.create(name, shape);
        if (p.shape != shape) throw ValidationError("checkpoint shape mismatch for '" + name + "'");
        p.values = entry.at("values").get<std::vector<double>>();
        store.moment1(name).values = entry.at("adam_m").get<std::vector<double>>();
        store.moment2(name).values = entry.at("adam_v").get<std::vector<double>>();
        if (p.values.size() != static_cast<std::size_t>(p.size())) {
            throw ValidationError("checkpoint value count mismatch for '" + name + "'");
        }
    }
    return doc.value("meta", nlohmann::json::object()).dump();
}

std::string load_checkpoint(const std::string& path, ParameterStore& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return checkpoint_from_string(text, store);
}

} // namespace emogait::grad
