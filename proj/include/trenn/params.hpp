#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "trenn/tensor.hpp"

namespace trenn {

// Flat set of named trainable tensors. Ordered map keeps iteration (and
// therefore training) deterministic.
class ParamStore {
public:
    void add(const std::string& name, Tensor t) {
        if (params_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
        params_.emplace(name, std::move(t));
    }

    Tensor& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
        return it->second;
    }
    bool contains(const std::string& name) const { return params_.count(name) > 0; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& [_, t] : params_) n += t.size();
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t size() const { return params_.size(); }

private:
    std::map<std::string, Tensor> params_;
};

// Glorot-uniform weight init; biases start at zero.
inline Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(rows, cols);
    for (double& x : t.data) x = dist(rng);
    return t;
}

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::int64_t step = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One Adam update over every named gradient. Parameters without a gradient
// entry are left untouched.
void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace trenn
