#include "trenn/params.hpp"

#include <cmath>

namespace trenn {

void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
    state.step += 1;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& [name, g] : grads) {
        Tensor& p = params.at(name);
        if (!p.same_shape(g)) {
            throw std::invalid_argument("adam_step: gradient shape " + g.shape_str() +
                                        " does not match parameter " + name + " " + p.shape_str());
        }
        Tensor& m = state.m.try_emplace(name, Tensor(p.rows, p.cols)).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor(p.rows, p.cols)).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / b1t;
            const double vhat = v.data[i] / b2t;
            p.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace trenn
