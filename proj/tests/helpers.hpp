#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "trenn/tape.hpp"

namespace trenn::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor t(rows, cols);
    for (double& x : t.data) x = dist(rng);
    return t;
}

// Builds a scalar from watched leaves of the given inputs; used both for the
// analytic backward pass and for central-difference probing.
using ScalarBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double eval_scalar(const ScalarBuilder& build, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
    return tape.value(build(tape, leaves)).item();
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

// Central differences on every entry of every input, compared against the
// tape gradients. rel err uses max(1, |analytic|, |numeric|) in the
// denominator so near-zero gradients are judged absolutely.
inline GradCheckResult check_gradients(const ScalarBuilder& build, std::vector<Tensor> inputs,
                                       double eps = 1e-4) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
    GradMap grads = tape.backward(build(tape, leaves));

    GradCheckResult result;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Tensor analytic(inputs[i].rows, inputs[i].cols);
        if (grads.contains(leaves[i])) analytic = grads.at(leaves[i]);
        for (std::size_t e = 0; e < inputs[i].size(); ++e) {
            const double orig = inputs[i].data[e];
            inputs[i].data[e] = orig + eps;
            const double up = eval_scalar(build, inputs);
            inputs[i].data[e] = orig - eps;
            const double down = eval_scalar(build, inputs);
            inputs[i].data[e] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic.data[e];
            const double rel =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            result.max_rel_err = std::max(result.max_rel_err, rel);
            result.checked += 1;
        }
    }
    return result;
}

}  // namespace trenn::testing
