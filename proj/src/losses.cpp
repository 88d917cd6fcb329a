#include "trenn/losses.hpp"

#include <cmath>

namespace trenn {

Var mse_loss(Tape& tape, Var pred, const Tensor& target) {
    const Tensor& p = tape.value(pred);
    if (!p.same_shape(target)) {
        throw std::invalid_argument("mse_loss: prediction " + p.shape_str() + " vs target " +
                                    target.shape_str());
    }
    Var diff = tape.sub(pred, tape.leaf(target));
    return tape.mean_all(tape.mul(diff, diff));
}

RankingLoss pairwise_ranking_loss(Tape& tape, Var scores, const Tensor& labels, double margin) {
    const Tensor& s = tape.value(scores);
    if (s.cols != 1 || labels.cols != 1 || s.rows != labels.rows) {
        throw std::invalid_argument("pairwise_ranking_loss: expected matching n x 1 tensors, got " +
                                    s.shape_str() + " and " + labels.shape_str());
    }
    RankingLoss result;
    const std::size_t n = s.rows;
    if (n < 2) {
        result.loss = tape.leaf(Tensor::scalar(0.0));
        result.degenerate = true;
        return result;
    }
    std::vector<Var> terms;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !(labels.at(i, 0) > labels.at(j, 0))) continue;
            Var gap = tape.sub(tape.select_row(scores, i), tape.select_row(scores, j));
            terms.push_back(tape.relu(tape.affine(gap, -1.0, margin)));
            result.n_pairs += 1;
        }
    }
    if (terms.empty()) {
        result.loss = tape.leaf(Tensor::scalar(0.0));  // all labels tied, D empty
        return result;
    }
    Var acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = tape.add(acc, terms[i]);
    result.loss = acc;
    return result;
}

Var mtl_loss(Tape& tape, const std::vector<Var>& task_losses,
             const std::vector<std::string>& task_names, Var alpha) {
    if (task_losses.empty()) throw std::invalid_argument("mtl_loss: no task losses");
    if (task_losses.size() != task_names.size())
        throw std::invalid_argument("mtl_loss: task name/loss count mismatch");
    const Tensor& a = tape.value(alpha);
    if (a.rows != 1 || a.cols != task_losses.size()) {
        throw std::invalid_argument("mtl_loss: alpha shape " + a.shape_str() + " vs " +
                                    std::to_string(task_losses.size()) + " tasks");
    }
    for (std::size_t i = 0; i < task_losses.size(); ++i) {
        if (!std::isfinite(tape.value(task_losses[i]).item())) {
            throw std::runtime_error("mtl_loss: non-finite loss for task " + task_names[i]);
        }
    }
    Var losses = task_losses.size() == 1 ? task_losses[0] : tape.concat_cols(task_losses);
    Var weighted = tape.mul(tape.exp(alpha), losses);
    return tape.sum_all(weighted);
}

}  // namespace trenn
