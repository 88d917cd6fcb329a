#pragma once

#include <string>
#include <vector>

#include "trenn/tape.hpp"

namespace trenn {

struct LossConfig {
    double ranking_margin = 1.0;
    double ranking_coeff = 0.1;  // beta, >= 0
    std::vector<std::string> ranking_tasks = {"EL"};

    bool ranks(const std::string& task) const {
        for (const auto& t : ranking_tasks)
            if (t == task) return true;
        return false;
    }
};

// Mean squared error over members; pred and target are n x 1.
Var mse_loss(Tape& tape, Var pred, const Tensor& target);

struct RankingLoss {
    Var loss;
    std::size_t n_pairs = 0;    // strictly ordered label pairs |D|
    bool degenerate = false;    // n < 2: zero loss, flagged rather than an error
};

// Hinge loss over strictly ordered label pairs:
//   sum_{(i,j): y_i > y_j} max(0, margin - (s_i - s_j)).
// Label ties contribute nothing.
RankingLoss pairwise_ranking_loss(Tape& tape, Var scores, const Tensor& labels, double margin);

// Exponentially weighted multi-task combination: sum_i exp(alpha_i) * L_i.
// The alpha logits participate in backward.
Var mtl_loss(Tape& tape, const std::vector<Var>& task_losses,
             const std::vector<std::string>& task_names, Var alpha);

}  // namespace trenn
