#include "trenn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace trenn {

Normalizer fit_normalizer(const TeamDataset& ds, const std::vector<std::size_t>& team_indices,
                          const std::vector<std::string>& tasks) {
    if (team_indices.empty()) throw std::invalid_argument("fit_normalizer: no teams");
    const std::size_t d = ds.teams[team_indices[0]].feature_dim();
    const std::size_t m = tasks.size();

    Normalizer norm;
    norm.feat_mean = Tensor(1, d);
    norm.feat_std = Tensor(1, d);
    norm.label_mean = Tensor(1, m);
    norm.label_std = Tensor(1, m);

    std::size_t feat_rows = 0;
    std::vector<double> label_count(m, 0.0);
    for (std::size_t ti : team_indices) {
        const DynamicTeam& team = ds.teams[ti];
        for (const auto& snap : team.snapshots) {
            feat_rows += snap.features.rows;
            for (std::size_t i = 0; i < snap.features.rows; ++i)
                for (std::size_t j = 0; j < d; ++j) norm.feat_mean.at(0, j) += snap.features.at(i, j);
        }
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t col = ds.task_index(tasks[k]);
            for (std::size_t i = 0; i < team.labels.rows; ++i) {
                norm.label_mean.at(0, k) += team.labels.at(i, col);
                label_count[k] += 1.0;
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) norm.feat_mean.at(0, j) /= static_cast<double>(feat_rows);
    for (std::size_t k = 0; k < m; ++k) norm.label_mean.at(0, k) /= label_count[k];

    for (std::size_t ti : team_indices) {
        const DynamicTeam& team = ds.teams[ti];
        for (const auto& snap : team.snapshots)
            for (std::size_t i = 0; i < snap.features.rows; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = snap.features.at(i, j) - norm.feat_mean.at(0, j);
                    norm.feat_std.at(0, j) += diff * diff;
                }
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t col = ds.task_index(tasks[k]);
            for (std::size_t i = 0; i < team.labels.rows; ++i) {
                const double diff = team.labels.at(i, col) - norm.label_mean.at(0, k);
                norm.label_std.at(0, k) += diff * diff;
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = norm.feat_std.at(0, j) / static_cast<double>(feat_rows);
        if (var < 1e-18) {
            // degenerate channel (e.g. constant bias): pass through untouched
            norm.feat_mean.at(0, j) = 0.0;
            norm.feat_std.at(0, j) = 1.0;
        } else {
            norm.feat_std.at(0, j) = std::sqrt(var);
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        const double var = norm.label_std.at(0, k) / label_count[k];
        if (var < 1e-18) {
            norm.label_mean.at(0, k) = 0.0;
            norm.label_std.at(0, k) = 1.0;
        } else {
            norm.label_std.at(0, k) = std::sqrt(var);
        }
    }
    norm.fitted = true;
    return norm;
}

namespace {

Tensor standardized_labels(const Normalizer& norm, const TeamDataset& ds, const DynamicTeam& team,
                           const std::vector<std::string>& tasks) {
    Tensor out(team.labels.rows, tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const std::size_t col = ds.task_index(tasks[k]);
        for (std::size_t i = 0; i < team.labels.rows; ++i)
            out.at(i, k) =
                (team.labels.at(i, col) - norm.label_mean.at(0, k)) / norm.label_std.at(0, k);
    }
    return out;
}

Tensor label_column(const Tensor& labels, std::size_t col) {
    Tensor out(labels.rows, 1);
    for (std::size_t i = 0; i < labels.rows; ++i) out.at(i, 0) = labels.at(i, col);
    return out;
}

}  // namespace

Var team_loss_on_tape(Tape& tape, const Model& model, const TeamDataset& ds,
                      const DynamicTeam& std_team, const Tensor& std_labels,
                      const LossConfig& loss_cfg, const BoundParams& bound) {
    (void)ds;
    std::vector<Var> feats;
    feats.reserve(std_team.n_steps());
    for (const auto& snap : std_team.snapshots) feats.push_back(tape.leaf(snap.features));
    Var emb = encode_on_tape(tape, std_team, model.encoder, bound, feats);
    std::vector<Var> preds = decode_tasks_on_tape(tape, emb, model.heads, bound);

    std::vector<Var> task_losses;
    task_losses.reserve(preds.size());
    for (std::size_t k = 0; k < preds.size(); ++k) {
        Tensor target = label_column(std_labels, k);
        Var loss = mse_loss(tape, preds[k], target);
        if (loss_cfg.ranking_coeff > 0.0 && loss_cfg.ranks(model.heads.tasks[k])) {
            RankingLoss rank =
                pairwise_ranking_loss(tape, preds[k], target, loss_cfg.ranking_margin);
            loss = tape.add(loss, tape.scale(rank.loss, loss_cfg.ranking_coeff));
        }
        task_losses.push_back(loss);
    }
    if (model.heads.multi_task()) {
        return mtl_loss(tape, task_losses, model.heads.tasks, bound.at("alpha"));
    }
    return task_losses[0];
}

Model train_model(const TeamDataset& ds, const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const EncoderSpec& enc,
                  const HeadSpec& heads, const TrainConfig& cfg, std::uint64_t seed,
                  TrainStats* stats) {
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train_model: empty train or validation set");

    Model model = init_model(enc, heads, seed);
    model.norm = fit_normalizer(ds, train_idx, heads.tasks);

    std::vector<DynamicTeam> train_teams, val_teams;
    std::vector<Tensor> train_labels, val_labels;
    for (std::size_t ti : train_idx) {
        train_teams.push_back(standardize_team(model.norm, ds.teams[ti]));
        train_labels.push_back(standardized_labels(model.norm, ds, ds.teams[ti], heads.tasks));
    }
    for (std::size_t ti : val_idx) {
        val_teams.push_back(standardize_team(model.norm, ds.teams[ti]));
        val_labels.push_back(standardized_labels(model.norm, ds, ds.teams[ti], heads.tasks));
    }

    auto validation_loss = [&]() {
        double total = 0.0;
        for (std::size_t v = 0; v < val_teams.size(); ++v) {
            Tape tape;
            BoundParams bound = bind_params(tape, model.params, /*watch=*/false);
            std::vector<Var> feats;
            for (const auto& snap : val_teams[v].snapshots) feats.push_back(tape.leaf(snap.features));
            Var emb = encode_on_tape(tape, val_teams[v], model.encoder, bound, feats);
            std::vector<Var> preds = decode_tasks_on_tape(tape, emb, model.heads, bound);
            double team_total = 0.0;
            for (std::size_t k = 0; k < preds.size(); ++k)
                team_total += tape.value(mse_loss(tape, preds[k], label_column(val_labels[v], k))).item();
            total += team_total / static_cast<double>(preds.size());
        }
        return total / static_cast<double>(val_teams.size());
    };

    AdamState adam_state;
    ParamStore best_params = model.params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int epochs_run = 0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        epochs_run = epoch + 1;
        for (std::size_t t = 0; t < train_teams.size(); ++t) {
            Tape tape;
            BoundParams bound = bind_params(tape, model.params, /*watch=*/true);
            Var loss =
                team_loss_on_tape(tape, model, ds, train_teams[t], train_labels[t], cfg.loss, bound);
            GradMap grads = tape.backward(loss);
            std::map<std::string, Tensor> named;
            for (const auto& [name, var] : bound.vars) {
                if (grads.contains(var)) named.emplace(name, grads.at(var));
            }
            adam_step(model.params, named, adam_state, cfg.adam);
        }
        const double val = validation_loss();
        if (val < best_val - 1e-12) {
            best_val = val;
            best_params = model.params;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    model.params = best_params;
    if (stats) {
        stats->epochs_run = epochs_run;
        stats->best_val_loss = best_val;
        stats->train_ms_per_epoch =
            std::chrono::duration<double, std::milli>(t1 - t0).count() / std::max(1, epochs_run);
    }
    return model;
}

}  // namespace trenn
