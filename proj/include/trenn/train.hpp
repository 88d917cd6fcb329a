#pragma once

#include <cstdint>
#include <vector>

#include "trenn/dataset.hpp"
#include "trenn/losses.hpp"
#include "trenn/model.hpp"

namespace trenn {

struct TrainConfig {
    int max_epochs = 300;
    int patience = 20;  // early stopping on validation-team loss
    AdamConfig adam;    // lr defaults to 1e-3
    LossConfig loss;
};

struct TrainStats {
    int epochs_run = 0;
    double best_val_loss = 0.0;
    double train_ms_per_epoch = 0.0;
};

// Fits feature/label standardization on the given teams. Channels with ~zero
// variance are passed through untouched.
Normalizer fit_normalizer(const TeamDataset& ds, const std::vector<std::size_t>& team_indices,
                          const std::vector<std::string>& tasks);

// Trains one model on train_idx with early stopping on val_idx. One Adam step
// per team per epoch, deterministic under seed.
Model train_model(const TeamDataset& ds, const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const EncoderSpec& enc,
                  const HeadSpec& heads, const TrainConfig& cfg, std::uint64_t seed,
                  TrainStats* stats = nullptr);

// Composite standardized training loss of one team (task MSEs, optional
// ranking terms, exp-weighted combination when multi-task).
Var team_loss_on_tape(Tape& tape, const Model& model, const TeamDataset& ds,
                      const DynamicTeam& std_team, const Tensor& std_labels,
                      const LossConfig& loss_cfg, const BoundParams& bound);

}  // namespace trenn
