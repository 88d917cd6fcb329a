#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trenn/dataset.hpp"
#include "trenn/train.hpp"

namespace trenn {

// One leave-one-group-out fold: hold out one validation team and one test
// team, train on the rest.
struct Fold {
    std::size_t val_team = 0;
    std::size_t test_team = 0;
    std::vector<std::size_t> train_teams;
};

// All n(n-1) ordered (val, test) pairs.
std::vector<Fold> logo_folds(std::size_t n_teams);

// Indicator that the predicted top (resp. bottom) member matches the true
// one. Ties resolve to the lowest index on both sides.
int acc_at_1(const std::vector<double>& pred, const std::vector<double>& truth);
int acc_at_last(const std::vector<double>& pred, const std::vector<double>& truth);

struct MetricRow {
    std::string model;
    std::string task;
    std::string metric;  // "mse", "acc_at_1", "acc_at_last"
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t params = 0;
    double train_ms = 0.0;  // per epoch
    double infer_ms = 0.0;  // per team
};

struct MetricReport {
    std::vector<MetricRow> rows;
};

struct LogoConfig {
    EncoderSpec encoder;
    HeadSpec heads;
    TrainConfig train;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    bool collect_timing = false;  // timings stay zero when off, keeping reports reproducible
    std::string model_name = "trenn";
};

// Full protocol: per seed, train on every fold and evaluate on its test team
// (member-level averages within the team, then across folds), then aggregate
// mean and sample std across seeds.
MetricReport logo_run(const TeamDataset& ds, const LogoConfig& cfg);

std::string report_to_csv(const MetricReport& report);
std::string report_to_json(const MetricReport& report);

struct EfficiencyEntry {
    std::string name;
    const Model* model = nullptr;
    double train_ms_per_epoch = 0.0;
};

struct EfficiencyRow {
    std::string name;
    std::size_t params = 0;
    double train_ms_per_epoch = 0.0;
    double infer_ms_per_team = 0.0;
};

// Parameter counts plus measured per-team inference time on the given data.
std::vector<EfficiencyRow> efficiency_audit(const std::vector<EfficiencyEntry>& entries,
                                            const TeamDataset& ds, int reps = 3);

}  // namespace trenn
