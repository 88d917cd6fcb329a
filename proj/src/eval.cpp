#include "trenn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace trenn {

std::vector<Fold> logo_folds(std::size_t n_teams) {
    if (n_teams < 3) throw std::invalid_argument("logo_folds: need at least 3 teams");
    std::vector<Fold> folds;
    folds.reserve(n_teams * (n_teams - 1));
    for (std::size_t v = 0; v < n_teams; ++v) {
        for (std::size_t t = 0; t < n_teams; ++t) {
            if (v == t) continue;
            Fold fold;
            fold.val_team = v;
            fold.test_team = t;
            for (std::size_t k = 0; k < n_teams; ++k)
                if (k != v && k != t) fold.train_teams.push_back(k);
            folds.push_back(std::move(fold));
        }
    }
    return folds;
}

namespace {

std::size_t argmax_lowest(const std::vector<double>& xs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] > xs[best]) best = i;
    return best;
}

std::size_t argmin_lowest(const std::vector<double>& xs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] < xs[best]) best = i;
    return best;
}

void check_rank_args(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("rank metric: length mismatch " + std::to_string(pred.size()) +
                                    " vs " + std::to_string(truth.size()));
    if (pred.size() < 2) throw std::invalid_argument("rank metric: need at least 2 members");
}

}  // namespace

int acc_at_1(const std::vector<double>& pred, const std::vector<double>& truth) {
    check_rank_args(pred, truth);
    return argmax_lowest(pred) == argmax_lowest(truth) ? 1 : 0;
}

int acc_at_last(const std::vector<double>& pred, const std::vector<double>& truth) {
    check_rank_args(pred, truth);
    return argmin_lowest(pred) == argmin_lowest(truth) ? 1 : 0;
}

MetricReport logo_run(const TeamDataset& ds, const LogoConfig& cfg) {
    if (cfg.seeds.empty()) throw std::invalid_argument("logo_run: no seeds");
    const std::vector<Fold> folds = logo_folds(ds.teams.size());
    const std::size_t m = cfg.heads.tasks.size();
    static const std::vector<std::string> metrics = {"mse", "acc_at_1", "acc_at_last"};

    // per_seed[s][task][metric]
    std::vector<std::vector<std::vector<double>>> per_seed(
        cfg.seeds.size(), std::vector<std::vector<double>>(m, std::vector<double>(3, 0.0)));

    std::size_t param_count = 0;
    double train_ms_total = 0.0;
    double infer_ms_total = 0.0;
    std::size_t train_samples = 0;
    std::size_t infer_samples = 0;

    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const Fold& fold = folds[f];
            const std::uint64_t seed = cfg.seeds[s] * 1000003ULL + f;
            TrainStats stats;
            Model model = train_model(ds, fold.train_teams, {fold.val_team}, cfg.encoder,
                                      cfg.heads, cfg.train, seed, &stats);
            param_count = model.param_count();
            if (cfg.collect_timing) {
                train_ms_total += stats.train_ms_per_epoch;
                train_samples += 1;
            }

            const DynamicTeam& test = ds.teams[fold.test_team];
            const auto t0 = std::chrono::steady_clock::now();
            Tensor pred = predict(model, test);
            const auto t1 = std::chrono::steady_clock::now();
            if (cfg.collect_timing) {
                infer_ms_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
                infer_samples += 1;
            }

            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t col = ds.task_index(cfg.heads.tasks[k]);
                std::vector<double> p(test.n_members()), y(test.n_members());
                double mse = 0.0;
                for (std::size_t i = 0; i < test.n_members(); ++i) {
                    p[i] = pred.at(i, k);
                    y[i] = test.labels.at(i, col);
                    const double diff = p[i] - y[i];
                    mse += diff * diff;
                }
                mse /= static_cast<double>(test.n_members());
                per_seed[s][k][0] += mse;
                per_seed[s][k][1] += acc_at_1(p, y);
                per_seed[s][k][2] += acc_at_last(p, y);
            }
        }
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t j = 0; j < 3; ++j)
                per_seed[s][k][j] /= static_cast<double>(folds.size());
    }

    const double train_ms =
        train_samples ? train_ms_total / static_cast<double>(train_samples) : 0.0;
    const double infer_ms =
        infer_samples ? infer_ms_total / static_cast<double>(infer_samples) : 0.0;

    MetricReport report;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < 3; ++j) {
            double mean = 0.0;
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) mean += per_seed[s][k][j];
            mean /= static_cast<double>(cfg.seeds.size());
            double var = 0.0;
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
                const double d = per_seed[s][k][j] - mean;
                var += d * d;
            }
            const double sd =
                cfg.seeds.size() > 1 ? std::sqrt(var / static_cast<double>(cfg.seeds.size() - 1))
                                     : 0.0;
            MetricRow row;
            row.model = cfg.model_name;
            row.task = cfg.heads.tasks[k];
            row.metric = metrics[j];
            row.mean = mean;
            row.std_dev = sd;
            row.params = param_count;
            row.train_ms = train_ms;
            row.infer_ms = infer_ms;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

std::string report_to_csv(const MetricReport& report) {
    std::ostringstream os;
    os << "model,task,metric,mean,std,params,train_ms,infer_ms\n";
    for (const MetricRow& r : report.rows) {
        os << r.model << ',' << r.task << ',' << r.metric << ',' << fmt(r.mean) << ','
           << fmt(r.std_dev) << ',' << r.params << ',' << fmt(r.train_ms) << ','
           << fmt(r.infer_ms) << '\n';
    }
    return os.str();
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricRow& r : report.rows) {
        rows.push_back({{"model", r.model},
                        {"task", r.task},
                        {"metric", r.metric},
                        {"mean", r.mean},
                        {"std", r.std_dev},
                        {"params", r.params},
                        {"train_ms", r.train_ms},
                        {"infer_ms", r.infer_ms}});
    }
    return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

std::vector<EfficiencyRow> efficiency_audit(const std::vector<EfficiencyEntry>& entries,
                                            const TeamDataset& ds, int reps) {
    if (reps < 1) throw std::invalid_argument("efficiency_audit: reps must be positive");
    std::vector<EfficiencyRow> rows;
    for (const EfficiencyEntry& e : entries) {
        if (!e.model) throw std::invalid_argument("efficiency_audit: null model for " + e.name);
        EfficiencyRow row;
        row.name = e.name;
        row.params = e.model->param_count();
        row.train_ms_per_epoch = e.train_ms_per_epoch;
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r)
            for (const DynamicTeam& team : ds.teams) (void)predict(*e.model, team);
        const auto t1 = std::chrono::steady_clock::now();
        row.infer_ms_per_team = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                                static_cast<double>(reps * ds.teams.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace trenn
