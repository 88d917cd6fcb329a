#include "trenn/extract.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace trenn {

std::vector<std::vector<StaticTeamSnapshot>> segment_events(
    const std::vector<InteractionEvent>& events, const std::vector<int>& roster, double total_len,
    const SegmentationConfig& cfg) {
    cfg.validate();
    if (roster.empty()) throw ValidationError("$.roster", "empty roster");
    std::set<int> roster_set(roster.begin(), roster.end());
    for (std::size_t i = 0; i < events.size(); ++i) {
        const std::string ep = "$.events[" + std::to_string(i) + "]";
        const InteractionEvent& e = events[i];
        if (!roster_set.count(e.member_id))
            throw ValidationError(ep + ".member_id", "member not in roster");
        if (!(e.t_start < e.t_end)) throw ValidationError(ep, "t_start must be < t_end");
        if (e.features.size() != cfg.feature_dim)
            throw ValidationError(ep + ".features", "expected " + std::to_string(cfg.feature_dim) +
                                                        " features, got " +
                                                        std::to_string(e.features.size()));
        for (double x : e.features) {
            if (!std::isfinite(x)) throw ValidationError(ep + ".features", "non-finite payload");
        }
        if (e.t_end > total_len) throw ValidationError(ep, "event ends after total_len");
    }

    const std::size_t n_segments =
        static_cast<std::size_t>(std::ceil(total_len / cfg.annotation_freq));
    const std::size_t z = cfg.snapshots_per_segment();
    const std::size_t n = roster.size();

    std::vector<std::vector<StaticTeamSnapshot>> segments(n_segments);
    int timestep = 0;
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        segments[seg].reserve(z);
        for (std::size_t j = 0; j < z; ++j) {
            const double w0 = static_cast<double>(seg) * cfg.annotation_freq +
                              static_cast<double>(j) * cfg.subsegment_len;
            const double w1 = w0 + cfg.subsegment_len;

            StaticTeamSnapshot snap;
            snap.timestep = timestep++;
            snap.members = roster;
            snap.features = Tensor(n, cfg.feature_dim);

            std::vector<std::size_t> overlap_count(n, 0);
            for (const InteractionEvent& e : events) {
                if (e.t_end <= w0 || e.t_start >= w1) continue;
                const std::size_t mi = static_cast<std::size_t>(
                    std::find(roster.begin(), roster.end(), e.member_id) - roster.begin());
                overlap_count[mi] += 1;
                for (std::size_t c = 0; c < cfg.feature_dim; ++c)
                    snap.features.at(mi, c) += e.features[c];
            }
            for (std::size_t mi = 0; mi < n; ++mi) {
                if (overlap_count[mi] == 0) continue;
                for (std::size_t c = 0; c < cfg.feature_dim; ++c)
                    snap.features.at(mi, c) /= static_cast<double>(overlap_count[mi]);
                for (std::size_t ui = 0; ui < n; ++ui) {
                    if (ui != mi) snap.edges.emplace_back(roster[mi], roster[ui]);
                }
            }
            segments[seg].push_back(std::move(snap));
        }
    }
    return segments;
}

namespace {

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

TeamDataset synth_dataset(std::uint64_t seed, std::size_t n_teams, std::size_t roster_size,
                          std::size_t K, std::size_t d, const SignalConfig& signal) {
    if (roster_size != 3 && roster_size != 4)
        throw ValidationError("$.roster_size", "must be 3 or 4");
    if (n_teams < 3) throw ValidationError("$.n_teams", "must be >= 3");
    if (K < 1) throw ValidationError("$.K", "must be >= 1");
    if (d < 1) throw ValidationError("$.d", "must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TeamDataset ds;
    ds.tasks = canonical_tasks();
    ds.task_scales = canonical_task_scales();
    const std::size_t m = ds.tasks.size();

    for (std::size_t ti = 0; ti < n_teams; ++ti) {
        DynamicTeam team;
        team.team_id = "synth_" + std::to_string(ti);
        team.label_tasks = ds.tasks;

        std::vector<int> roster(roster_size);
        for (std::size_t i = 0; i < roster_size; ++i) roster[i] = static_cast<int>(i);

        // Per-member planted traits: speaking rate (relational) and a linear
        // trend on feature channel 0 (temporal). One high-rate leader.
        const std::size_t leader = static_cast<std::size_t>(rng() % roster_size);
        std::vector<double> rate(roster_size), trend(roster_size);
        for (std::size_t v = 0; v < roster_size; ++v) {
            rate[v] = v == leader ? 0.78 + 0.14 * unit(rng) : 0.15 + 0.35 * unit(rng);
            trend[v] = 2.0 * unit(rng) - 1.0;
        }

        std::vector<double> speak_count(roster_size, 0.0);
        for (std::size_t t = 0; t < K; ++t) {
            StaticTeamSnapshot snap;
            snap.timestep = static_cast<int>(t);
            snap.members = roster;
            snap.features = Tensor(roster_size, d);
            const double phase = K > 1 ? static_cast<double>(t) / static_cast<double>(K - 1) - 0.5
                                       : 0.0;
            for (std::size_t v = 0; v < roster_size; ++v) {
                snap.features.at(v, 0) = 2.0 * trend[v] * phase + 0.3 * gauss(rng);
                if (d > 1) snap.features.at(v, 1) = 1.0;  // constant activity-bias channel
                for (std::size_t c = 2; c < d; ++c) snap.features.at(v, c) = 0.4 * gauss(rng);
                if (unit(rng) < rate[v]) {
                    speak_count[v] += 1.0;
                    for (std::size_t u = 0; u < roster_size; ++u) {
                        if (u != v) snap.edges.emplace_back(roster[v], roster[u]);
                    }
                }
            }
            team.snapshots.push_back(std::move(snap));
        }

        std::vector<double> frac(roster_size);
        double mean_frac = 0.0;
        for (std::size_t v = 0; v < roster_size; ++v) {
            frac[v] = speak_count[v] / static_cast<double>(K);
            mean_frac += frac[v];
        }
        mean_frac /= static_cast<double>(roster_size);

        team.labels = Tensor(roster_size, m);
        for (std::size_t v = 0; v < roster_size; ++v) {
            const double c = frac[v] - mean_frac;
            for (std::size_t k = 0; k < m; ++k) {
                const std::string& task = ds.tasks[k];
                double y;
                if (task == "EL") {
                    y = 3.0 + signal.relational_strength * 4.0 * (frac[v] - 0.5) +
                        0.3 * signal.noise * gauss(rng);
                } else if (task == "LS_dominance") {
                    y = 3.0 + signal.relational_strength * 2.5 * c + 0.5 * signal.noise * gauss(rng);
                } else if (task == "LS_friendliness") {
                    y = 3.0 - signal.temporal_strength * 1.0 * trend[v] +
                        0.5 * signal.noise * gauss(rng);
                } else if (task == "LS_task_orientation") {
                    y = 3.0 + signal.temporal_strength * 0.8 * trend[v] +
                        signal.relational_strength * 1.0 * c + 0.5 * signal.noise * gauss(rng);
                } else {  // eight TW components
                    y = 4.0 + signal.temporal_strength * 1.2 * trend[v] +
                        signal.relational_strength * 2.0 * c + signal.noise * gauss(rng);
                }
                const auto [lo, hi] = ds.task_scales.at(task);
                team.labels.at(v, k) = clip(y, lo, hi);
            }
        }
        ds.teams.push_back(std::move(team));
    }
    return ds;
}

}  // namespace trenn
