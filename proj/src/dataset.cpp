#include "trenn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace trenn {

std::size_t SegmentationConfig::snapshots_per_segment() const {
    return static_cast<std::size_t>(std::ceil(annotation_freq / subsegment_len));
}

void SegmentationConfig::validate() const {
    if (annotation_freq <= 0.0) throw ValidationError("$.cfg.annotation_freq", "must be > 0");
    if (subsegment_len <= 0.0) throw ValidationError("$.cfg.subsegment_len", "must be > 0");
    if (subsegment_len > annotation_freq)
        throw ValidationError("$.cfg.subsegment_len", "must be <= annotation_freq");
    if (feature_dim == 0) throw ValidationError("$.cfg.feature_dim", "must be >= 1");
}

std::size_t StaticTeamSnapshot::member_index(int member_id) const {
    auto it = std::find(members.begin(), members.end(), member_id);
    if (it == members.end()) {
        throw std::out_of_range("member " + std::to_string(member_id) + " not in snapshot roster");
    }
    return static_cast<std::size_t>(it - members.begin());
}

std::size_t DynamicTeam::n_edges() const {
    std::size_t n = 0;
    for (const auto& s : snapshots) n += s.edges.size();
    return n;
}

std::size_t TeamDataset::task_index(const std::string& task) const {
    auto it = std::find(tasks.begin(), tasks.end(), task);
    if (it == tasks.end()) throw std::out_of_range("unknown task " + task);
    return static_cast<std::size_t>(it - tasks.begin());
}

const std::vector<std::string>& canonical_tasks() {
    static const std::vector<std::string> tasks = {
        "EL",
        "LS_dominance", "LS_friendliness", "LS_task_orientation",
        "TW_A", "TW_BB", "TW_MPM", "TW_TL", "TW_TO", "TW_CC", "TW_MT", "TW_SMM",
    };
    return tasks;
}

const std::vector<std::string>& teamwork_tasks() {
    static const std::vector<std::string> tasks = {
        "TW_A", "TW_BB", "TW_MPM", "TW_TL", "TW_TO", "TW_CC", "TW_MT", "TW_SMM",
    };
    return tasks;
}

std::map<std::string, std::pair<double, double>> canonical_task_scales() {
    std::map<std::string, std::pair<double, double>> scales;
    for (const auto& t : canonical_tasks()) {
        scales[t] = t.rfind("TW_", 0) == 0 ? std::make_pair(1.0, 7.0) : std::make_pair(1.0, 5.0);
    }
    return scales;
}

void validate_dataset(const TeamDataset& ds) {
    if (ds.tasks.empty()) throw ValidationError("$.tasks", "at least one task required");
    if (ds.teams.size() < 3)
        throw ValidationError("$.teams", "at least 3 teams required (nested LOGO needs disjoint train/val/test)");
    for (std::size_t i = 0; i < ds.tasks.size(); ++i) {
        if (!ds.task_scales.count(ds.tasks[i])) {
            throw ValidationError("$.task_scales", "missing scale for task " + ds.tasks[i]);
        }
    }
    for (std::size_t ti = 0; ti < ds.teams.size(); ++ti) {
        const std::string tp = "$.teams[" + std::to_string(ti) + "]";
        const DynamicTeam& team = ds.teams[ti];
        if (team.snapshots.empty()) throw ValidationError(tp + ".snapshots", "K must be >= 1");
        if (team.label_tasks != ds.tasks)
            throw ValidationError(tp + ".tasks", "task list differs from dataset task list");
        const auto& roster = team.snapshots.front().members;
        if (roster.empty()) throw ValidationError(tp + ".snapshots[0].members", "empty roster");
        std::set<int> roster_set(roster.begin(), roster.end());
        if (roster_set.size() != roster.size())
            throw ValidationError(tp + ".snapshots[0].members", "duplicate member ids");
        const std::size_t d = team.snapshots.front().features.cols;
        for (std::size_t si = 0; si < team.snapshots.size(); ++si) {
            const std::string sp = tp + ".snapshots[" + std::to_string(si) + "]";
            const StaticTeamSnapshot& snap = team.snapshots[si];
            if (snap.members != roster)
                throw ValidationError(sp + ".members", "roster differs within team (fixed roster required)");
            if (snap.features.rows != roster.size() || snap.features.cols != d)
                throw ValidationError(sp + ".features",
                                      "expected " + std::to_string(roster.size()) + "x" +
                                          std::to_string(d) + ", got " + snap.features.shape_str());
            if (!snap.features.all_finite())
                throw ValidationError(sp + ".features", "non-finite feature value");
            for (std::size_t ei = 0; ei < snap.edges.size(); ++ei) {
                const auto& [src, dst] = snap.edges[ei];
                const std::string ep = sp + ".edges[" + std::to_string(ei) + "]";
                if (src == dst) throw ValidationError(ep, "self-loop edge");
                if (!roster_set.count(src))
                    throw ValidationError(ep, "edge source " + std::to_string(src) + " not in roster");
                if (!roster_set.count(dst))
                    throw ValidationError(ep, "edge target " + std::to_string(dst) + " not in roster");
            }
        }
        if (team.labels.rows != roster.size() || team.labels.cols != ds.tasks.size())
            throw ValidationError(tp + ".labels",
                                  "expected " + std::to_string(roster.size()) + "x" +
                                      std::to_string(ds.tasks.size()) + ", got " +
                                      team.labels.shape_str());
        if (!team.labels.all_finite()) throw ValidationError(tp + ".labels", "non-finite label");
        for (std::size_t mi = 0; mi < roster.size(); ++mi) {
            for (std::size_t k = 0; k < ds.tasks.size(); ++k) {
                const auto [lo, hi] = ds.task_scales.at(ds.tasks[k]);
                const double y = team.labels.at(mi, k);
                if (y < lo || y > hi)
                    throw ValidationError(tp + ".labels", "label " + std::to_string(y) +
                                                              " outside scale of " + ds.tasks[k]);
            }
        }
    }
}

}  // namespace trenn
