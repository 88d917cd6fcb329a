#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trenn/tensor.hpp"

namespace trenn {

// Raised on malformed datasets / configs; carries a JSON-path style locator.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// One activity interval of a single member, with its feature payload.
struct InteractionEvent {
    int member_id = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> features;
};

struct SegmentationConfig {
    double annotation_freq = 6.0;  // seconds per labeled segment (f)
    double subsegment_len = 3.0;   // seconds per snapshot (s)
    std::size_t feature_dim = 16;  // d

    // snapshots per labeled segment, z = ceil(f / s)
    std::size_t snapshots_per_segment() const;
    void validate() const;
};

// One time-indexed interaction graph. Edges are directed (src, dst) pairs and
// never contain self-loops; the GCN adds self-connections itself.
struct StaticTeamSnapshot {
    int timestep = 0;
    std::vector<int> members;
    std::vector<std::pair<int, int>> edges;
    Tensor features;  // |members| x d

    std::size_t member_index(int member_id) const;
};

// Ordered snapshot sequence plus per-member, per-task labels.
struct DynamicTeam {
    std::string team_id;
    std::vector<StaticTeamSnapshot> snapshots;
    Tensor labels;  // |members| x m
    std::vector<std::string> label_tasks;

    const std::vector<int>& roster() const { return snapshots.front().members; }
    std::size_t n_members() const { return snapshots.front().members.size(); }
    std::size_t n_steps() const { return snapshots.size(); }
    std::size_t feature_dim() const { return snapshots.front().features.cols; }
    std::size_t n_edges() const;
};

struct TeamDataset {
    std::vector<DynamicTeam> teams;
    std::vector<std::string> tasks;
    std::map<std::string, std::pair<double, double>> task_scales;

    std::size_t task_index(const std::string& task) const;
};

// Canonical task list: EL (1-5), three LS dimensions (1-5), eight TW
// components (1-7).
const std::vector<std::string>& canonical_tasks();
const std::vector<std::string>& teamwork_tasks();
std::map<std::string, std::pair<double, double>> canonical_task_scales();

// Structural validation of an in-memory dataset; throws ValidationError with a
// JSON-path locator on the first violation.
void validate_dataset(const TeamDataset& ds);

}  // namespace trenn
