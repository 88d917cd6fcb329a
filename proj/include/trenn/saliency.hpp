#pragma once

#include <string>
#include <vector>

#include "trenn/model.hpp"

namespace trenn {

// Input-gradient magnitudes of one scalar model output with respect to every
// member, timestep, and feature channel of the raw (unstandardized) team.
struct AttributionMap {
    int target_member = 0;     // ignored for aggregate targets
    std::string target_task;   // "expected_teamwork" for the aggregate target
    std::vector<Tensor> values;  // K tensors, |members| x d
    Tensor member_timestep_mean;  // |members| x K, mean over features
    Tensor member_mean;           // |members| x 1, mean over timesteps too
    bool signed_values = false;
};

AttributionMap saliency(const Model& model, const DynamicTeam& team, int target_member,
                        const std::string& target_task, bool signed_values = false);

// Mean prediction over the eight teamwork components and all members.
double expected_teamwork(const Model& model, const DynamicTeam& team);

AttributionMap saliency_expected_teamwork(const Model& model, const DynamicTeam& team,
                                          bool signed_values = false);

// Per-member per-timestep scores quantized into equal-width importance levels
// over the map's own range. A flat map collapses into the top level.
struct BinnedAttribution {
    int bins = 5;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::vector<int>> levels;  // [member][timestep], 0..bins-1
};

BinnedAttribution render_attribution(const AttributionMap& map, int bins = 5);

std::string attribution_to_json(const AttributionMap& map, const BinnedAttribution& binned);
std::string attribution_to_dot(const DynamicTeam& team, const BinnedAttribution& binned);

}  // namespace trenn
