#pragma once

#include <string>

#include "trenn/dataset.hpp"

namespace trenn {

// JSON interchange. A dataset file is an array of team objects:
//   {"team_id": str, "tasks": [str], "task_scales": {task: [min, max]},
//    "snapshots": [{"t": int, "members": [int], "edges": [[int, int]],
//                   "features": [[float]]}],
//    "labels": {member_id: {task: float}}}
// Every team carries the shared task list; consistency is validated on load.

std::string dataset_to_json(const TeamDataset& ds);
TeamDataset dataset_from_json(const std::string& text);

void save_dataset(const TeamDataset& ds, const std::string& path);
TeamDataset load_dataset(const std::string& path);

bool datasets_equal(const TeamDataset& a, const TeamDataset& b);

}  // namespace trenn
