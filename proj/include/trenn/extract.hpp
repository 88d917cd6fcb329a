#pragma once

#include <cstdint>
#include <vector>

#include "trenn/dataset.hpp"

namespace trenn {

// Turns a sorted interaction-event stream into labeled segments of snapshot
// graphs. A member active anywhere inside a snapshot window speaks for that
// snapshot: it gets outgoing edges to every other roster member and its
// feature row is the mean of the overlapping payloads. Silent members get
// zero rows.
std::vector<std::vector<StaticTeamSnapshot>> segment_events(
    const std::vector<InteractionEvent>& events, const std::vector<int>& roster, double total_len,
    const SegmentationConfig& cfg);

// Planted-signal parameters for the synthetic generator.
struct SignalConfig {
    double relational_strength = 1.0;  // out-degree -> EL / TW coupling
    double temporal_strength = 1.0;    // channel-0 trend -> TW coupling
    double noise = 0.25;
};

// Deterministic synthetic replacement for the gated interaction corpora.
// Plants (a) a relational signal: each member's EL label grows with its
// out-degree fraction across snapshots, with one high-activity leader per
// team, and (b) a temporal signal: TW labels depend on the trend of feature
// channel 0 over time. Channel 1 is a constant activity-bias channel.
TeamDataset synth_dataset(std::uint64_t seed, std::size_t n_teams, std::size_t roster_size,
                          std::size_t K, std::size_t d, const SignalConfig& signal = {});

}  // namespace trenn
