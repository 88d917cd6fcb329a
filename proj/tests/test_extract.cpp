#include "doctest.h"
#include "trenn/dataset_io.hpp"
#include "trenn/extract.hpp"

using namespace trenn;

namespace {

InteractionEvent ev(int member, double t0, double t1, std::vector<double> features) {
    InteractionEvent e;
    e.member_id = member;
    e.t_start = t0;
    e.t_end = t1;
    e.features = std::move(features);
    return e;
}

}  // namespace

TEST_CASE("event streams segment into ceil(total/f) segments of ceil(f/s) snapshots") {
    SegmentationConfig cfg;
    cfg.annotation_freq = 6.0;
    cfg.subsegment_len = 3.0;
    cfg.feature_dim = 2;
    std::vector<InteractionEvent> events = {
        ev(0, 0.0, 2.0, {1.0, 2.0}),
        ev(1, 4.0, 8.0, {3.0, 4.0}),  // spans the 3-6 and 6-9 windows
        ev(0, 2.5, 3.5, {5.0, 6.0}),  // spans the 0-3 and 3-6 windows
    };
    auto segments = segment_events(events, {0, 1, 2}, 12.0, cfg);
    REQUIRE(segments.size() == 2);
    REQUIRE(segments[0].size() == 2);
    REQUIRE(segments[1].size() == 2);

    // window 0-3: member 0 active twice, payload mean of the two events
    const StaticTeamSnapshot& s0 = segments[0][0];
    CHECK(s0.features.at(0, 0) == doctest::Approx(3.0));
    CHECK(s0.features.at(0, 1) == doctest::Approx(4.0));
    // speaking member points to every other roster member
    CHECK(s0.edges.size() == 2);
    CHECK(s0.edges[0] == std::pair<int, int>{0, 1});
    CHECK(s0.edges[1] == std::pair<int, int>{0, 2});
    // silent members get zero rows
    CHECK(s0.features.at(2, 0) == 0.0);

    // window 3-6 catches both the spanning events
    const StaticTeamSnapshot& s1 = segments[0][1];
    CHECK(s1.features.at(0, 0) == doctest::Approx(5.0));
    CHECK(s1.features.at(1, 0) == doctest::Approx(3.0));
    CHECK(s1.edges.size() == 4);

    // window 9-12 has no events at all: edgeless, all-zero
    const StaticTeamSnapshot& s3 = segments[1][1];
    CHECK(s3.edges.empty());
    for (double x : s3.features.data) CHECK(x == 0.0);

    // timesteps increase globally across segments
    CHECK(segments[1][0].timestep == 2);
}

TEST_CASE("events referencing members outside the roster are rejected") {
    SegmentationConfig cfg;
    cfg.feature_dim = 1;
    CHECK_THROWS_AS(segment_events({ev(9, 0.0, 1.0, {0.0})}, {0, 1}, 6.0, cfg), ValidationError);
}

TEST_CASE("events with inverted intervals or wrong payload width are rejected") {
    SegmentationConfig cfg;
    cfg.feature_dim = 2;
    CHECK_THROWS_AS(segment_events({ev(0, 2.0, 1.0, {0.0, 0.0})}, {0}, 6.0, cfg), ValidationError);
    CHECK_THROWS_AS(segment_events({ev(0, 0.0, 1.0, {0.0})}, {0}, 6.0, cfg), ValidationError);
}

TEST_CASE("synthesis is deterministic in the seed") {
    TeamDataset a = synth_dataset(123, 4, 4, 5, 6);
    TeamDataset b = synth_dataset(123, 4, 4, 5, 6);
    TeamDataset c = synth_dataset(124, 4, 4, 5, 6);
    CHECK(datasets_equal(a, b));
    CHECK_FALSE(datasets_equal(a, c));
}

TEST_CASE("synthesis enforces its parameter domains") {
    CHECK_THROWS_AS(synth_dataset(1, 4, 5, 5, 6), ValidationError);  // roster must be 3 or 4
    CHECK_THROWS_AS(synth_dataset(1, 2, 4, 5, 6), ValidationError);  // >= 3 teams
    CHECK_THROWS_AS(synth_dataset(1, 4, 4, 0, 6), ValidationError);  // >= 1 snapshot
}

TEST_CASE("synthesized labels respect their task scales") {
    TeamDataset ds = synth_dataset(9, 5, 4, 8, 4);
    for (const auto& team : ds.teams) {
        for (std::size_t k = 0; k < ds.tasks.size(); ++k) {
            const auto [lo, hi] = ds.task_scales.at(ds.tasks[k]);
            for (std::size_t i = 0; i < team.labels.rows; ++i) {
                CHECK(team.labels.at(i, k) >= lo);
                CHECK(team.labels.at(i, k) <= hi);
            }
        }
    }
}
