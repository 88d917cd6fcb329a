#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "trenn/counterfactual.hpp"
#include "trenn/extract.hpp"
#include "trenn/saliency.hpp"
#include "trenn/train.hpp"

using namespace trenn;

namespace {

Tensor filled(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(rows, cols, std::move(values));
}

DynamicTeam team_from(std::vector<StaticTeamSnapshot> snapshots) {
    DynamicTeam team;
    team.team_id = "t";
    team.snapshots = std::move(snapshots);
    return team;
}

StaticTeamSnapshot snap(int t, std::vector<int> members, std::vector<std::pair<int, int>> edges,
                        Tensor features) {
    StaticTeamSnapshot s;
    s.timestep = t;
    s.members = std::move(members);
    s.edges = std::move(edges);
    s.features = std::move(features);
    return s;
}

// One-member, one-snapshot model that reduces to f(x) = w . x as long as the
// single hidden unit stays active.
Model linear_probe_model(const std::vector<double>& w) {
    EncoderSpec spec;
    spec.paradigm = Paradigm::Snn;
    spec.d_in = w.size();
    spec.hidden = 1;
    Model model = init_model(spec, HeadSpec{{"EL"}, 1}, 0);
    model.params.at("enc.W1") = Tensor(w.size(), 1, w);
    model.params.at("enc.b1") = Tensor(1, 1);
    model.params.at("head.EL.W1") = filled(1, 1, {1.0});
    model.params.at("head.EL.b1") = Tensor(1, 1);
    model.params.at("head.EL.W2") = filled(1, 1, {1.0});
    model.params.at("head.EL.b2") = Tensor(1, 1);
    return model;
}

// Relational model with everything positive, so a very negative neighbor
// feature visibly drags down the aggregating member's prediction.
Model positive_renn_model(std::size_t d, const std::string& task = "EL") {
    EncoderSpec spec;
    spec.paradigm = Paradigm::Renn;
    spec.d_in = d;
    spec.hidden = 2;
    spec.gcn_layers = 1;
    Model model = init_model(spec, HeadSpec{{task}, 2}, 0);
    Tensor w(d, 2);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < 2; ++j) w.at(i, j) = 0.5;
    model.params.at("enc.gcn0.W") = w;
    model.params.at("enc.gcn0.b") = filled(1, 2, {5.0, 5.0});
    model.params.at("head." + task + ".W1") = filled(2, 2, {1.0, 0.0, 0.0, 1.0});
    model.params.at("head." + task + ".b1") = filled(1, 2, {1.0, 1.0});
    model.params.at("head." + task + ".W2") = filled(2, 1, {1.0, 1.0});
    model.params.at("head." + task + ".b2") = Tensor(1, 1);
    return model;
}

}  // namespace

TEST_CASE("a frozen linear model attributes exactly |w|") {
    Model model = linear_probe_model({0.7, -0.3, 1.5});
    DynamicTeam team = team_from({snap(0, {0}, {}, filled(1, 3, {2.0, 0.1, 1.0}))});
    AttributionMap map = saliency(model, team, 0, "EL");
    CHECK(map.values[0].at(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(map.values[0].at(0, 1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(map.values[0].at(0, 2) == doctest::Approx(1.5).epsilon(1e-12));
    // absolute values: everything is non-negative
    for (double v : map.values[0].data) CHECK(v >= 0.0);
}

TEST_CASE("doubling the final linear layer doubles every attribution") {
    Model model = linear_probe_model({0.7, -0.3, 1.5});
    DynamicTeam team = team_from({snap(0, {0}, {}, filled(1, 3, {2.0, 0.1, 1.0}))});
    AttributionMap base = saliency(model, team, 0, "EL");
    model.params.at("head.EL.W2").at(0, 0) = 2.0;
    AttributionMap doubled = saliency(model, team, 0, "EL");
    for (std::size_t e = 0; e < base.values[0].size(); ++e)
        CHECK(doubled.values[0].data[e] == doctest::Approx(2.0 * base.values[0].data[e]));
}

TEST_CASE("attributions agree with central finite differences through the full pipeline") {
    TeamDataset ds = synth_dataset(21, 3, 3, 3, 4);
    EncoderSpec spec;
    spec.paradigm = Paradigm::Trenn;
    spec.d_in = 4;
    spec.hidden = 4;
    spec.heads = 2;
    Model model = init_model(spec, HeadSpec{{"EL"}, 4}, 3);
    model.norm = fit_normalizer(ds, {0, 1, 2}, {"EL"});

    DynamicTeam team = ds.teams[0];
    const std::size_t target_row = 1;
    AttributionMap map = saliency(model, team, team.roster()[target_row], "EL", true);

    const double eps = 1e-4;
    for (std::size_t t = 0; t < team.n_steps(); ++t) {
        for (std::size_t i = 0; i < team.n_members(); ++i) {
            for (std::size_t c = 0; c < team.feature_dim(); ++c) {
                DynamicTeam up = team, down = team;
                up.snapshots[t].features.at(i, c) += eps;
                down.snapshots[t].features.at(i, c) -= eps;
                const double numeric = (predict(model, up).at(target_row, 0) -
                                        predict(model, down).at(target_row, 0)) /
                                       (2.0 * eps);
                const double analytic = map.values[t].at(i, c);
                CHECK(std::abs(analytic - numeric) <=
                      1e-3 * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
            }
        }
    }
}

TEST_CASE("feed-forward models attribute nothing to other members") {
    TeamDataset ds = synth_dataset(22, 3, 4, 3, 3);
    EncoderSpec spec;
    spec.paradigm = Paradigm::Snn;
    spec.d_in = 3;
    spec.hidden = 4;
    Model model = init_model(spec, HeadSpec{{"EL"}, 4}, 9);
    model.norm = fit_normalizer(ds, {0, 1, 2}, {"EL"});
    AttributionMap map = saliency(model, ds.teams[1], ds.teams[1].roster()[2], "EL");
    for (std::size_t t = 0; t < map.values.size(); ++t)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t c = 0; c < 3; ++c)
                if (i != 2) CHECK(map.values[t].at(i, c) == 0.0);
}

TEST_CASE("bias-free relational models ignore isolated members") {
    Model model = positive_renn_model(2);
    model.encoder.gcn_bias = false;
    ParamStore stripped;
    stripped.add("enc.gcn0.W", model.params.at("enc.gcn0.W"));
    for (const auto& [name, t] : model.params)
        if (name.rfind("head.", 0) == 0) stripped.add(name, t);
    model.params = stripped;

    // member 2 never interacts with anyone
    DynamicTeam team = team_from(
        {snap(0, {0, 1, 2}, {{0, 1}, {1, 0}}, filled(3, 2, {1, 2, 3, 4, 5, 6}))});
    AttributionMap map = saliency(model, team, 0, "EL");
    CHECK(map.values[0].at(2, 0) == 0.0);
    CHECK(map.values[0].at(2, 1) == 0.0);
    CHECK(map.values[0].at(1, 0) > 0.0);  // the actual neighbor does contribute
}

TEST_CASE("expected teamwork equals the double mean of the prediction matrix") {
    TeamDataset ds = synth_dataset(23, 3, 3, 2, 3);
    EncoderSpec spec;
    spec.paradigm = Paradigm::Snn;
    spec.d_in = 3;
    spec.hidden = 4;
    Model model = init_model(spec, HeadSpec{canonical_tasks(), 4}, 2);
    model.norm = fit_normalizer(ds, {0, 1, 2}, canonical_tasks());

    Tensor pred = predict(model, ds.teams[0]);
    double oracle = 0.0;
    for (const std::string& task : teamwork_tasks())
        for (std::size_t i = 0; i < pred.rows; ++i) oracle += pred.at(i, model.task_index(task));
    oracle /= static_cast<double>(pred.rows * teamwork_tasks().size());
    CHECK(expected_teamwork(model, ds.teams[0]) == doctest::Approx(oracle).epsilon(1e-12));

    Model el_only = init_model(spec, HeadSpec{{"EL"}, 4}, 2);
    CHECK_THROWS_AS(expected_teamwork(el_only, ds.teams[0]), std::invalid_argument);
}

TEST_CASE("binning uses equal-width levels over the map's own range") {
    AttributionMap map;
    map.member_timestep_mean = filled(3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    BinnedAttribution b = render_attribution(map, 5);
    CHECK(b.levels.size() == 3);
    CHECK(b.levels[0].size() == 3);  // 9 binned cells in total
    CHECK(b.levels[0][0] == 0);
    CHECK(b.levels[2][2] == 4);  // the max always lands in the top bin
    CHECK(b.levels[1][1] == 2);

    AttributionMap flat;
    flat.member_timestep_mean = filled(2, 2, {0.5, 0.5, 0.5, 0.5});
    BinnedAttribution fb = render_attribution(flat, 5);
    for (const auto& row : fb.levels)
        for (int level : row) CHECK(level == fb.levels[0][0]);
}

TEST_CASE("removing zero edges reproduces the original score bit-identically") {
    Model model = positive_renn_model(2);
    DynamicTeam team =
        team_from({snap(0, {0, 1, 2}, {{0, 1}, {2, 0}}, filled(3, 2, {1, 2, 3, 4, 5, 6}))});
    Objective obj;
    obj.target = Objective::Target::MemberTask;
    obj.member = 0;
    obj.task = "EL";
    CHECK(objective_score(model, team, obj) == objective_score(model, remove_edges(team, {}), obj));
    CHECK(all_edges(team).size() == 2);
}

TEST_CASE("a single-edge team is searched exhaustively") {
    Model model = positive_renn_model(2);
    DynamicTeam team =
        team_from({snap(0, {0, 1}, {{0, 1}}, filled(2, 2, {1.0, 1.0, -40.0, -40.0}))});
    Objective obj;
    obj.target = Objective::Target::MemberTask;
    obj.member = 0;
    obj.task = "EL";
    obj.direction = Direction::Increase;
    obj.threshold = objective_score(model, team, obj) + 0.5;

    CounterfactualResult r = greedy_counterfactual(model, team, obj, 8);
    CHECK(r.achieved_target);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == EdgeRef{0, 0, 1});
    CHECK(r.counterfactual_score > r.original_score);

    // an unreachable objective reports a best-effort result instead
    obj.threshold = 1e9;
    CounterfactualResult miss = greedy_counterfactual(model, team, obj, 8);
    CHECK_FALSE(miss.achieved_target);
    CHECK(miss.evals_used <= 8);
}

TEST_CASE("greedy with full budget matches the exhaustive oracle") {
    std::mt19937_64 rng(31);
    for (int inst = 0; inst < 10; ++inst) {
        TeamDataset ds = synth_dataset(100 + inst, 3, 3, 2, 2);
        DynamicTeam team = ds.teams[0];
        // thin the team down to at most 5 edges
        std::vector<EdgeRef> edges = all_edges(team);
        while (edges.size() > 5) {
            edges.erase(edges.begin() + static_cast<long>(rng() % edges.size()));
        }
        std::vector<EdgeRef> keep = edges;
        std::vector<EdgeRef> drop;
        for (const EdgeRef& e : all_edges(team))
            if (std::find(keep.begin(), keep.end(), e) == keep.end()) drop.push_back(e);
        team = remove_edges(team, drop);
        if (all_edges(team).empty()) continue;

        Model model = positive_renn_model(2);
        Objective obj;
        obj.target = Objective::Target::MemberTask;
        obj.member = 0;
        obj.task = "EL";
        obj.threshold = 1e9;  // unreachable, so both searches rank the whole space

        const std::size_t full = std::size_t{1} << all_edges(team).size();
        CounterfactualResult greedy = greedy_counterfactual(model, team, obj, full);
        CounterfactualResult brute = brute_force_counterfactual(model, team, obj);
        CHECK(greedy.counterfactual_score == doctest::Approx(brute.counterfactual_score).epsilon(1e-12));
        CHECK(greedy.evals_used <= full);
    }
}

TEST_CASE("the exhaustive oracle prefers the empty set when it already suffices") {
    Model model = positive_renn_model(2);
    DynamicTeam team =
        team_from({snap(0, {0, 1}, {{0, 1}}, filled(2, 2, {1.0, 1.0, 2.0, 2.0}))});
    Objective obj;
    obj.target = Objective::Target::MemberTask;
    obj.member = 0;
    obj.task = "EL";
    obj.threshold = -1e9;  // any score qualifies
    CounterfactualResult r = brute_force_counterfactual(model, team, obj);
    CHECK(r.achieved_target);
    CHECK(r.removed.empty());
    CHECK(r.counterfactual_score == r.original_score);
}

TEST_CASE("edgeless teams and oversized instances are rejected") {
    Model model = positive_renn_model(2);
    DynamicTeam edgeless = team_from({snap(0, {0, 1}, {}, Tensor(2, 2))});
    Objective obj;
    obj.target = Objective::Target::MemberTask;
    obj.member = 0;
    obj.task = "EL";
    CHECK_THROWS_AS(greedy_counterfactual(model, edgeless, obj, 4), std::invalid_argument);

    std::vector<StaticTeamSnapshot> many;
    for (int t = 0; t < 4; ++t)
        many.push_back(snap(t, {0, 1, 2, 3},
                            {{0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 2}, {1, 3}}, Tensor(4, 2)));
    DynamicTeam big = team_from(many);  // 24 edges
    CHECK_THROWS_AS(brute_force_counterfactual(model, big, obj), std::invalid_argument);
}

TEST_CASE("the planted aggressive edge is identified within an edge-count budget") {
    // member 1 is toxic: huge negative features; the only edge pulling that
    // into member 0 is 0 -> 1
    Model model = positive_renn_model(2);
    DynamicTeam team = team_from(
        {snap(0, {0, 1, 2}, {{0, 1}, {0, 2}, {2, 0}},
              filled(3, 2, {1.0, 1.0, -60.0, -60.0, 1.5, 1.5})),
         snap(1, {0, 1, 2}, {{2, 1}}, filled(3, 2, {1.0, 1.0, -60.0, -60.0, 1.5, 1.5}))});
    Objective obj;
    obj.target = Objective::Target::MemberTask;
    obj.member = 0;
    obj.task = "EL";
    obj.direction = Direction::Increase;
    obj.threshold = objective_score(model, team, obj) + 1.0;

    CounterfactualResult r = greedy_counterfactual(model, team, obj, all_edges(team).size());
    CHECK(r.achieved_target);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == EdgeRef{0, 0, 1});
}
