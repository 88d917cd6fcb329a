#include "trenn/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace trenn {

namespace {

struct ForwardLeaves {
    std::vector<Var> feats;
    std::vector<Var> preds;  // one n x 1 column per model task
};

ForwardLeaves forward_with_watched_inputs(Tape& tape, const Model& model,
                                          const DynamicTeam& team) {
    DynamicTeam std_team = standardize_team(model.norm, team);
    BoundParams bound = bind_params(tape, model.params, /*watch=*/false);
    ForwardLeaves out;
    out.feats.reserve(std_team.n_steps());
    for (const auto& snap : std_team.snapshots)
        out.feats.push_back(tape.leaf(snap.features, /*watch=*/true));
    Var emb = encode_on_tape(tape, std_team, model.encoder, bound, out.feats);
    out.preds = decode_tasks_on_tape(tape, emb, model.heads, bound);
    return out;
}

// Chain rule through both standardizations: the tape scalar is already in
// label units, inputs on tape are z-scored, so raw-input gradients divide by
// the per-channel feature std.
AttributionMap collect_gradients(Tape& tape, const Model& model, const DynamicTeam& team,
                                 const ForwardLeaves& fw, Var scalar, bool signed_values) {
    GradMap grads = tape.backward(scalar);
    const std::size_t n = team.n_members();
    const std::size_t K = team.n_steps();
    const std::size_t d = team.feature_dim();

    AttributionMap map;
    map.signed_values = signed_values;
    map.values.reserve(K);
    map.member_timestep_mean = Tensor(n, K);
    map.member_mean = Tensor(n, 1);
    for (std::size_t t = 0; t < K; ++t) {
        Tensor g(n, d);
        if (grads.contains(fw.feats[t])) g = grads.at(fw.feats[t]);
        for (std::size_t i = 0; i < n; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double v = g.at(i, j);
                if (model.norm.fitted) v /= model.norm.feat_std.at(0, j);
                if (!signed_values) v = std::fabs(v);
                g.at(i, j) = v;
                row_sum += signed_values ? std::fabs(v) : v;
            }
            map.member_timestep_mean.at(i, t) = row_sum / static_cast<double>(d);
        }
        map.values.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t t = 0; t < K; ++t) s += map.member_timestep_mean.at(i, t);
        map.member_mean.at(i, 0) = s / static_cast<double>(K);
    }
    return map;
}

Var unstandardized_column(Tape& tape, const Model& model, Var pred_col, std::size_t task_idx) {
    if (!model.norm.fitted) return pred_col;
    return tape.affine(pred_col, model.norm.label_std.at(0, task_idx),
                       model.norm.label_mean.at(0, task_idx));
}

void require_teamwork_heads(const Model& model) {
    for (const std::string& task : teamwork_tasks()) {
        bool found = std::find(model.heads.tasks.begin(), model.heads.tasks.end(), task) !=
                     model.heads.tasks.end();
        if (!found)
            throw std::invalid_argument("expected_teamwork: model lacks head for " + task);
    }
}

Var expected_teamwork_on_tape(Tape& tape, const Model& model, const ForwardLeaves& fw) {
    std::vector<Var> task_means;
    for (const std::string& task : teamwork_tasks()) {
        const std::size_t k = model.task_index(task);
        task_means.push_back(tape.mean_all(unstandardized_column(tape, model, fw.preds[k], k)));
    }
    return tape.mean_all(tape.concat_cols(task_means));
}

}  // namespace

AttributionMap saliency(const Model& model, const DynamicTeam& team, int target_member,
                        const std::string& target_task, bool signed_values) {
    const std::size_t k = model.task_index(target_task);
    const std::size_t row = team.snapshots.front().member_index(target_member);
    Tape tape;
    ForwardLeaves fw = forward_with_watched_inputs(tape, model, team);
    Var scalar = tape.select_row(unstandardized_column(tape, model, fw.preds[k], k), row);
    AttributionMap map = collect_gradients(tape, model, team, fw, scalar, signed_values);
    map.target_member = target_member;
    map.target_task = target_task;
    return map;
}

double expected_teamwork(const Model& model, const DynamicTeam& team) {
    require_teamwork_heads(model);
    Tensor pred = predict(model, team);
    double total = 0.0;
    std::size_t count = 0;
    for (const std::string& task : teamwork_tasks()) {
        const std::size_t k = model.task_index(task);
        for (std::size_t i = 0; i < pred.rows; ++i) {
            total += pred.at(i, k);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

AttributionMap saliency_expected_teamwork(const Model& model, const DynamicTeam& team,
                                          bool signed_values) {
    require_teamwork_heads(model);
    Tape tape;
    ForwardLeaves fw = forward_with_watched_inputs(tape, model, team);
    Var scalar = expected_teamwork_on_tape(tape, model, fw);
    AttributionMap map = collect_gradients(tape, model, team, fw, scalar, signed_values);
    map.target_task = "expected_teamwork";
    return map;
}

BinnedAttribution render_attribution(const AttributionMap& map, int bins) {
    if (bins < 1) throw std::invalid_argument("render_attribution: bins must be positive");
    const Tensor& scores = map.member_timestep_mean;
    BinnedAttribution out;
    out.bins = bins;
    out.lo = scores.data.empty() ? 0.0 : *std::min_element(scores.data.begin(), scores.data.end());
    out.hi = scores.data.empty() ? 0.0 : *std::max_element(scores.data.begin(), scores.data.end());
    out.levels.assign(scores.rows, std::vector<int>(scores.cols, bins - 1));
    const double range = out.hi - out.lo;
    if (range > 0.0) {
        for (std::size_t i = 0; i < scores.rows; ++i)
            for (std::size_t t = 0; t < scores.cols; ++t) {
                int level = static_cast<int>((scores.at(i, t) - out.lo) / range *
                                             static_cast<double>(bins));
                out.levels[i][t] = std::min(level, bins - 1);
            }
    }
    return out;
}

std::string attribution_to_json(const AttributionMap& map, const BinnedAttribution& binned) {
    nlohmann::json j;
    j["target_task"] = map.target_task;
    if (map.target_task != "expected_teamwork") j["target_member"] = map.target_member;
    j["signed_values"] = map.signed_values;
    nlohmann::json values = nlohmann::json::array();
    for (const Tensor& g : map.values) {
        nlohmann::json snap = nlohmann::json::array();
        for (std::size_t i = 0; i < g.rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < g.cols; ++c) row.push_back(g.at(i, c));
            snap.push_back(std::move(row));
        }
        values.push_back(std::move(snap));
    }
    j["values"] = std::move(values);
    nlohmann::json mt = nlohmann::json::array();
    for (std::size_t i = 0; i < map.member_timestep_mean.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t t = 0; t < map.member_timestep_mean.cols; ++t)
            row.push_back(map.member_timestep_mean.at(i, t));
        mt.push_back(std::move(row));
    }
    j["member_timestep_mean"] = std::move(mt);
    nlohmann::json mm = nlohmann::json::array();
    for (std::size_t i = 0; i < map.member_mean.rows; ++i)
        mm.push_back(map.member_mean.at(i, 0));
    j["member_mean"] = std::move(mm);
    j["bins"] = {{"count", binned.bins}, {"lo", binned.lo}, {"hi", binned.hi}};
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& row : binned.levels) levels.push_back(row);
    j["levels"] = std::move(levels);
    return j.dump(2) + "\n";
}

std::string attribution_to_dot(const DynamicTeam& team, const BinnedAttribution& binned) {
    // grey-to-red ramp, darker means more important
    static const std::vector<std::string> palette = {"#f0f0f0", "#fdd0a2", "#fdae6b",
                                                     "#e6550d", "#a63603"};
    std::ostringstream os;
    os << "digraph attribution {\n  rankdir=LR;\n  node [style=filled];\n";
    for (std::size_t t = 0; t < team.n_steps(); ++t) {
        const StaticTeamSnapshot& snap = team.snapshots[t];
        os << "  subgraph cluster_t" << t << " {\n    label=\"t=" << snap.timestep << "\";\n";
        for (std::size_t i = 0; i < snap.members.size(); ++i) {
            const int level = binned.levels[i][t];
            const std::size_t color =
                binned.bins <= 1
                    ? palette.size() - 1
                    : static_cast<std::size_t>(level) * (palette.size() - 1) /
                          static_cast<std::size_t>(binned.bins - 1);
            os << "    \"m" << snap.members[i] << "_t" << t << "\" [label=\"" << snap.members[i]
               << "\", fillcolor=\"" << palette[color] << "\"];\n";
        }
        for (const auto& [src, dst] : snap.edges) {
            os << "    \"m" << src << "_t" << t << "\" -> \"m" << dst << "_t" << t << "\";\n";
        }
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace trenn
