#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trenn/counterfactual.hpp"
#include "trenn/dataset_io.hpp"
#include "trenn/eval.hpp"
#include "trenn/extract.hpp"
#include "trenn/saliency.hpp"
#include "trenn/train.hpp"

namespace py = pybind11;

namespace {

trenn::TeamDataset parse_dataset(const std::string& text) {
    trenn::TeamDataset ds = trenn::dataset_from_json(text);
    trenn::validate_dataset(ds);
    return ds;
}

const trenn::DynamicTeam& find_team(const trenn::TeamDataset& ds, const std::string& team_id) {
    for (const auto& team : ds.teams)
        if (team.team_id == team_id) return team;
    throw std::invalid_argument("unknown team id \"" + team_id + "\"");
}

trenn::EncoderSpec make_encoder(const std::string& paradigm, std::size_t d_in, std::size_t hidden,
                                std::size_t gcn_layers, std::size_t attn_heads) {
    trenn::EncoderSpec enc;
    enc.paradigm = trenn::paradigm_from_string(paradigm);
    enc.d_in = d_in;
    enc.hidden = hidden;
    enc.gcn_layers = gcn_layers;
    enc.heads = attn_heads;
    enc.validate();
    return enc;
}

trenn::TrainConfig make_train_config(int epochs, int patience, double lr, double ranking_coeff) {
    trenn::TrainConfig cfg;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.adam.lr = lr;
    cfg.loss.ranking_coeff = ranking_coeff;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_trenn, m) {
    m.doc() = "tempo-relational team modeling core";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const trenn::ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def(
        "synth_dataset",
        [](std::uint64_t seed, std::size_t teams, std::size_t roster, std::size_t steps,
           std::size_t dim, double relational, double temporal, double noise) {
            trenn::SignalConfig signal;
            signal.relational_strength = relational;
            signal.temporal_strength = temporal;
            signal.noise = noise;
            return trenn::dataset_to_json(
                trenn::synth_dataset(seed, teams, roster, steps, dim, signal));
        },
        py::arg("seed") = 7, py::arg("teams") = 12, py::arg("roster") = 4, py::arg("steps") = 20,
        py::arg("dim") = 16, py::arg("relational") = 1.0, py::arg("temporal") = 1.0,
        py::arg("noise") = 0.25, "Generate a synthetic dataset, returned as a JSON string.");

    m.def(
        "validate_dataset", [](const std::string& dataset_json) { parse_dataset(dataset_json); },
        py::arg("dataset_json"), "Raise ValueError on a malformed dataset.");

    m.def(
        "canonical_tasks", [] { return trenn::canonical_tasks(); },
        "All twelve prediction targets.");
    m.def(
        "teamwork_tasks", [] { return trenn::teamwork_tasks(); },
        "The eight teamwork components.");

    m.def(
        "train",
        [](const std::string& dataset_json, const std::string& paradigm,
           const std::vector<std::string>& tasks, std::size_t hidden, std::size_t gcn_layers,
           std::size_t attn_heads, int epochs, int patience, double lr, double ranking_coeff,
           std::uint64_t seed, std::int64_t val_team) {
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            const std::size_t val =
                val_team < 0 ? ds.teams.size() - 1 : static_cast<std::size_t>(val_team);
            if (val >= ds.teams.size()) throw std::invalid_argument("val_team out of range");
            std::vector<std::size_t> train_idx;
            for (std::size_t i = 0; i < ds.teams.size(); ++i)
                if (i != val) train_idx.push_back(i);
            trenn::HeadSpec heads;
            heads.tasks = tasks;
            heads.hidden = hidden;
            trenn::Model model = trenn::train_model(
                ds, train_idx, {val},
                make_encoder(paradigm, ds.teams[0].feature_dim(), hidden, gcn_layers, attn_heads),
                heads, make_train_config(epochs, patience, lr, ranking_coeff), seed);
            return trenn::model_to_json(model);
        },
        py::arg("dataset_json"), py::arg("paradigm") = "trenn",
        py::arg("tasks") = std::vector<std::string>{"EL"}, py::arg("hidden") = 16,
        py::arg("gcn_layers") = 2, py::arg("attn_heads") = 2, py::arg("epochs") = 300,
        py::arg("patience") = 20, py::arg("lr") = 1e-3, py::arg("ranking_coeff") = 0.1,
        py::arg("seed") = 1, py::arg("val_team") = -1,
        "Train one model, returned as a JSON checkpoint string.");

    m.def(
        "predict",
        [](const std::string& model_json, const std::string& dataset_json,
           const std::string& team_id) {
            trenn::Model model = trenn::model_from_json(model_json);
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            trenn::Tensor pred = trenn::predict(model, find_team(ds, team_id));
            std::vector<std::vector<double>> rows(pred.rows, std::vector<double>(pred.cols));
            for (std::size_t i = 0; i < pred.rows; ++i)
                for (std::size_t j = 0; j < pred.cols; ++j) rows[i][j] = pred.at(i, j);
            return rows;
        },
        py::arg("model_json"), py::arg("dataset_json"), py::arg("team_id"),
        "Per-member predictions in label units, one row per member, one column per task.");

    m.def(
        "logo_eval",
        [](const std::string& dataset_json, const std::string& paradigm,
           const std::vector<std::string>& tasks, std::size_t n_seeds, std::size_t hidden,
           std::size_t gcn_layers, std::size_t attn_heads, int epochs, int patience, double lr) {
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            trenn::LogoConfig lc;
            lc.model_name = paradigm;
            lc.encoder =
                make_encoder(paradigm, ds.teams[0].feature_dim(), hidden, gcn_layers, attn_heads);
            lc.heads.tasks = tasks;
            lc.heads.hidden = hidden;
            lc.train = make_train_config(epochs, patience, lr, 0.1);
            lc.seeds.clear();
            for (std::size_t s = 1; s <= n_seeds; ++s) lc.seeds.push_back(s);
            return trenn::report_to_csv(trenn::logo_run(ds, lc));
        },
        py::arg("dataset_json"), py::arg("paradigm") = "trenn",
        py::arg("tasks") = std::vector<std::string>{"EL"}, py::arg("n_seeds") = 3,
        py::arg("hidden") = 8, py::arg("gcn_layers") = 2, py::arg("attn_heads") = 2,
        py::arg("epochs") = 50, py::arg("patience") = 10, py::arg("lr") = 0.01,
        "Full leave-one-group-out evaluation, returned as a CSV string.");

    m.def(
        "saliency",
        [](const std::string& model_json, const std::string& dataset_json,
           const std::string& team_id, int member, const std::string& task, int bins) {
            trenn::Model model = trenn::model_from_json(model_json);
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            const trenn::DynamicTeam& team = find_team(ds, team_id);
            trenn::AttributionMap map =
                task == "expected_teamwork" ? trenn::saliency_expected_teamwork(model, team)
                                            : trenn::saliency(model, team, member, task);
            return trenn::attribution_to_json(map, trenn::render_attribution(map, bins));
        },
        py::arg("model_json"), py::arg("dataset_json"), py::arg("team_id"), py::arg("member"),
        py::arg("task"), py::arg("bins") = 5,
        "Input-gradient attribution, returned as a JSON string.");

    m.def(
        "expected_teamwork",
        [](const std::string& model_json, const std::string& dataset_json,
           const std::string& team_id) {
            trenn::Model model = trenn::model_from_json(model_json);
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            return trenn::expected_teamwork(model, find_team(ds, team_id));
        },
        py::arg("model_json"), py::arg("dataset_json"), py::arg("team_id"),
        "Mean teamwork-component prediction over all members.");

    m.def(
        "counterfactual",
        [](const std::string& model_json, const std::string& dataset_json,
           const std::string& team_id, const std::string& task, int member,
           const std::string& direction, double threshold, std::size_t budget, double c_explore,
           bool brute_force) {
            trenn::Model model = trenn::model_from_json(model_json);
            trenn::TeamDataset ds = parse_dataset(dataset_json);
            const trenn::DynamicTeam& team = find_team(ds, team_id);
            trenn::Objective obj;
            if (task == "expected_teamwork") {
                obj.target = trenn::Objective::Target::ExpectedTeamwork;
            } else {
                obj.target = trenn::Objective::Target::MemberTask;
                obj.task = task;
                obj.member = member;
            }
            obj.direction =
                direction == "decrease" ? trenn::Direction::Decrease : trenn::Direction::Increase;
            obj.threshold = threshold;
            trenn::CounterfactualResult result =
                brute_force ? trenn::brute_force_counterfactual(model, team, obj)
                            : trenn::greedy_counterfactual(model, team, obj, budget, c_explore);
            return trenn::counterfactual_to_json(result, obj);
        },
        py::arg("model_json"), py::arg("dataset_json"), py::arg("team_id"),
        py::arg("task") = "expected_teamwork", py::arg("member") = 0,
        py::arg("direction") = "increase", py::arg("threshold") = 0.0, py::arg("budget") = 256,
        py::arg("c_explore") = 1.4142135623730951, py::arg("brute_force") = false,
        "Edge-removal counterfactual search, returned as a JSON string.");
}
