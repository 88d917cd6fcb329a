#include "trenn/dataset_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace trenn {

using nlohmann::json;

namespace {

json team_to_json(const TeamDataset& ds, const DynamicTeam& team) {
    json jt;
    jt["team_id"] = team.team_id;
    jt["tasks"] = ds.tasks;
    json scales = json::object();
    for (const auto& task : ds.tasks) {
        const auto [lo, hi] = ds.task_scales.at(task);
        scales[task] = json::array({lo, hi});
    }
    jt["task_scales"] = scales;
    json snaps = json::array();
    for (const auto& snap : team.snapshots) {
        json js;
        js["t"] = snap.timestep;
        js["members"] = snap.members;
        json edges = json::array();
        for (const auto& [src, dst] : snap.edges) edges.push_back(json::array({src, dst}));
        js["edges"] = edges;
        json feats = json::array();
        for (std::size_t i = 0; i < snap.features.rows; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < snap.features.cols; ++j) row.push_back(snap.features.at(i, j));
            feats.push_back(row);
        }
        js["features"] = feats;
        snaps.push_back(js);
    }
    jt["snapshots"] = snaps;
    json labels = json::object();
    for (std::size_t mi = 0; mi < team.roster().size(); ++mi) {
        json per_task = json::object();
        for (std::size_t k = 0; k < ds.tasks.size(); ++k)
            per_task[ds.tasks[k]] = team.labels.at(mi, k);
        labels[std::to_string(team.roster()[mi])] = per_task;
    }
    jt["labels"] = labels;
    return jt;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path, what);
}

const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path, std::string("missing key '") + key + "'");
    return j.at(key);
}

DynamicTeam team_from_json(const json& jt, const std::string& path, TeamDataset& ds, bool first) {
    DynamicTeam team;
    const json& jid = require(jt, "team_id", path);
    if (!jid.is_string()) fail(path + ".team_id", "expected string");
    team.team_id = jid.get<std::string>();

    const json& jtasks = require(jt, "tasks", path);
    if (!jtasks.is_array() || jtasks.empty()) fail(path + ".tasks", "expected non-empty array");
    std::vector<std::string> tasks;
    for (const auto& t : jtasks) {
        if (!t.is_string()) fail(path + ".tasks", "expected strings");
        tasks.push_back(t.get<std::string>());
    }
    const json& jscales = require(jt, "task_scales", path);
    std::map<std::string, std::pair<double, double>> scales;
    for (const auto& task : tasks) {
        if (!jscales.contains(task)) fail(path + ".task_scales", "missing scale for task " + task);
        const json& s = jscales.at(task);
        if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
            fail(path + ".task_scales." + task, "expected [min, max]");
        scales[task] = {s[0].get<double>(), s[1].get<double>()};
    }
    if (first) {
        ds.tasks = tasks;
        ds.task_scales = scales;
    } else if (tasks != ds.tasks) {
        fail(path + ".tasks", "task list differs across teams");
    } else if (scales != ds.task_scales) {
        fail(path + ".task_scales", "task scales differ across teams");
    }
    team.label_tasks = tasks;

    const json& jsnaps = require(jt, "snapshots", path);
    if (!jsnaps.is_array() || jsnaps.empty()) fail(path + ".snapshots", "expected non-empty array");
    std::size_t d = 0;
    for (std::size_t si = 0; si < jsnaps.size(); ++si) {
        const std::string sp = path + ".snapshots[" + std::to_string(si) + "]";
        const json& js = jsnaps[si];
        StaticTeamSnapshot snap;
        const json& jtstep = require(js, "t", sp);
        if (!jtstep.is_number_integer()) fail(sp + ".t", "expected integer");
        snap.timestep = jtstep.get<int>();
        const json& jmembers = require(js, "members", sp);
        if (!jmembers.is_array() || jmembers.empty()) fail(sp + ".members", "expected non-empty array");
        for (const auto& mjs : jmembers) {
            if (!mjs.is_number_integer()) fail(sp + ".members", "expected integers");
            snap.members.push_back(mjs.get<int>());
        }
        const json& jfeat = require(js, "features", sp);
        if (!jfeat.is_array() || jfeat.size() != snap.members.size())
            fail(sp + ".features", "expected one row per member");
        for (std::size_t mi = 0; mi < jfeat.size(); ++mi) {
            const json& row = jfeat[mi];
            if (!row.is_array()) fail(sp + ".features[" + std::to_string(mi) + "]", "expected array");
            if (mi == 0 && si == 0 && d == 0) d = row.size();
            if (row.size() != d)
                fail(sp + ".features[" + std::to_string(mi) + "]",
                     "ragged feature row: expected " + std::to_string(d) + " values, got " +
                         std::to_string(row.size()));
        }
        snap.features = Tensor(snap.members.size(), d);
        for (std::size_t mi = 0; mi < jfeat.size(); ++mi)
            for (std::size_t c = 0; c < d; ++c) {
                const json& x = jfeat[mi][c];
                if (!x.is_number())
                    fail(sp + ".features[" + std::to_string(mi) + "][" + std::to_string(c) + "]",
                         "expected number");
                snap.features.at(mi, c) = x.get<double>();
            }
        const json& jedges = require(js, "edges", sp);
        if (!jedges.is_array()) fail(sp + ".edges", "expected array");
        for (std::size_t ei = 0; ei < jedges.size(); ++ei) {
            const json& e = jedges[ei];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                fail(sp + ".edges[" + std::to_string(ei) + "]", "expected [src, dst]");
            snap.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        team.snapshots.push_back(std::move(snap));
    }

    const json& jlabels = require(jt, "labels", path);
    const auto& roster = team.roster();
    team.labels = Tensor(roster.size(), tasks.size());
    for (std::size_t mi = 0; mi < roster.size(); ++mi) {
        const std::string key = std::to_string(roster[mi]);
        if (!jlabels.contains(key)) fail(path + ".labels", "missing member " + key);
        const json& per_task = jlabels.at(key);
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            if (!per_task.contains(tasks[k]))
                fail(path + ".labels." + key, "missing task " + tasks[k]);
            const json& y = per_task.at(tasks[k]);
            if (!y.is_number()) fail(path + ".labels." + key + "." + tasks[k], "expected number");
            team.labels.at(mi, k) = y.get<double>();
        }
        for (const auto& [task_name, _] : per_task.items()) {
            if (std::find(tasks.begin(), tasks.end(), task_name) == tasks.end())
                fail(path + ".labels." + key, "unknown task name " + task_name);
        }
    }
    return team;
}

}  // namespace

std::string dataset_to_json(const TeamDataset& ds) {
    json out = json::array();
    for (const auto& team : ds.teams) out.push_back(team_to_json(ds, team));
    return out.dump(2);
}

TeamDataset dataset_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_array()) throw ValidationError("$", "expected array of team objects");
    TeamDataset ds;
    try {
        for (std::size_t i = 0; i < root.size(); ++i) {
            ds.teams.push_back(
                team_from_json(root[i], "$.teams[" + std::to_string(i) + "]", ds, i == 0));
        }
    } catch (const json::exception& e) {
        throw ValidationError("$", std::string("malformed value: ") + e.what());
    }
    validate_dataset(ds);
    return ds;
}

void save_dataset(const TeamDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << dataset_to_json(ds) << "\n";
}

TeamDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("$", "cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return dataset_from_json(text);
}

bool datasets_equal(const TeamDataset& a, const TeamDataset& b) {
    if (a.tasks != b.tasks || a.task_scales != b.task_scales || a.teams.size() != b.teams.size())
        return false;
    for (std::size_t i = 0; i < a.teams.size(); ++i) {
        const DynamicTeam& ta = a.teams[i];
        const DynamicTeam& tb = b.teams[i];
        if (ta.team_id != tb.team_id || ta.label_tasks != tb.label_tasks) return false;
        if (ta.labels.rows != tb.labels.rows || ta.labels.cols != tb.labels.cols ||
            ta.labels.data != tb.labels.data)
            return false;
        if (ta.snapshots.size() != tb.snapshots.size()) return false;
        for (std::size_t s = 0; s < ta.snapshots.size(); ++s) {
            const auto& sa = ta.snapshots[s];
            const auto& sb = tb.snapshots[s];
            if (sa.timestep != sb.timestep || sa.members != sb.members || sa.edges != sb.edges)
                return false;
            if (sa.features.rows != sb.features.rows || sa.features.cols != sb.features.cols ||
                sa.features.data != sb.features.data)
                return false;
        }
    }
    return true;
}

}  // namespace trenn
