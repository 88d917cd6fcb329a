#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trenn/counterfactual.hpp"
#include "trenn/dataset_io.hpp"
#include "trenn/eval.hpp"
#include "trenn/extract.hpp"
#include "trenn/saliency.hpp"
#include "trenn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInternalError = 1;
constexpr int kBadInput = 2;

// Thrown for anything the operator can fix (bad flags, bad files).
struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadInput("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Pre-parse config support: values from --config seed the option defaults,
// explicit flags override them. Unknown config keys are rejected.
json load_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            json cfg;
            try {
                cfg = json::parse(read_file(argv[i + 1]));
            } catch (const json::exception& e) {
                throw BadInput(std::string("config: ") + e.what());
            }
            if (!cfg.is_object()) throw BadInput("config: expected a JSON object");
            return cfg;
        }
    }
    return json::object();
}

void apply_config(CLI::App& cmd, const json& cfg) {
    if (cfg.empty()) return;
    std::set<std::string> known;
    for (const CLI::Option* opt : cmd.get_options()) {
        std::string name = opt->get_single_name();
        if (!name.empty()) known.insert(name);
    }
    for (const auto& [key, value] : cfg.items()) {
        if (key == "command") continue;
        if (!known.count(key)) throw BadInput("config: unknown key \"" + key + "\"");
        CLI::Option* opt = cmd.get_option("--" + key);
        const std::string text =
            value.is_string() ? value.get<std::string>() : value.dump();
        opt->default_str(text);
        opt->force_callback();
    }
}

void echo_config(const CLI::App& cmd, const std::string& out_dir) {
    json cfg;
    cfg["command"] = cmd.get_name();
    for (const CLI::Option* opt : cmd.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (opt->empty() && opt->get_default_str().empty()) continue;
        const auto& results = opt->results();
        if (results.size() == 1) {
            cfg[name] = results[0];
        } else if (!results.empty()) {
            cfg[name] = results;
        } else {
            cfg[name] = opt->get_default_str();
        }
    }
    write_file(fs::path(out_dir) / "run_config.json", cfg.dump(2) + "\n");
}

std::vector<std::string> resolve_tasks(const std::string& spec) {
    if (spec == "all") return trenn::canonical_tasks();
    if (spec == "tw") return trenn::teamwork_tasks();
    std::vector<std::string> tasks;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) tasks.push_back(item);
    }
    if (tasks.empty()) throw BadInput("tasks: empty task list");
    return tasks;
}

const trenn::DynamicTeam& find_team(const trenn::TeamDataset& ds, const std::string& team_id) {
    for (const auto& team : ds.teams)
        if (team.team_id == team_id) return team;
    throw BadInput("unknown team id \"" + team_id + "\"");
}

struct CommonModelFlags {
    std::string paradigm = "trenn";
    std::string tasks = "all";
    std::size_t hidden = 16;
    std::size_t gcn_layers = 2;
    std::size_t attn_heads = 2;
    int epochs = 300;
    int patience = 20;
    double lr = 1e-3;
    double ranking_coeff = 0.1;
};

void add_model_flags(CLI::App* cmd, CommonModelFlags& f) {
    cmd->add_option("--paradigm", f.paradigm, "snn, tnn, renn, trenn or mt-trenn");
    cmd->add_option("--tasks", f.tasks, "comma list, or \"all\" / \"tw\"");
    cmd->add_option("--hidden", f.hidden, "embedding width");
    cmd->add_option("--gcn-layers", f.gcn_layers);
    cmd->add_option("--attn-heads", f.attn_heads);
    cmd->add_option("--epochs", f.epochs);
    cmd->add_option("--patience", f.patience);
    cmd->add_option("--lr", f.lr);
    cmd->add_option("--ranking-coeff", f.ranking_coeff);
}

trenn::EncoderSpec make_encoder(const CommonModelFlags& f, std::size_t d_in) {
    trenn::EncoderSpec enc;
    enc.paradigm = trenn::paradigm_from_string(f.paradigm == "mt-trenn" ? "trenn" : f.paradigm);
    enc.d_in = d_in;
    enc.hidden = f.hidden;
    enc.gcn_layers = f.gcn_layers;
    enc.heads = f.attn_heads;
    enc.validate();
    return enc;
}

trenn::TrainConfig make_train_config(const CommonModelFlags& f) {
    trenn::TrainConfig cfg;
    cfg.max_epochs = f.epochs;
    cfg.patience = f.patience;
    cfg.adam.lr = f.lr;
    cfg.loss.ranking_coeff = f.ranking_coeff;
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"tempo-relational team modeling"};
    app.require_subcommand(1);

    std::string config_path;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::uint64_t synth_seed = 7;
    std::size_t synth_teams = 12, synth_roster = 4, synth_steps = 20, synth_dim = 16;
    trenn::SignalConfig signal;
    std::string synth_out = "dataset.json";
    synth->add_option("--config", config_path, "JSON config, flags override");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--teams", synth_teams);
    synth->add_option("--roster", synth_roster, "members per team (3 or 4)");
    synth->add_option("--steps", synth_steps, "snapshots per team");
    synth->add_option("--dim", synth_dim, "feature channels");
    synth->add_option("--relational", signal.relational_strength);
    synth->add_option("--temporal", signal.temporal_strength);
    synth->add_option("--noise", signal.noise);
    synth->add_option("--out", synth_out, "output dataset file");

    // validate
    auto* validate = app.add_subcommand("validate", "check a dataset file");
    std::string validate_data;
    validate->add_option("--config", config_path, "JSON config, flags override");
    validate->add_option("--data", validate_data, "dataset file")->required();

    // train
    auto* train = app.add_subcommand("train", "train one model");
    std::string train_data, train_out = "out";
    std::uint64_t train_seed = 1;
    std::size_t val_team = 0;
    bool val_team_given = false;
    CommonModelFlags train_flags;
    train->add_option("--config", config_path, "JSON config, flags override");
    train->add_option("--data", train_data)->required();
    train->add_option("--out", train_out, "output directory");
    train->add_option("--seed", train_seed);
    train->add_option("--val-team", val_team, "validation team index (default: last)")
        ->each([&](const std::string&) { val_team_given = true; });
    add_model_flags(train, train_flags);

    // eval
    auto* eval = app.add_subcommand("eval", "leave-one-group-out evaluation");
    std::string eval_data, eval_out = "out";
    std::size_t n_seeds = 10;
    std::uint64_t seed0 = 1;
    bool timing = false;
    CommonModelFlags eval_flags;
    eval->add_option("--config", config_path, "JSON config, flags override");
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--seeds", n_seeds, "number of seeds");
    eval->add_option("--seed0", seed0, "first seed");
    eval->add_flag("--timing", timing, "collect wall-clock timings (non-reproducible fields)");
    add_model_flags(eval, eval_flags);

    // explain
    auto* explain = app.add_subcommand("explain", "saliency or counterfactual explanation");
    std::string method = "saliency", model_path, explain_data, team_id, explain_task = "EL";
    std::string explain_out = "out", direction = "increase";
    int member = 0;
    bool member_given = false;
    double threshold = 0.0;
    bool threshold_given = false;
    std::size_t budget = 256;
    double c_explore = std::sqrt(2.0);
    int bins = 5;
    bool use_brute = false;
    explain->add_option("--config", config_path, "JSON config, flags override");
    explain->add_option("--method", method, "saliency or counterfactual");
    explain->add_option("--model", model_path, "model checkpoint")->required();
    explain->add_option("--data", explain_data)->required();
    explain->add_option("--team", team_id)->required();
    explain->add_option("--member", member)->each([&](const std::string&) { member_given = true; });
    explain->add_option("--task", explain_task, "task name or expected_teamwork");
    explain->add_option("--direction", direction, "increase or decrease");
    explain->add_option("--threshold", threshold)->each([&](const std::string&) {
        threshold_given = true;
    });
    explain->add_option("--budget", budget, "max model evaluations");
    explain->add_option("--c-explore", c_explore);
    explain->add_option("--bins", bins, "importance levels");
    explain->add_flag("--brute-force", use_brute, "use the exhaustive search");
    explain->add_option("--out", explain_out, "output directory");

    json cfg = load_config(argc, argv);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kBadInput;
    }
    CLI::App* cmd = app.get_subcommands().front();
    if (!cfg.empty()) {
        apply_config(*cmd, cfg);
        // re-parse so explicit flags win over config values
        try {
            app.clear();
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return kBadInput;
        }
        cmd = app.get_subcommands().front();
    }

    if (cmd == synth) {
        if (synth_roster != 3 && synth_roster != 4) throw BadInput("roster must be 3 or 4");
        trenn::TeamDataset ds =
            trenn::synth_dataset(synth_seed, synth_teams, synth_roster, synth_steps, synth_dim, signal);
        trenn::save_dataset(ds, synth_out);
        std::cout << "wrote " << synth_out << " (" << ds.teams.size() << " teams)\n";
        return kOk;
    }

    if (cmd == validate) {
        trenn::TeamDataset ds = trenn::load_dataset(validate_data);
        trenn::validate_dataset(ds);
        std::cout << validate_data << ": ok (" << ds.teams.size() << " teams, "
                  << ds.tasks.size() << " tasks)\n";
        return kOk;
    }

    if (cmd == train) {
        trenn::TeamDataset ds = trenn::load_dataset(train_data);
        trenn::validate_dataset(ds);
        const std::size_t val = val_team_given ? val_team : ds.teams.size() - 1;
        if (val >= ds.teams.size()) throw BadInput("val-team out of range");
        std::vector<std::size_t> train_idx;
        for (std::size_t i = 0; i < ds.teams.size(); ++i)
            if (i != val) train_idx.push_back(i);
        trenn::HeadSpec heads;
        heads.tasks = resolve_tasks(train_flags.tasks);
        heads.hidden = train_flags.hidden;
        for (const std::string& t : heads.tasks) (void)ds.task_index(t);
        trenn::TrainStats stats;
        trenn::Model model =
            trenn::train_model(ds, train_idx, {val}, make_encoder(train_flags, ds.teams[0].feature_dim()),
                               heads, make_train_config(train_flags), train_seed, &stats);
        fs::create_directories(train_out);
        trenn::save_model(model, (fs::path(train_out) / "model.json").string());
        echo_config(*train, train_out);
        std::cout << "trained " << train_flags.paradigm << ": " << model.param_count()
                  << " params, " << stats.epochs_run << " epochs, best val loss "
                  << stats.best_val_loss << "\n";
        return kOk;
    }

    if (cmd == eval) {
        trenn::TeamDataset ds = trenn::load_dataset(eval_data);
        trenn::validate_dataset(ds);
        std::vector<std::string> paradigms;
        if (eval_flags.paradigm == "all") {
            paradigms = {"snn", "tnn", "renn", "trenn", "mt-trenn"};
        } else {
            paradigms = {eval_flags.paradigm};
        }
        trenn::MetricReport combined;
        for (const std::string& name : paradigms) {
            trenn::LogoConfig lc;
            lc.model_name = name;
            lc.encoder = make_encoder(eval_flags, ds.teams[0].feature_dim());
            lc.encoder.paradigm =
                trenn::paradigm_from_string(name == "mt-trenn" ? "trenn" : name);
            lc.heads.tasks = resolve_tasks(eval_flags.tasks);
            lc.heads.hidden = eval_flags.hidden;
            lc.train = make_train_config(eval_flags);
            lc.collect_timing = timing;
            lc.seeds.clear();
            for (std::size_t s = 0; s < n_seeds; ++s) lc.seeds.push_back(seed0 + s);
            for (const std::string& t : lc.heads.tasks) (void)ds.task_index(t);
            if (name != "mt-trenn" && lc.heads.tasks.size() > 1) {
                // single-task paradigms: one independent model per task
                for (const std::string& task : lc.heads.tasks) {
                    trenn::LogoConfig one = lc;
                    one.heads.tasks = {task};
                    trenn::MetricReport r = trenn::logo_run(ds, one);
                    combined.rows.insert(combined.rows.end(), r.rows.begin(), r.rows.end());
                }
            } else {
                trenn::MetricReport r = trenn::logo_run(ds, lc);
                combined.rows.insert(combined.rows.end(), r.rows.begin(), r.rows.end());
            }
        }
        write_file(fs::path(eval_out) / "report.csv", trenn::report_to_csv(combined));
        write_file(fs::path(eval_out) / "report.json", trenn::report_to_json(combined));
        echo_config(*eval, eval_out);
        std::cout << "wrote " << (fs::path(eval_out) / "report.csv").string() << " ("
                  << combined.rows.size() << " rows)\n";
        return kOk;
    }

    if (cmd == explain) {
        if (!fs::exists(model_path)) throw BadInput("no such checkpoint: " + model_path);
        trenn::Model model = trenn::load_model(model_path);
        trenn::TeamDataset ds = trenn::load_dataset(explain_data);
        trenn::validate_dataset(ds);
        const trenn::DynamicTeam& team = find_team(ds, team_id);
        if (method == "saliency") {
            trenn::AttributionMap map;
            if (explain_task == "expected_teamwork") {
                map = trenn::saliency_expected_teamwork(model, team);
            } else {
                if (!member_given) member = team.roster().front();
                map = trenn::saliency(model, team, member, explain_task);
            }
            trenn::BinnedAttribution binned = trenn::render_attribution(map, bins);
            write_file(fs::path(explain_out) / "attribution.json",
                       trenn::attribution_to_json(map, binned));
            write_file(fs::path(explain_out) / "attribution.dot",
                       trenn::attribution_to_dot(team, binned));
            echo_config(*explain, explain_out);
            std::cout << "wrote attribution for team " << team_id << "\n";
            return kOk;
        }
        if (method == "counterfactual") {
            trenn::Objective obj;
            if (explain_task == "expected_teamwork") {
                obj.target = trenn::Objective::Target::ExpectedTeamwork;
            } else {
                obj.target = trenn::Objective::Target::MemberTask;
                obj.task = explain_task;
                obj.member = member_given ? member : team.roster().front();
            }
            if (direction == "increase") {
                obj.direction = trenn::Direction::Increase;
            } else if (direction == "decrease") {
                obj.direction = trenn::Direction::Decrease;
            } else {
                throw BadInput("direction must be increase or decrease");
            }
            if (threshold_given) {
                obj.threshold = threshold;
            } else {
                const double base = trenn::objective_score(model, team, obj);
                obj.threshold = obj.direction == trenn::Direction::Increase ? base + 0.1 : base - 0.1;
            }
            trenn::CounterfactualResult result =
                use_brute ? trenn::brute_force_counterfactual(model, team, obj)
                          : trenn::greedy_counterfactual(model, team, obj, budget, c_explore);
            write_file(fs::path(explain_out) / "counterfactual.json",
                       trenn::counterfactual_to_json(result, obj));
            write_file(fs::path(explain_out) / "counterfactual.dot",
                       trenn::counterfactual_to_dot(team, result));
            echo_config(*explain, explain_out);
            std::cout << (result.achieved_target ? "achieved" : "best effort") << ": removed "
                      << result.removed.size() << " edges, score " << result.original_score
                      << " -> " << result.counterfactual_score << "\n";
            return kOk;
        }
        throw BadInput("method must be saliency or counterfactual");
    }

    return kInternalError;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const BadInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const trenn::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}
