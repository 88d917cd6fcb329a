#include "trenn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace trenn {

Paradigm paradigm_from_string(const std::string& name) {
    if (name == "snn") return Paradigm::Snn;
    if (name == "tnn") return Paradigm::Tnn;
    if (name == "renn") return Paradigm::Renn;
    if (name == "trenn") return Paradigm::Trenn;
    throw std::invalid_argument("unknown paradigm '" + name + "'");
}

std::string paradigm_to_string(Paradigm p) {
    switch (p) {
        case Paradigm::Snn: return "snn";
        case Paradigm::Tnn: return "tnn";
        case Paradigm::Renn: return "renn";
        case Paradigm::Trenn: return "trenn";
    }
    return "?";
}

void EncoderSpec::validate() const {
    if (d_in == 0 || hidden == 0) throw std::invalid_argument("EncoderSpec: zero dimension");
    if (uses_attention()) {
        if (heads == 0) throw std::invalid_argument("EncoderSpec: heads must be >= 1");
        if (head_dim == 0 && hidden % heads != 0)
            throw std::invalid_argument("EncoderSpec: hidden " + std::to_string(hidden) +
                                        " not divisible by heads " + std::to_string(heads));
    }
    if (uses_gcn() && gcn_layers < 1)
        throw std::invalid_argument("EncoderSpec: gcn_layers must be >= 1 for renn/trenn");
}

std::size_t Model::task_index(const std::string& task) const {
    auto it = std::find(heads.tasks.begin(), heads.tasks.end(), task);
    if (it == heads.tasks.end()) throw std::out_of_range("task " + task + " absent from model heads");
    return static_cast<std::size_t>(it - heads.tasks.begin());
}

Model init_model(const EncoderSpec& enc, const HeadSpec& heads, std::uint64_t seed) {
    enc.validate();
    if (heads.tasks.empty()) throw std::invalid_argument("HeadSpec: at least one task required");
    std::mt19937_64 rng(seed);
    Model model;
    model.encoder = enc;
    model.heads = heads;
    ParamStore& p = model.params;

    switch (enc.paradigm) {
        case Paradigm::Snn:
            p.add("enc.W1", glorot_uniform(enc.d_in, enc.hidden, rng));
            p.add("enc.b1", Tensor(1, enc.hidden));
            break;
        case Paradigm::Tnn:
            p.add("enc.Win", glorot_uniform(enc.d_in, enc.hidden, rng));
            p.add("enc.bin", Tensor(1, enc.hidden));
            break;
        case Paradigm::Renn:
        case Paradigm::Trenn:
            for (std::size_t l = 0; l < enc.gcn_layers; ++l) {
                const std::size_t in = l == 0 ? enc.d_in : enc.hidden;
                p.add("enc.gcn" + std::to_string(l) + ".W", glorot_uniform(in, enc.hidden, rng));
                if (enc.gcn_bias)
                    p.add("enc.gcn" + std::to_string(l) + ".b", Tensor(1, enc.hidden));
            }
            break;
    }
    if (enc.uses_attention()) {
        const std::size_t dk = enc.resolved_head_dim();
        for (std::size_t h = 0; h < enc.heads; ++h) {
            const std::string hp = "enc.mha.h" + std::to_string(h) + ".";
            p.add(hp + "Wq", glorot_uniform(enc.hidden, dk, rng));
            p.add(hp + "Wk", glorot_uniform(enc.hidden, dk, rng));
            p.add(hp + "Wv", glorot_uniform(enc.hidden, dk, rng));
        }
        p.add("enc.mha.Wo", glorot_uniform(enc.heads * dk, enc.hidden, rng));
    }
    for (const auto& task : heads.tasks) {
        const std::string tp = "head." + task + ".";
        p.add(tp + "W1", glorot_uniform(enc.hidden, heads.hidden, rng));
        p.add(tp + "b1", Tensor(1, heads.hidden));
        p.add(tp + "W2", glorot_uniform(heads.hidden, 1, rng));
        p.add(tp + "b2", Tensor(1, 1));
    }
    if (heads.multi_task()) {
        p.add("alpha", Tensor(1, heads.tasks.size()));  // task-weight logits, lambda_i = exp(alpha_i)
    }
    return model;
}

BoundParams bind_params(Tape& tape, const ParamStore& params, bool watch) {
    BoundParams bound;
    for (const auto& [name, tensor] : params) bound.vars.emplace(name, tape.leaf(tensor, watch));
    return bound;
}

Tensor normalized_adjacency(const StaticTeamSnapshot& snapshot) {
    const std::size_t n = snapshot.members.size();
    if (n == 0) throw std::invalid_argument("normalized_adjacency: empty snapshot roster");
    Tensor adj(n, n);
    for (std::size_t i = 0; i < n; ++i) adj.at(i, i) = 1.0;  // self-connections
    for (const auto& [src, dst] : snapshot.edges) {
        adj.at(snapshot.member_index(src), snapshot.member_index(dst)) = 1.0;
    }
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += adj.at(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) adj.at(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    return adj;
}

Tensor union_adjacency(const DynamicTeam& team) {
    StaticTeamSnapshot merged;
    merged.members = team.roster();
    std::set<std::pair<int, int>> seen;
    for (const auto& snap : team.snapshots)
        for (const auto& e : snap.edges) seen.insert(e);
    merged.edges.assign(seen.begin(), seen.end());
    return normalized_adjacency(merged);
}

Var gcn_layer(Tape& tape, const StaticTeamSnapshot& snapshot, Var h_prev, Var weight,
              std::optional<Var> bias, bool apply_relu) {
    Var prop = tape.leaf(normalized_adjacency(snapshot));
    Var h = tape.matmul(tape.matmul(prop, h_prev), weight);
    if (bias) h = tape.add_rowvec(h, *bias);
    return apply_relu ? tape.relu(h) : h;
}

Tensor sinusoidal_positional_encoding(std::size_t length, std::size_t dim) {
    Tensor pe(length, dim);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate =
                std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
            const double angle = static_cast<double>(t) * rate;
            pe.at(t, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Var mha_temporal(Tape& tape, Var seq, const EncoderSpec& spec, const BoundParams& bound,
                 const std::string& prefix) {
    const Tensor& in = tape.value(seq);
    const std::size_t dm = in.cols;
    const std::size_t dk = spec.resolved_head_dim();
    if (spec.head_dim == 0 && dm % spec.heads != 0) {
        throw std::invalid_argument("mha_temporal: width " + std::to_string(dm) +
                                    " not divisible by " + std::to_string(spec.heads) + " heads");
    }
    Var x = seq;
    if (spec.positional_encoding) {
        x = tape.add(x, tape.leaf(sinusoidal_positional_encoding(in.rows, dm)));
    }
    std::vector<Var> head_outputs;
    head_outputs.reserve(spec.heads);
    for (std::size_t h = 0; h < spec.heads; ++h) {
        const std::string hp = prefix + "h" + std::to_string(h) + ".";
        Var q = tape.matmul(x, bound.at(hp + "Wq"));
        Var k = tape.matmul(x, bound.at(hp + "Wk"));
        Var v = tape.matmul(x, bound.at(hp + "Wv"));
        Var logits = tape.scale(tape.matmul(q, tape.transpose(k)),
                                1.0 / std::sqrt(static_cast<double>(dk)));
        Var attn = tape.softmax_rows(logits);
        head_outputs.push_back(tape.matmul(attn, v));
    }
    Var merged = head_outputs.size() == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
    return tape.matmul(merged, bound.at(prefix + "Wo"));
}

namespace {

Var time_mean_features(Tape& tape, const std::vector<Var>& snapshot_features) {
    Var acc = snapshot_features[0];
    for (std::size_t t = 1; t < snapshot_features.size(); ++t)
        acc = tape.add(acc, snapshot_features[t]);
    return tape.scale(acc, 1.0 / static_cast<double>(snapshot_features.size()));
}

Var member_sequence(Tape& tape, const std::vector<Var>& per_step, std::size_t member) {
    std::vector<Var> rows;
    rows.reserve(per_step.size());
    for (const Var& h : per_step) rows.push_back(tape.select_row(h, member));
    return rows.size() == 1 ? rows[0] : tape.concat_rows(rows);
}

Var gcn_stack(Tape& tape, const StaticTeamSnapshot& topology, Var h0, const EncoderSpec& spec,
              const BoundParams& bound) {
    Var h = h0;
    for (std::size_t l = 0; l < spec.gcn_layers; ++l) {
        const std::string lp = "enc.gcn" + std::to_string(l) + ".";
        std::optional<Var> bias;
        if (spec.gcn_bias) bias = bound.at(lp + "b");
        h = gcn_layer(tape, topology, h, bound.at(lp + "W"), bias);
    }
    return h;
}

}  // namespace

Var encode_on_tape(Tape& tape, const DynamicTeam& team, const EncoderSpec& spec,
                   const BoundParams& bound, const std::vector<Var>& snapshot_features) {
    spec.validate();
    if (snapshot_features.size() != team.n_steps())
        throw std::invalid_argument("encode: expected one feature leaf per snapshot");
    if (team.feature_dim() != spec.d_in)
        throw std::invalid_argument("encode: team feature dim " +
                                    std::to_string(team.feature_dim()) + " != spec d_in " +
                                    std::to_string(spec.d_in));
    const std::size_t n = team.n_members();
    const std::size_t K = team.n_steps();

    switch (spec.paradigm) {
        case Paradigm::Snn: {
            Var x = time_mean_features(tape, snapshot_features);
            return tape.relu(tape.add_rowvec(tape.matmul(x, bound.at("enc.W1")), bound.at("enc.b1")));
        }
        case Paradigm::Tnn: {
            std::vector<Var> members;
            members.reserve(n);
            for (std::size_t v = 0; v < n; ++v) {
                Var seq = member_sequence(tape, snapshot_features, v);  // K x d
                Var proj = tape.add_rowvec(tape.matmul(seq, bound.at("enc.Win")), bound.at("enc.bin"));
                Var attended = mha_temporal(tape, proj, spec, bound);
                members.push_back(tape.mean_rows(attended));
            }
            return members.size() == 1 ? members[0] : tape.concat_rows(members);
        }
        case Paradigm::Renn: {
            StaticTeamSnapshot merged;
            merged.members = team.roster();
            std::set<std::pair<int, int>> seen;
            for (const auto& snap : team.snapshots)
                for (const auto& e : snap.edges) seen.insert(e);
            merged.edges.assign(seen.begin(), seen.end());
            Var x = time_mean_features(tape, snapshot_features);
            return gcn_stack(tape, merged, x, spec, bound);
        }
        case Paradigm::Trenn: {
            std::vector<Var> per_step;
            per_step.reserve(K);
            for (std::size_t t = 0; t < K; ++t) {
                per_step.push_back(
                    gcn_stack(tape, team.snapshots[t], snapshot_features[t], spec, bound));
            }
            std::vector<Var> members;
            members.reserve(n);
            for (std::size_t v = 0; v < n; ++v) {
                Var seq = member_sequence(tape, per_step, v);  // K x hidden
                Var attended = mha_temporal(tape, seq, spec, bound);
                members.push_back(tape.mean_rows(attended));
            }
            return members.size() == 1 ? members[0] : tape.concat_rows(members);
        }
    }
    throw std::logic_error("encode: unreachable");
}

std::vector<Var> decode_tasks_on_tape(Tape& tape, Var embedding, const HeadSpec& heads,
                                      const BoundParams& bound) {
    std::vector<Var> outputs;
    outputs.reserve(heads.tasks.size());
    for (const auto& task : heads.tasks) {
        const std::string tp = "head." + task + ".";
        Var hidden = tape.relu(
            tape.add_rowvec(tape.matmul(embedding, bound.at(tp + "W1")), bound.at(tp + "b1")));
        outputs.push_back(
            tape.add_rowvec(tape.matmul(hidden, bound.at(tp + "W2")), bound.at(tp + "b2")));
    }
    return outputs;
}

Var decode_on_tape(Tape& tape, Var embedding, const HeadSpec& heads, const BoundParams& bound) {
    std::vector<Var> outputs = decode_tasks_on_tape(tape, embedding, heads, bound);
    return outputs.size() == 1 ? outputs[0] : tape.concat_cols(outputs);
}

DynamicTeam standardize_team(const Normalizer& norm, const DynamicTeam& team) {
    if (!norm.fitted) return team;
    DynamicTeam out = team;
    for (auto& snap : out.snapshots) {
        for (std::size_t i = 0; i < snap.features.rows; ++i)
            for (std::size_t j = 0; j < snap.features.cols; ++j)
                snap.features.at(i, j) =
                    (snap.features.at(i, j) - norm.feat_mean.at(0, j)) / norm.feat_std.at(0, j);
    }
    return out;
}

Tensor predict(const Model& model, const DynamicTeam& team) {
    DynamicTeam std_team = standardize_team(model.norm, team);
    Tape tape;
    BoundParams bound = bind_params(tape, model.params, /*watch=*/false);
    std::vector<Var> feats;
    feats.reserve(std_team.n_steps());
    for (const auto& snap : std_team.snapshots) feats.push_back(tape.leaf(snap.features));
    Var emb = encode_on_tape(tape, std_team, model.encoder, bound, feats);
    Var pred = decode_on_tape(tape, emb, model.heads, bound);
    Tensor out = tape.value(pred);
    if (model.norm.fitted) {
        for (std::size_t i = 0; i < out.rows; ++i)
            for (std::size_t k = 0; k < out.cols; ++k)
                out.at(i, k) = out.at(i, k) * model.norm.label_std.at(0, k) +
                               model.norm.label_mean.at(0, k);
    }
    return out;
}

// --- checkpoint I/O ----------------------------------------------------------

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
    return json{{"shape", {t.rows, t.cols}}, {"values", t.data}};
}

Tensor tensor_from_json(const json& j) {
    const auto& shape = j.at("shape");
    return Tensor(shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>(),
                  j.at("values").get<std::vector<double>>());
}

}  // namespace

std::string model_to_json(const Model& model) {
    json j;
    j["encoder"] = {{"paradigm", paradigm_to_string(model.encoder.paradigm)},
                    {"d_in", model.encoder.d_in},
                    {"hidden", model.encoder.hidden},
                    {"gcn_layers", model.encoder.gcn_layers},
                    {"heads", model.encoder.heads},
                    {"head_dim", model.encoder.head_dim},
                    {"positional_encoding", model.encoder.positional_encoding},
                    {"gcn_bias", model.encoder.gcn_bias}};
    j["heads"] = {{"tasks", model.heads.tasks}, {"hidden", model.heads.hidden}};
    if (model.norm.fitted) {
        j["normalizer"] = {{"feat_mean", tensor_to_json(model.norm.feat_mean)},
                           {"feat_std", tensor_to_json(model.norm.feat_std)},
                           {"label_mean", tensor_to_json(model.norm.label_mean)},
                           {"label_std", tensor_to_json(model.norm.label_std)}};
    }
    json params = json::object();
    for (const auto& [name, tensor] : model.params) params[name] = tensor_to_json(tensor);
    j["params"] = params;
    return j.dump(2);
}

Model model_from_json(const std::string& text) {
    json j = json::parse(text);
    Model model;
    const json& enc = j.at("encoder");
    model.encoder.paradigm = paradigm_from_string(enc.at("paradigm").get<std::string>());
    model.encoder.d_in = enc.at("d_in").get<std::size_t>();
    model.encoder.hidden = enc.at("hidden").get<std::size_t>();
    model.encoder.gcn_layers = enc.at("gcn_layers").get<std::size_t>();
    model.encoder.heads = enc.at("heads").get<std::size_t>();
    model.encoder.head_dim = enc.at("head_dim").get<std::size_t>();
    model.encoder.positional_encoding = enc.at("positional_encoding").get<bool>();
    model.encoder.gcn_bias = enc.at("gcn_bias").get<bool>();
    model.heads.tasks = j.at("heads").at("tasks").get<std::vector<std::string>>();
    model.heads.hidden = j.at("heads").at("hidden").get<std::size_t>();
    if (j.contains("normalizer")) {
        const json& n = j.at("normalizer");
        model.norm.feat_mean = tensor_from_json(n.at("feat_mean"));
        model.norm.feat_std = tensor_from_json(n.at("feat_std"));
        model.norm.label_mean = tensor_from_json(n.at("label_mean"));
        model.norm.label_std = tensor_from_json(n.at("label_std"));
        model.norm.fitted = true;
    }
    for (const auto& [name, jt] : j.at("params").items()) {
        model.params.add(name, tensor_from_json(jt));
    }
    return model;
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << model_to_json(model) << "\n";
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace trenn
