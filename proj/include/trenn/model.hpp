#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trenn/dataset.hpp"
#include "trenn/params.hpp"
#include "trenn/tape.hpp"

namespace trenn {

enum class Paradigm { Snn, Tnn, Renn, Trenn };

Paradigm paradigm_from_string(const std::string& name);
std::string paradigm_to_string(Paradigm p);

struct EncoderSpec {
    Paradigm paradigm = Paradigm::Trenn;
    std::size_t d_in = 16;
    std::size_t hidden = 16;  // social embedding width
    std::size_t gcn_layers = 2;
    std::size_t heads = 2;
    std::size_t head_dim = 0;  // 0 -> hidden / heads
    bool positional_encoding = true;
    bool gcn_bias = true;

    bool uses_attention() const { return paradigm == Paradigm::Tnn || paradigm == Paradigm::Trenn; }
    bool uses_gcn() const { return paradigm == Paradigm::Renn || paradigm == Paradigm::Trenn; }
    std::size_t resolved_head_dim() const { return head_dim == 0 ? hidden / heads : head_dim; }
    void validate() const;
};

struct HeadSpec {
    std::vector<std::string> tasks;  // m of them, each with a scalar output
    std::size_t hidden = 16;

    bool multi_task() const { return tasks.size() >= 2; }
};

// Per-channel feature and per-task label standardization, fitted on training
// folds only.
struct Normalizer {
    Tensor feat_mean;  // 1 x d
    Tensor feat_std;   // 1 x d
    Tensor label_mean;  // 1 x m
    Tensor label_std;   // 1 x m
    bool fitted = false;
};

struct Model {
    EncoderSpec encoder;
    HeadSpec heads;
    ParamStore params;
    Normalizer norm;

    std::size_t param_count() const { return params.param_count(); }
    std::size_t task_index(const std::string& task) const;
};

// Parameter tensors bound onto a tape for one forward pass.
struct BoundParams {
    std::map<std::string, Var> vars;
    Var at(const std::string& name) const { return vars.at(name); }
};

Model init_model(const EncoderSpec& enc, const HeadSpec& heads, std::uint64_t seed);
BoundParams bind_params(Tape& tape, const ParamStore& params, bool watch);

// --- encoder building blocks -------------------------------------------------

// D^{-1/2} (A + I) D^{-1/2} with A[src][dst] = 1 per stored edge and D the
// row-degree of the adjusted adjacency.
Tensor normalized_adjacency(const StaticTeamSnapshot& snapshot);
Tensor union_adjacency(const DynamicTeam& team);

// One graph-convolution layer: phi(S H W + b). `apply_relu = false` drops the
// activation (used by oracle tests).
Var gcn_layer(Tape& tape, const StaticTeamSnapshot& snapshot, Var h_prev, Var weight,
              std::optional<Var> bias = std::nullopt, bool apply_relu = true);

Tensor sinusoidal_positional_encoding(std::size_t length, std::size_t dim);

// Multi-head self-attention over one K x d sequence; positional encoding is
// added to the input when enabled.
Var mha_temporal(Tape& tape, Var seq, const EncoderSpec& spec, const BoundParams& bound,
                 const std::string& prefix = "enc.mha.");

// Encodes one team into a |members| x hidden social-embedding matrix.
// `snapshot_features[t]` must hold the (possibly standardized) feature leaf of
// snapshot t; pass watched leaves to obtain input gradients.
Var encode_on_tape(Tape& tape, const DynamicTeam& team, const EncoderSpec& spec,
                   const BoundParams& bound, const std::vector<Var>& snapshot_features);

// Task heads: per-task two-layer MLP applied per member. `decode_tasks_on_tape`
// returns one n x 1 column per task; `decode_on_tape` concatenates them to n x m.
std::vector<Var> decode_tasks_on_tape(Tape& tape, Var embedding, const HeadSpec& heads,
                                      const BoundParams& bound);
Var decode_on_tape(Tape& tape, Var embedding, const HeadSpec& heads, const BoundParams& bound);

// Full forward in label units (applies the model normalizer on both ends).
Tensor predict(const Model& model, const DynamicTeam& team);

DynamicTeam standardize_team(const Normalizer& norm, const DynamicTeam& team);

// Checkpoint round-trip (JSON: specs + name -> shape -> values).
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace trenn
