#include "trenn/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "trenn/saliency.hpp"

namespace trenn {

double objective_score(const Model& model, const DynamicTeam& team, const Objective& objective) {
    if (objective.target == Objective::Target::ExpectedTeamwork)
        return expected_teamwork(model, team);
    const std::size_t k = model.task_index(objective.task);
    const std::size_t row = team.snapshots.front().member_index(objective.member);
    return predict(model, team).at(row, k);
}

std::vector<EdgeRef> all_edges(const DynamicTeam& team) {
    std::vector<EdgeRef> edges;
    for (std::size_t t = 0; t < team.n_steps(); ++t)
        for (const auto& [src, dst] : team.snapshots[t].edges)
            edges.push_back(EdgeRef{t, src, dst});
    return edges;
}

DynamicTeam remove_edges(const DynamicTeam& team, const std::vector<EdgeRef>& removed) {
    DynamicTeam out = team;
    for (const EdgeRef& e : removed) {
        auto& edges = out.snapshots.at(e.t).edges;
        auto it = std::find(edges.begin(), edges.end(), std::make_pair(e.src, e.dst));
        if (it == edges.end()) {
            throw std::invalid_argument("remove_edges: no edge " + std::to_string(e.src) + "->" +
                                        std::to_string(e.dst) + " at snapshot " +
                                        std::to_string(e.t));
        }
        edges.erase(it);
    }
    return out;
}

namespace {

struct SearchNode {
    std::vector<std::size_t> removed;  // indices into the canonical edge list, ascending
    double score = 0.0;                // objective at this removal set
    double best = -std::numeric_limits<double>::infinity();  // best ordered score in subtree
    std::size_t visits = 0;
    bool evaluated = false;
    bool expanded = false;
    bool exhausted = false;  // whole subtree evaluated
    SearchNode* parent = nullptr;
    std::vector<std::unique_ptr<SearchNode>> children;
};

std::vector<EdgeRef> to_edge_refs(const std::vector<EdgeRef>& edges,
                                  const std::vector<std::size_t>& indices) {
    std::vector<EdgeRef> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(edges[i]);
    return out;
}

}  // namespace

CounterfactualResult greedy_counterfactual(const Model& model, const DynamicTeam& team,
                                           const Objective& objective, std::size_t budget,
                                           double c_explore) {
    const std::vector<EdgeRef> edges = all_edges(team);
    if (edges.empty()) throw std::invalid_argument("greedy_counterfactual: team has no edges");
    if (budget < 1) throw std::invalid_argument("greedy_counterfactual: budget must be positive");

    CounterfactualResult result;
    std::vector<std::size_t> best_set;
    double best_ordered = -std::numeric_limits<double>::infinity();
    bool achieved = false;

    auto evaluate = [&](SearchNode& node) {
        const double score =
            objective_score(model, remove_edges(team, to_edge_refs(edges, node.removed)), objective);
        node.score = score;
        node.evaluated = true;
        result.evals_used += 1;
        const double ordered = objective.ordered(score);
        const bool hits = objective.achieved(score);
        // prefer achieving sets, then score, then fewer removals, then order
        const bool better =
            (hits && !achieved) ||
            (hits == achieved &&
             (ordered > best_ordered ||
              (ordered == best_ordered && (node.removed.size() < best_set.size() ||
                                           (node.removed.size() == best_set.size() &&
                                            node.removed < best_set)))));
        if (best_ordered == -std::numeric_limits<double>::infinity() || better) {
            best_ordered = ordered;
            best_set = node.removed;
            achieved = hits;
        }
        return hits;
    };

    auto expand = [&](SearchNode& node) {
        node.expanded = true;
        const std::size_t next = node.removed.empty() ? 0 : node.removed.back() + 1;
        for (std::size_t e = next; e < edges.size(); ++e) {
            auto child = std::make_unique<SearchNode>();
            child->removed = node.removed;
            child->removed.push_back(e);
            child->parent = &node;
            node.children.push_back(std::move(child));
        }
        if (node.children.empty()) node.exhausted = true;
    };

    auto backpropagate = [&](SearchNode* node) {
        while (node) {
            node->visits += 1;
            double best = node->evaluated ? objective.ordered(node->score)
                                          : -std::numeric_limits<double>::infinity();
            bool exhausted = node->evaluated && node->expanded;
            for (const auto& child : node->children) {
                best = std::max(best, child->best);
                exhausted = exhausted && child->exhausted;
            }
            node->best = best;
            node->exhausted = exhausted;
            node = node->parent;
        }
    };

    SearchNode root;
    bool stop = evaluate(root);
    expand(root);
    backpropagate(&root);

    while (!stop && result.evals_used < budget && !root.exhausted) {
        // selection: walk down to a node with an unevaluated child
        SearchNode* node = &root;
        while (true) {
            SearchNode* unvisited = nullptr;
            for (const auto& child : node->children) {
                if (!child->evaluated) {
                    unvisited = child.get();
                    break;
                }
            }
            if (unvisited) {
                node = unvisited;
                break;
            }
            SearchNode* pick = nullptr;
            double pick_ucb = -std::numeric_limits<double>::infinity();
            for (const auto& child : node->children) {
                if (child->exhausted) continue;
                const double ucb =
                    child->best + c_explore * std::sqrt(std::log(static_cast<double>(node->visits)) /
                                                        static_cast<double>(child->visits));
                if (ucb > pick_ucb) {
                    pick_ucb = ucb;
                    pick = child.get();
                }
            }
            node = pick;
        }
        stop = evaluate(*node);
        expand(*node);
        backpropagate(node);
    }

    result.removed = to_edge_refs(edges, best_set);
    result.original_score = root.score;
    result.counterfactual_score =
        best_set.empty() ? root.score
                         : objective_score(model, remove_edges(team, result.removed), objective);
    result.achieved_target = objective.achieved(result.counterfactual_score);
    return result;
}

CounterfactualResult brute_force_counterfactual(const Model& model, const DynamicTeam& team,
                                                const Objective& objective) {
    const std::vector<EdgeRef> edges = all_edges(team);
    if (edges.size() > 20)
        throw std::invalid_argument("brute_force_counterfactual: more than 20 edges");

    CounterfactualResult result;
    std::vector<EdgeRef> best_set;
    double best_score = 0.0;
    bool have_best = false;
    bool achieved = false;

    const std::size_t total = std::size_t{1} << edges.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        std::vector<EdgeRef> removed;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (mask & (std::size_t{1} << e)) removed.push_back(edges[e]);
        const double score = objective_score(model, remove_edges(team, removed), objective);
        result.evals_used += 1;
        if (mask == 0) result.original_score = score;

        const bool hits = objective.achieved(score);
        bool better;
        if (!have_best) {
            better = true;
        } else if (hits != achieved) {
            better = hits;
        } else if (hits) {
            // smallest set first, then score, then lexicographic edges
            better = removed.size() < best_set.size() ||
                     (removed.size() == best_set.size() &&
                      (objective.ordered(score) > objective.ordered(best_score) ||
                       (score == best_score && removed < best_set)));
        } else {
            better = objective.ordered(score) > objective.ordered(best_score) ||
                     (score == best_score &&
                      (removed.size() < best_set.size() ||
                       (removed.size() == best_set.size() && removed < best_set)));
        }
        if (better) {
            best_set = std::move(removed);
            best_score = score;
            have_best = true;
            achieved = hits;
        }
    }

    result.removed = best_set;
    result.counterfactual_score = best_score;
    result.achieved_target = achieved;
    return result;
}

std::string counterfactual_to_json(const CounterfactualResult& result, const Objective& objective) {
    nlohmann::json removed = nlohmann::json::array();
    for (const EdgeRef& e : result.removed)
        removed.push_back({{"t", e.t}, {"src", e.src}, {"dst", e.dst}});
    nlohmann::json j{
        {"objective",
         {{"target", objective.target == Objective::Target::ExpectedTeamwork ? "expected_teamwork"
                                                                             : "member_task"},
          {"direction", objective.direction == Direction::Increase ? "increase" : "decrease"},
          {"threshold", objective.threshold}}},
        {"removed_edges", removed},
        {"original_score", result.original_score},
        {"counterfactual_score", result.counterfactual_score},
        {"evals_used", result.evals_used},
        {"achieved_target", result.achieved_target}};
    if (objective.target == Objective::Target::MemberTask) {
        j["objective"]["member"] = objective.member;
        j["objective"]["task"] = objective.task;
    }
    return j.dump(2) + "\n";
}

std::string counterfactual_to_dot(const DynamicTeam& team, const CounterfactualResult& result) {
    std::ostringstream os;
    os << "digraph counterfactual {\n  rankdir=LR;\n";
    for (std::size_t t = 0; t < team.n_steps(); ++t) {
        const StaticTeamSnapshot& snap = team.snapshots[t];
        os << "  subgraph cluster_t" << t << " {\n    label=\"t=" << snap.timestep << "\";\n";
        for (int m : snap.members)
            os << "    \"m" << m << "_t" << t << "\" [label=\"" << m << "\"];\n";
        for (const auto& [src, dst] : snap.edges) {
            const bool removed = std::find(result.removed.begin(), result.removed.end(),
                                           EdgeRef{t, src, dst}) != result.removed.end();
            os << "    \"m" << src << "_t" << t << "\" -> \"m" << dst << "_t" << t << "\"";
            if (removed) os << " [color=red, style=dashed, label=\"removed\"]";
            os << ";\n";
        }
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace trenn
