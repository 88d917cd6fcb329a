#pragma once

#include <string>
#include <vector>

#include "trenn/model.hpp"

namespace trenn {

// One directed edge of one snapshot.
struct EdgeRef {
    std::size_t t = 0;
    int src = 0;
    int dst = 0;

    friend bool operator==(const EdgeRef& a, const EdgeRef& b) {
        return a.t == b.t && a.src == b.src && a.dst == b.dst;
    }
    friend bool operator<(const EdgeRef& a, const EdgeRef& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.src != b.src) return a.src < b.src;
        return a.dst < b.dst;
    }
};

enum class Direction { Increase, Decrease };

// Scalar the search optimizes: either the aggregate teamwork score or one
// member's prediction on one task.
struct Objective {
    enum class Target { ExpectedTeamwork, MemberTask };
    Target target = Target::ExpectedTeamwork;
    int member = 0;          // MemberTask only
    std::string task;        // MemberTask only
    Direction direction = Direction::Increase;
    double threshold = 0.0;

    bool achieved(double score) const {
        return direction == Direction::Increase ? score >= threshold : score <= threshold;
    }
    // higher is better for the search regardless of direction
    double ordered(double score) const {
        return direction == Direction::Increase ? score : -score;
    }
};

double objective_score(const Model& model, const DynamicTeam& team, const Objective& objective);

std::vector<EdgeRef> all_edges(const DynamicTeam& team);
DynamicTeam remove_edges(const DynamicTeam& team, const std::vector<EdgeRef>& removed);

struct CounterfactualResult {
    std::vector<EdgeRef> removed;
    double original_score = 0.0;
    double counterfactual_score = 0.0;
    std::size_t evals_used = 0;
    bool achieved_target = false;
};

// Monte-Carlo style search over edge-removal sets: repeatedly select a node
// by value plus c_explore*sqrt(ln(parent visits)/visits), evaluate one new
// removal set, expand its children, and push the best descendant score back
// up. Children extend the parent set by one later-ordered edge, so every
// subset appears exactly once and a budget of 2^|edges| covers the whole
// space. The returned score comes from a fresh forward pass, never a cache.
CounterfactualResult greedy_counterfactual(const Model& model, const DynamicTeam& team,
                                           const Objective& objective, std::size_t budget,
                                           double c_explore = 1.4142135623730951);

// Exhaustive oracle over all edge subsets (at most 20 edges). Returns the
// smallest achieving subset, ties broken by best score then lexicographic
// edge order; falls back to the best-scoring subset when nothing achieves
// the objective.
CounterfactualResult brute_force_counterfactual(const Model& model, const DynamicTeam& team,
                                                const Objective& objective);

std::string counterfactual_to_json(const CounterfactualResult& result, const Objective& objective);
std::string counterfactual_to_dot(const DynamicTeam& team, const CounterfactualResult& result);

}  // namespace trenn
