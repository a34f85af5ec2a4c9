#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scmbench/common.hpp"
#include "scmbench/rng.hpp"

namespace scmbench {

// DAG over nodes 0..n-1 whose index order is a topological order: every edge
// j -> i satisfies j < i. A subset of nodes may be flagged hidden.
struct CausalGraph {
    int n = 0;
    std::vector<std::vector<int>> parents;  // parents[i] ascending, all < i
    std::vector<uint8_t> is_hidden;         // size n

    std::vector<int> observed() const;
    std::vector<int> hidden() const;
    std::vector<std::vector<int>> children() const;
    long edge_count() const;

    // Checks the structural invariants; predefined graphs go through here.
    void validate() const;
};

// Acyclic directed mixed graph over the observed nodes.
struct Admg {
    std::vector<int> nodes;                      // ascending node ids
    std::vector<std::pair<int, int>> directed;   // (from, to)
    std::vector<std::pair<int, int>> bidirected; // (a, b) with a < b
};

// Algorithm: node i draws Binomial(i, p_edge) parents without replacement
// from its predecessors, p_edge = 2d/(n-1) clamped to [0, 1].
CausalGraph sample_dag(int n, double expected_degree, RngStream& rng);

// |V_H| ~ Binomial(n, p_h), members drawn without replacement.
void assign_hidden(CausalGraph& g, double p_h, RngStream& rng);

// Latent projection onto the observed nodes: A -> B iff a directed path with
// all intermediates hidden exists; A <-> B iff a collider-free path
// A <- ... -> B with all intermediates hidden exists.
Admg latent_project(const CausalGraph& g);

// Standard d-separation; a, b, c must be pairwise disjoint.
bool d_separated(const CausalGraph& g, const std::vector<int>& a, const std::vector<int>& b,
                 const std::vector<int>& c);

// On an ADMG each bidirected edge is rewritten as a fresh hidden common cause
// before running the DAG routine.
bool d_separated(const Admg& g, const std::vector<int>& a, const std::vector<int>& b,
                 const std::vector<int>& c);

// Connected components of the bidirected subgraph, singletons included.
// Components are sorted internally and by first element.
std::vector<std::vector<int>> c_components(const Admg& a);

CausalGraph graph_surgery(const CausalGraph& g, const std::vector<int>& remove_incoming,
                          const std::vector<int>& remove_outgoing);
Admg graph_surgery(const Admg& g, const std::vector<int>& remove_incoming,
                   const std::vector<int>& remove_outgoing);

// Proper ancestors (resp. descendants) of the seed set, seeds excluded unless
// reachable through a directed cycle-free path.
std::vector<int> ancestors(const CausalGraph& g, const std::vector<int>& seeds);
std::vector<int> descendants(const CausalGraph& g, const std::vector<int>& seeds);

nlohmann::json graph_to_json(const CausalGraph& g);
nlohmann::json admg_to_json(const Admg& a);
CausalGraph graph_from_json(const nlohmann::json& j);

}  // namespace scmbench
