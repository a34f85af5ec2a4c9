#include "scmbench/graph.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

namespace scmbench {

std::vector<int> CausalGraph::observed() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (!is_hidden[i]) out.push_back(i);
    return out;
}

std::vector<int> CausalGraph::hidden() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (is_hidden[i]) out.push_back(i);
    return out;
}

std::vector<std::vector<int>> CausalGraph::children() const {
    std::vector<std::vector<int>> ch(n);
    for (int i = 0; i < n; ++i)
        for (int p : parents[i]) ch[p].push_back(i);
    return ch;
}

long CausalGraph::edge_count() const {
    long e = 0;
    for (const auto& ps : parents) e += static_cast<long>(ps.size());
    return e;
}

void CausalGraph::validate() const {
    if (n < 1) throw ValidationError("graph: node count must be >= 1");
    if (static_cast<int>(parents.size()) != n || static_cast<int>(is_hidden.size()) != n)
        throw ValidationError("graph: parent list / hidden flag size mismatch");
    for (int i = 0; i < n; ++i) {
        int prev = -1;
        for (int p : parents[i]) {
            if (p < 0 || p >= i)
                throw ValidationError("graph: edge " + std::to_string(p) + " -> " +
                                      std::to_string(i) + " violates index-topological order");
            if (p <= prev) throw ValidationError("graph: parent list not strictly ascending");
            prev = p;
        }
    }
}

CausalGraph sample_dag(int n, double expected_degree, RngStream& rng) {
    if (n < 1) throw ParamError("sample_dag: n must be >= 1");
    if (expected_degree < 0) throw ParamError("sample_dag: expected degree must be >= 0");
    double p_edge = n > 1 ? 2.0 * expected_degree / static_cast<double>(n - 1) : 0.0;
    p_edge = std::clamp(p_edge, 0.0, 1.0);

    CausalGraph g;
    g.n = n;
    g.parents.resize(n);
    g.is_hidden.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        long k = rng.binomial(i, p_edge);
        if (k > 0) {
            g.parents[i] = rng.sample_without_replacement(i, static_cast<int>(k));
            std::sort(g.parents[i].begin(), g.parents[i].end());
        }
    }
    return g;
}

void assign_hidden(CausalGraph& g, double p_h, RngStream& rng) {
    if (p_h < 0.0 || p_h > 1.0) throw ParamError("assign_hidden: p_h must be in [0, 1]");
    g.is_hidden.assign(g.n, 0);
    long k = rng.binomial(g.n, p_h);
    for (int i : rng.sample_without_replacement(g.n, static_cast<int>(k))) g.is_hidden[i] = 1;
}

Admg latent_project(const CausalGraph& g) {
    const auto obs = g.observed();
    if (obs.empty()) throw InfeasibleError("latent projection: no observed nodes");
    const auto ch = g.children();

    // Observed nodes reachable from `start`'s children through hidden-only
    // intermediates.
    auto reach_observed = [&](int start) {
        std::vector<int> out;
        std::vector<uint8_t> seen(g.n, 0);
        std::queue<int> q;
        for (int c : ch[start]) q.push(c);
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            if (seen[x]) continue;
            seen[x] = 1;
            if (!g.is_hidden[x]) {
                out.push_back(x);
            } else {
                for (int c : ch[x]) q.push(c);
            }
        }
        return out;
    };

    std::set<std::pair<int, int>> directed;
    for (int a : obs)
        for (int b : reach_observed(a)) directed.insert({a, b});

    // A collider-free path A <- ... -> B with hidden intermediates has a
    // unique topmost node: a hidden common cause reaching both A and B
    // through hidden-only directed paths.
    std::set<std::pair<int, int>> bidirected;
    for (int h = 0; h < g.n; ++h) {
        if (!g.is_hidden[h]) continue;
        auto r = reach_observed(h);
        std::sort(r.begin(), r.end());
        for (size_t i = 0; i < r.size(); ++i)
            for (size_t j = i + 1; j < r.size(); ++j) bidirected.insert({r[i], r[j]});
    }

    Admg out;
    out.nodes = obs;
    out.directed.assign(directed.begin(), directed.end());
    out.bidirected.assign(bidirected.begin(), bidirected.end());
    return out;
}

namespace {

// d-separation on a plain parent-list adjacency (no ordering requirement).
bool dag_d_separated(const std::vector<std::vector<int>>& parents, const std::vector<int>& a,
                     const std::vector<int>& b, const std::vector<int>& c) {
    const int n = static_cast<int>(parents.size());
    auto check = [&](const std::vector<int>& s, const char* name) {
        for (int x : s)
            if (x < 0 || x >= n)
                throw NodeNotFoundError(std::string("d_separated: unknown node in ") + name);
    };
    check(a, "A");
    check(b, "B");
    check(c, "C");

    std::vector<uint8_t> in_a(n, 0), in_b(n, 0), in_c(n, 0);
    for (int x : a) in_a[x] = 1;
    for (int x : b) in_b[x] = 1;
    for (int x : c) in_c[x] = 1;
    for (int i = 0; i < n; ++i)
        if (in_a[i] + in_b[i] + in_c[i] > 1)
            throw ParamError("d_separated: A, B, C must be pairwise disjoint");

    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i)
        for (int p : parents[i]) children[p].push_back(i);

    // Ancestors of C (including C): colliders are unblocked only here.
    std::vector<uint8_t> anc_c(n, 0);
    {
        std::queue<int> q;
        for (int x : c) {
            anc_c[x] = 1;
            q.push(x);
        }
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            for (int p : parents[x])
                if (!anc_c[p]) {
                    anc_c[p] = 1;
                    q.push(p);
                }
        }
    }

    // BFS over (node, direction) states: Into = trail's last edge points into
    // the node, OutOf = points out of it. Transitions gate on the status of
    // the node being traversed through.
    enum { Into = 0, OutOf = 1 };
    std::vector<std::array<uint8_t, 2>> seen(n, {0, 0});
    std::queue<std::pair<int, int>> q;
    auto push = [&](int x, int dir) {
        if (!seen[x][dir]) {
            seen[x][dir] = 1;
            q.emplace(x, dir);
        }
    };
    for (int s : a) {
        for (int ch : children[s]) push(ch, Into);
        for (int p : parents[s]) push(p, OutOf);
    }
    while (!q.empty()) {
        auto [x, dir] = q.front();
        q.pop();
        if (in_b[x]) return false;  // active trail reached B
        if (dir == Into) {
            if (!in_c[x])
                for (int ch : children[x]) push(ch, Into);  // chain prev -> x -> ch
            if (anc_c[x])
                for (int p : parents[x]) push(p, OutOf);  // collider prev -> x <- p
        } else {
            if (!in_c[x]) {
                for (int ch : children[x]) push(ch, Into);  // fork prev <- x -> ch
                for (int p : parents[x]) push(p, OutOf);    // chain p -> x -> prev
            }
        }
    }
    return true;
}

}  // namespace

bool d_separated(const CausalGraph& g, const std::vector<int>& a, const std::vector<int>& b,
                 const std::vector<int>& c) {
    return dag_d_separated(g.parents, a, b, c);
}

bool d_separated(const Admg& g, const std::vector<int>& a, const std::vector<int>& b,
                 const std::vector<int>& c) {
    // Compact reindexing of the observed nodes, synthetic confounders appended.
    std::vector<int> index(g.nodes.empty() ? 0 : g.nodes.back() + 1, -1);
    for (size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i]] = static_cast<int>(i);
    auto remap_node = [&](int x) {
        if (x < 0 || x >= static_cast<int>(index.size()) || index[x] < 0)
            throw NodeNotFoundError("d_separated: node not in ADMG");
        return index[x];
    };
    auto remap = [&](const std::vector<int>& s) {
        std::vector<int> out;
        out.reserve(s.size());
        for (int x : s) out.push_back(remap_node(x));
        return out;
    };

    int m = static_cast<int>(g.nodes.size());
    std::vector<std::vector<int>> parents(m + g.bidirected.size());
    for (auto [f, t] : g.directed) parents[remap_node(t)].push_back(remap_node(f));
    int next = m;
    for (auto [x, y] : g.bidirected) {
        parents[remap_node(x)].push_back(next);
        parents[remap_node(y)].push_back(next);
        ++next;
    }
    return dag_d_separated(parents, remap(a), remap(b), remap(c));
}

std::vector<std::vector<int>> c_components(const Admg& a) {
    std::map<int, std::vector<int>> adj;
    for (int v : a.nodes) adj[v];
    for (auto [x, y] : a.bidirected) {
        adj[x].push_back(y);
        adj[y].push_back(x);
    }
    std::set<int> unvisited(a.nodes.begin(), a.nodes.end());
    std::vector<std::vector<int>> comps;
    while (!unvisited.empty()) {
        int start = *unvisited.begin();
        std::vector<int> comp;
        std::queue<int> q;
        q.push(start);
        unvisited.erase(start);
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            comp.push_back(x);
            for (int y : adj[x])
                if (unvisited.erase(y)) q.push(y);
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    std::sort(comps.begin(), comps.end());
    return comps;
}

namespace {

std::vector<uint8_t> node_mask(int n, const std::vector<int>& s, const char* what) {
    std::vector<uint8_t> mask(n, 0);
    for (int x : s) {
        if (x < 0 || x >= n)
            throw NodeNotFoundError(std::string("graph_surgery: unknown node in ") + what);
        mask[x] = 1;
    }
    return mask;
}

}  // namespace

CausalGraph graph_surgery(const CausalGraph& g, const std::vector<int>& remove_incoming,
                          const std::vector<int>& remove_outgoing) {
    auto in_mask = node_mask(g.n, remove_incoming, "remove_incoming");
    auto out_mask = node_mask(g.n, remove_outgoing, "remove_outgoing");
    CausalGraph out = g;
    for (int i = 0; i < g.n; ++i) {
        if (in_mask[i]) {
            out.parents[i].clear();
            continue;
        }
        auto& ps = out.parents[i];
        ps.erase(std::remove_if(ps.begin(), ps.end(), [&](int p) { return out_mask[p]; }),
                 ps.end());
    }
    return out;
}

Admg graph_surgery(const Admg& g, const std::vector<int>& remove_incoming,
                   const std::vector<int>& remove_outgoing) {
    int top = 0;
    for (int v : g.nodes) top = std::max(top, v + 1);
    auto in_mask = node_mask(top, remove_incoming, "remove_incoming");
    auto out_mask = node_mask(top, remove_outgoing, "remove_outgoing");
    Admg out;
    out.nodes = g.nodes;
    for (auto [f, t] : g.directed)
        if (!in_mask[t] && !out_mask[f]) out.directed.emplace_back(f, t);
    // Bidirected edges carry arrowheads at both ends: dropped when either end
    // has incoming edges removed.
    for (auto [x, y] : g.bidirected)
        if (!in_mask[x] && !in_mask[y]) out.bidirected.emplace_back(x, y);
    return out;
}

namespace {

std::vector<int> closure(const CausalGraph& g, const std::vector<int>& seeds, bool up) {
    auto adj = up ? g.parents : g.children();
    std::vector<uint8_t> seen(g.n, 0);
    std::queue<int> q;
    for (int s : seeds) {
        if (s < 0 || s >= g.n) throw NodeNotFoundError("ancestors/descendants: unknown node");
        q.push(s);
    }
    std::vector<int> out;
    while (!q.empty()) {
        int x = q.front();
        q.pop();
        for (int nx : adj[x])
            if (!seen[nx]) {
                seen[nx] = 1;
                out.push_back(nx);
                q.push(nx);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<int> ancestors(const CausalGraph& g, const std::vector<int>& seeds) {
    return closure(g, seeds, true);
}

std::vector<int> descendants(const CausalGraph& g, const std::vector<int>& seeds) {
    return closure(g, seeds, false);
}

nlohmann::json graph_to_json(const CausalGraph& g) {
    nlohmann::json j;
    std::vector<int> nodes(g.n);
    for (int i = 0; i < g.n; ++i) nodes[i] = i;
    j["nodes"] = nodes;
    auto edges = nlohmann::json::array();
    for (int i = 0; i < g.n; ++i)
        for (int p : g.parents[i]) edges.push_back({p, i});
    j["directed_edges"] = edges;
    j["bidirected_edges"] = nlohmann::json::array();
    j["hidden"] = g.hidden();
    return j;
}

nlohmann::json admg_to_json(const Admg& a) {
    nlohmann::json j;
    j["nodes"] = a.nodes;
    auto de = nlohmann::json::array();
    for (auto [f, t] : a.directed) de.push_back({f, t});
    j["directed_edges"] = de;
    auto be = nlohmann::json::array();
    for (auto [x, y] : a.bidirected) be.push_back({x, y});
    j["bidirected_edges"] = be;
    j["hidden"] = nlohmann::json::array();
    return j;
}

CausalGraph graph_from_json(const nlohmann::json& j) {
    CausalGraph g;
    if (j.contains("nodes") && j["nodes"].is_number()) {
        g.n = j["nodes"].get<int>();
    } else if (j.contains("nodes") && j["nodes"].is_array()) {
        g.n = static_cast<int>(j["nodes"].size());
    } else {
        throw SyntaxError("graph: missing 'nodes'");
    }
    g.parents.resize(g.n);
    g.is_hidden.assign(g.n, 0);
    for (const auto& e : j.value("directed_edges", nlohmann::json::array())) {
        if (!e.is_array() || e.size() != 2) throw SyntaxError("graph: bad edge entry");
        int f = e[0].get<int>(), t = e[1].get<int>();
        if (t < 0 || t >= g.n || f < 0 || f >= g.n) throw ValidationError("graph: edge endpoint out of range");
        g.parents[t].push_back(f);
    }
    for (auto& ps : g.parents) std::sort(ps.begin(), ps.end());
    for (const auto& h : j.value("hidden", nlohmann::json::array())) {
        int x = h.get<int>();
        if (x < 0 || x >= g.n) throw ValidationError("graph: hidden index out of range");
        g.is_hidden[x] = 1;
    }
    g.validate();
    return g;
}

}  // namespace scmbench
