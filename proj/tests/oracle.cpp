#include "oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace scmbench::testing {

namespace {

// A path node is a collider iff both path edges point into it.
bool path_blocked(const std::vector<int>& path, const std::set<std::pair<int, int>>& edges,
                  const std::set<int>& cond, const std::set<int>& anc_cond) {
    for (size_t i = 1; i + 1 < path.size(); ++i) {
        const int prev = path[i - 1], mid = path[i], next = path[i + 1];
        const bool into_from_prev = edges.count({prev, mid}) > 0;
        const bool into_from_next = edges.count({next, mid}) > 0;
        const bool collider = into_from_prev && into_from_next;
        if (collider) {
            if (!anc_cond.count(mid)) return true;
        } else {
            if (cond.count(mid)) return true;
        }
    }
    return false;
}

}  // namespace

bool oracle_d_separated(const CausalGraph& g, int a, int b, const std::vector<int>& cond) {
    std::set<std::pair<int, int>> edges;
    std::vector<std::vector<int>> nbrs(g.n);
    for (int i = 0; i < g.n; ++i)
        for (int p : g.parents[i]) {
            edges.insert({p, i});
            nbrs[p].push_back(i);
            nbrs[i].push_back(p);
        }
    std::set<int> cset(cond.begin(), cond.end());
    std::set<int> anc = cset;
    // Ancestors of the conditioning set (inclusive).
    bool grew = true;
    while (grew) {
        grew = false;
        for (int i = 0; i < g.n; ++i)
            for (int p : g.parents[i])
                if (anc.count(i) && !anc.count(p)) {
                    anc.insert(p);
                    grew = true;
                }
    }

    bool separated = true;
    std::vector<int> path = {a};
    std::vector<char> used(static_cast<size_t>(g.n), 0);
    used[static_cast<size_t>(a)] = 1;
    std::function<void()> dfs = [&]() {
        if (!separated) return;
        int cur = path.back();
        if (cur == b) {
            if (!path_blocked(path, edges, cset, anc)) separated = false;
            return;
        }
        for (int nx : nbrs[cur]) {
            if (used[static_cast<size_t>(nx)]) continue;
            used[static_cast<size_t>(nx)] = 1;
            path.push_back(nx);
            dfs();
            path.pop_back();
            used[static_cast<size_t>(nx)] = 0;
        }
    };
    dfs();
    return separated;
}

ExactDiscreteOracle::ExactDiscreteOracle(const Scm& m) : m_(&m) {
    for (int i = 0; i < m.n_nodes(); ++i) {
        const auto& tab = m.mechanisms[static_cast<size_t>(i)].tabular;
        const double span = tab.boundaries.back() - tab.boundaries.front();
        std::vector<double> probs;
        for (size_t r = 0; r + 1 < tab.boundaries.size(); ++r)
            probs.push_back((tab.boundaries[r + 1] - tab.boundaries[r]) / span);
        region_probs_.push_back(std::move(probs));
    }
}

template <typename Fn>
void ExactDiscreteOracle::for_each_combo(Fn&& fn) const {
    const int n = m_->n_nodes();
    std::vector<int> regions(static_cast<size_t>(n), 0);
    std::function<void(int, double)> rec = [&](int node, double prob) {
        if (prob == 0) return;
        if (node == n) {
            fn(prob, regions);
            return;
        }
        for (size_t r = 0; r < region_probs_[static_cast<size_t>(node)].size(); ++r) {
            regions[static_cast<size_t>(node)] = static_cast<int>(r);
            rec(node + 1, prob * region_probs_[static_cast<size_t>(node)][r]);
        }
    };
    rec(0, 1.0);
}

std::vector<int> ExactDiscreteOracle::eval_combo(const std::vector<int>& regions,
                                                 const std::map<int, double>& do_map) const {
    const int n = m_->n_nodes();
    std::vector<int> values(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        auto it = do_map.find(i);
        if (it != do_map.end()) {
            values[static_cast<size_t>(i)] = static_cast<int>(it->second);
            continue;
        }
        const auto& tab = m_->mechanisms[static_cast<size_t>(i)].tabular;
        long cfg = 0, stride = 1;
        const auto& ps = m_->graph.parents[i];
        for (size_t k = 0; k < ps.size(); ++k) {
            cfg += values[static_cast<size_t>(ps[k])] * stride;
            stride *= tab.parent_cards[k];
        }
        values[static_cast<size_t>(i)] =
            tab.mappings[static_cast<size_t>(regions[static_cast<size_t>(i)])]
                        [static_cast<size_t>(cfg)];
    }
    return values;
}

std::map<std::vector<int>, double> ExactDiscreteOracle::joint(
    const std::map<int, double>& do_map) const {
    std::map<std::vector<int>, double> out;
    for_each_combo([&](double p, const std::vector<int>& regions) {
        out[eval_combo(regions, do_map)] += p;
    });
    return out;
}

double ExactDiscreteOracle::ate(const Query& q) const {
    double acc = 0;
    for_each_combo([&](double p, const std::vector<int>& regions) {
        auto vt = eval_combo(regions, {{q.treatment, q.t_value}});
        auto vc = eval_combo(regions, {{q.treatment, q.c_value}});
        acc += p * (vt[static_cast<size_t>(q.outcome)] - vc[static_cast<size_t>(q.outcome)]);
    });
    return acc;
}

double ExactDiscreteOracle::cate(const Query& q) const {
    double num_t = 0, mass_t = 0, num_c = 0, mass_c = 0;
    auto matches = [&](const std::vector<int>& values) {
        for (size_t k = 0; k < q.covariates.size(); ++k)
            if (values[static_cast<size_t>(q.covariates[k])] !=
                static_cast<int>(q.covariate_values[k]))
                return false;
        return true;
    };
    for_each_combo([&](double p, const std::vector<int>& regions) {
        auto vt = eval_combo(regions, {{q.treatment, q.t_value}});
        if (matches(vt)) {
            mass_t += p;
            num_t += p * vt[static_cast<size_t>(q.outcome)];
        }
        auto vc = eval_combo(regions, {{q.treatment, q.c_value}});
        if (matches(vc)) {
            mass_c += p;
            num_c += p * vc[static_cast<size_t>(q.outcome)];
        }
    });
    if (mass_t == 0 || mass_c == 0) return std::numeric_limits<double>::quiet_NaN();
    return num_t / mass_t - num_c / mass_c;
}

double ExactDiscreteOracle::ctf_te(const Query& q) const {
    double post_mass = 0, acc = 0;
    for_each_combo([&](double p, const std::vector<int>& regions) {
        auto factual = eval_combo(regions, {});
        for (size_t k = 0; k < q.factual_vars.size(); ++k)
            if (factual[static_cast<size_t>(q.factual_vars[k])] !=
                static_cast<int>(q.factual_values[k]))
                return;
        post_mass += p;
        auto vt = eval_combo(regions, {{q.treatment, q.t_value}});
        auto vc = eval_combo(regions, {{q.treatment, q.c_value}});
        if (q.outcome_value) {
            acc += p * ((vt[static_cast<size_t>(q.outcome)] == static_cast<int>(*q.outcome_value)) -
                        (vc[static_cast<size_t>(q.outcome)] == static_cast<int>(*q.outcome_value)));
        } else {
            acc += p * (vt[static_cast<size_t>(q.outcome)] - vc[static_cast<size_t>(q.outcome)]);
        }
    });
    if (post_mass == 0) return std::numeric_limits<double>::quiet_NaN();
    return acc / post_mass;
}

double ExactDiscreteOracle::value(const Query& q) const {
    switch (q.kind) {
        case QueryKind::Ate: return ate(q);
        case QueryKind::Cate: return cate(q);
        case QueryKind::CtfTe: return ctf_te(q);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace scmbench::testing
