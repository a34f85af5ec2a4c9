#include "scmbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace scmbench {

namespace {

double pop_mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pop_var(const std::vector<double>& xs, double mean) {
    if (xs.empty()) return 0.0;
    double acc = 0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size());
}

}  // namespace

GraphMetricBlock graph_metrics(const CausalGraph& g, long path_budget) {
    GraphMetricBlock b;
    std::vector<double> indeg, anc, desc;
    for (int i = 0; i < g.n; ++i) {
        indeg.push_back(static_cast<double>(g.parents[i].size()));
        anc.push_back(static_cast<double>(ancestors(g, {i}).size()));
        desc.push_back(static_cast<double>(descendants(g, {i}).size()));
    }
    b.in_degree_mean = pop_mean(indeg);
    b.in_degree_var = pop_var(indeg, b.in_degree_mean);
    b.ancestors_mean = pop_mean(anc);
    b.ancestors_var = pop_var(anc, b.ancestors_mean);
    b.descendants_mean = pop_mean(desc);
    b.descendants_var = pop_var(desc, b.descendants_mean);

    // Every directed walk in a DAG is a path; DFS visits each exactly once.
    const auto ch = g.children();
    long count = 0, max_len = 0;
    double sum = 0, sumsq = 0;
    bool exact = true;
    auto dfs = [&](auto&& self, int node, long len) -> void {
        if (!exact) return;
        for (int c : ch[node]) {
            if (count >= path_budget) {
                exact = false;
                return;
            }
            ++count;
            sum += static_cast<double>(len + 1);
            sumsq += static_cast<double>((len + 1) * (len + 1));
            max_len = std::max(max_len, len + 1);
            self(self, c, len + 1);
        }
    };
    for (int s = 0; s < g.n && exact; ++s) dfs(dfs, s, 0);
    b.path_count = count;
    b.paths_exact = exact;
    b.path_len_max = max_len;
    if (count > 0) {
        b.path_len_mean = sum / static_cast<double>(count);
        b.path_len_var = sumsq / static_cast<double>(count) - b.path_len_mean * b.path_len_mean;
        b.path_len_var = std::max(0.0, b.path_len_var);
    }
    return b;
}

ProjectedMetricBlock projected_metrics(const Admg& a) {
    ProjectedMetricBlock b;
    std::map<int, long> sib;
    for (int v : a.nodes) sib[v] = 0;
    for (auto [x, y] : a.bidirected) {
        ++sib[x];
        ++sib[y];
    }
    std::vector<double> sibs;
    for (int v : a.nodes) sibs.push_back(static_cast<double>(sib[v]));
    b.siblings_mean = pop_mean(sibs);
    b.siblings_var = pop_var(sibs, b.siblings_mean);

    auto comps = c_components(a);
    b.c_component_count = static_cast<long>(comps.size());
    std::vector<double> sizes;
    for (const auto& c : comps) sizes.push_back(static_cast<double>(c.size()));
    b.c_size_mean = pop_mean(sizes);
    b.c_size_var = pop_var(sizes, b.c_size_mean);
    return b;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DistributionMetricBlock continuous_distribution_metrics(const Scm& m, long n_probe,
                                                        RngStream& rng) {
    DistributionMetricBlock b;
    b.probe_samples = n_probe;
    b.approximate = true;
    b.joint_min_prob = b.zero_prob_fraction = b.marginal_min_prob = kNaN;
    b.marginal_min_mean = b.marginal_min_var = kNaN;
    b.joint_l1_uniform = b.marginal_l1_mean = b.marginal_l1_var = kNaN;
    b.domain_cells = kNaN;

    const int bins = 16;
    Eigen::MatrixXd data = observed_columns(m, forward_sample(m, n_probe, rng).values);
    const long cols = data.cols();
    std::vector<double> lo(cols), width(cols);
    for (long c = 0; c < cols; ++c) {
        lo[c] = data.col(c).minCoeff();
        double hi = data.col(c).maxCoeff();
        width[c] = hi > lo[c] ? (hi - lo[c]) / bins : 1.0;
    }
    std::unordered_map<uint64_t, long> cells;
    for (long i = 0; i < data.rows(); ++i) {
        uint64_t key = 0x9e3779b97f4a7c15ULL;  // wide tables: hashed cell key
        for (long c = 0; c < cols; ++c) {
            long bin = static_cast<long>((data(i, c) - lo[c]) / width[c]);
            bin = std::clamp(bin, 0L, static_cast<long>(bins - 1));
            key = mix64(key ^ static_cast<uint64_t>(bin + 1));
        }
        ++cells[key];
    }
    double h = 0;
    for (const auto& [_, cnt] : cells) {
        double p = static_cast<double>(cnt) / static_cast<double>(n_probe);
        h -= p * std::log(p);
    }
    b.joint_entropy = h;
    return b;
}

}  // namespace

DistributionMetricBlock distribution_metrics(const Scm& m, long n_probe, RngStream& rng) {
    if (n_probe < 1) throw ParamError("distribution_metrics: probe sample count must be >= 1");
    if (!m.discrete) return continuous_distribution_metrics(m, n_probe, rng);

    DistributionMetricBlock b;
    b.probe_samples = n_probe;

    const auto obs = m.graph.observed();
    const long n_obs = static_cast<long>(obs.size());
    Eigen::MatrixXd data = observed_columns(m, forward_sample(m, n_probe, rng).values);

    std::vector<int> cards;
    double domain = 1.0;
    bool key_fits = true;
    long packed_domain = 1;
    for (int v : obs) {
        cards.push_back(m.cardinality[static_cast<size_t>(v)]);
        domain *= cards.back();
        if (key_fits && packed_domain > (1L << 62) / cards.back())
            key_fits = false;
        else if (key_fits)
            packed_domain *= cards.back();
    }
    b.domain_cells = domain;

    // Joint cell counts; packed keys when the domain fits 62 bits.
    std::unordered_map<uint64_t, long> packed_cells;
    std::map<std::vector<uint16_t>, long> wide_cells;
    std::vector<std::vector<long>> marg(static_cast<size_t>(n_obs));
    for (long c = 0; c < n_obs; ++c) marg[static_cast<size_t>(c)].assign(cards[static_cast<size_t>(c)], 0);

    std::vector<uint16_t> wide_key(static_cast<size_t>(n_obs));
    for (long i = 0; i < n_probe; ++i) {
        uint64_t key = 0;
        for (long c = 0; c < n_obs; ++c) {
            long v = static_cast<long>(data(i, c));
            ++marg[static_cast<size_t>(c)][static_cast<size_t>(v)];
            if (key_fits)
                key = key * static_cast<uint64_t>(cards[static_cast<size_t>(c)]) +
                      static_cast<uint64_t>(v);
            else
                wide_key[static_cast<size_t>(c)] = static_cast<uint16_t>(v);
        }
        if (key_fits)
            ++packed_cells[key];
        else
            ++wide_cells[wide_key];
    }
    const double n = static_cast<double>(n_probe);
    const double uniform = 1.0 / domain;
    double realized = 0, min_p = 1.0, l1 = 0, h = 0;
    auto accumulate_cell = [&](long cnt) {
        double p = static_cast<double>(cnt) / n;
        realized += 1;
        min_p = std::min(min_p, p);
        l1 += std::abs(p - uniform);
        h -= p * std::log(p);
    };
    if (key_fits)
        for (const auto& [_, cnt] : packed_cells) accumulate_cell(cnt);
    else
        for (const auto& [_, cnt] : wide_cells) accumulate_cell(cnt);

    b.joint_min_prob = realized < domain ? 0.0 : min_p;
    b.zero_prob_fraction = (domain - realized) / domain;
    b.joint_l1_uniform = l1 + (domain - realized) * uniform;
    b.joint_entropy = h;

    std::vector<double> marg_mins, marg_l1s;
    double weighted_min_sum = 0;
    b.marginal_min_prob = 1.0;
    for (long c = 0; c < n_obs; ++c) {
        const auto& counts = marg[static_cast<size_t>(c)];
        double mn = 1.0, l1m = 0;
        for (long cnt : counts) {
            double p = static_cast<double>(cnt) / n;
            mn = std::min(mn, p);
            l1m += std::abs(p - 1.0 / static_cast<double>(counts.size()));
        }
        marg_mins.push_back(mn);
        marg_l1s.push_back(l1m);
        weighted_min_sum += mn / static_cast<double>(counts.size());
        b.marginal_min_prob = std::min(b.marginal_min_prob, mn);
    }
    b.marginal_min_mean = n_obs > 0 ? weighted_min_sum / static_cast<double>(n_obs) : 0.0;
    b.marginal_min_var = pop_var(marg_mins, b.marginal_min_mean);
    b.marginal_l1_mean = pop_mean(marg_l1s);
    b.marginal_l1_var = pop_var(marg_l1s, b.marginal_l1_mean);
    return b;
}

namespace {

// Average ranks with ties sharing their mean rank.
std::vector<double> rank_transform(const Eigen::VectorXd& x) {
    const long n = x.size();
    std::vector<long> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](long a, long bi) { return x(a) < x(bi); });
    std::vector<double> ranks(static_cast<size_t>(n));
    long i = 0;
    while (i < n) {
        long j = i;
        while (j + 1 < n && x(idx[static_cast<size_t>(j + 1)]) == x(idx[static_cast<size_t>(i)])) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (long k = i; k <= j; ++k) ranks[static_cast<size_t>(idx[static_cast<size_t>(k)])] = r;
        i = j + 1;
    }
    return ranks;
}

// Population Pearson; false when either side is constant.
bool pearson(const std::vector<double>& x, const std::vector<double>& y, double& out) {
    const double n = static_cast<double>(x.size());
    double mx = pop_mean(x), my = pop_mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0 || n < 2) return false;
    out = sxy / std::sqrt(sxx * syy);
    return true;
}

}  // namespace

InputCorrelations mechanism_input_correlations(const Scm& m, int node, const Eigen::MatrixXd& probe,
                                               int grid_resolution, long grid_budget) {
    if (grid_resolution < 2) throw ParamError("mechanism_metrics: grid resolution must be >= 2");
    if (node < 0 || node >= m.n_nodes()) throw NodeNotFoundError("mechanism_input_correlations");
    const auto& ps = m.graph.parents[node];
    const long k = static_cast<long>(ps.size());

    // One axis per parent plus the noise axis (last).
    std::vector<std::vector<double>> axes;
    for (int p : ps) {
        std::vector<double> axis;
        if (m.discrete) {
            for (int v = 0; v < m.cardinality[static_cast<size_t>(p)]; ++v)
                axis.push_back(static_cast<double>(v));
        } else {
            double lo = probe.col(p).minCoeff(), hi = probe.col(p).maxCoeff();
            if (hi <= lo) hi = lo + 1.0;
            for (int g = 0; g < grid_resolution; ++g)
                axis.push_back(lo + (g + 0.5) * (hi - lo) / grid_resolution);
        }
        axes.push_back(std::move(axis));
    }
    {
        const NoiseSpec& ns = m.noise[static_cast<size_t>(node)];
        double lo = ns.bounded() ? ns.a : ns.a - 3.0 * ns.b;
        double hi = ns.bounded() ? ns.b : ns.a + 3.0 * ns.b;
        std::vector<double> axis;
        for (int g = 0; g < grid_resolution; ++g)
            axis.push_back(lo + (g + 0.5) * (hi - lo) / grid_resolution);
        axes.push_back(std::move(axis));
    }

    long points = 1;
    for (const auto& a : axes) {
        if (points > grid_budget / static_cast<long>(a.size()))
            throw BudgetError("mechanism_metrics: grid for node " + std::to_string(node) +
                              " exceeds the budget");
        points *= static_cast<long>(a.size());
    }

    // Materialize the full grid (first axis least significant).
    Eigen::MatrixXd pa(points, k);
    Eigen::VectorXd u(points);
    std::vector<std::vector<double>> axis_cols(axes.size(),
                                               std::vector<double>(static_cast<size_t>(points)));
    long stride = 1;
    for (size_t a = 0; a < axes.size(); ++a) {
        const long sz = static_cast<long>(axes[a].size());
        for (long p = 0; p < points; ++p) {
            double v = axes[a][static_cast<size_t>((p / stride) % sz)];
            axis_cols[a][static_cast<size_t>(p)] = v;
            if (a < static_cast<size_t>(k))
                pa(p, static_cast<long>(a)) = v;
            else
                u(p) = v;
        }
        stride *= sz;
    }
    Eigen::VectorXd out = m.mechanisms[static_cast<size_t>(node)].eval(pa, u);
    std::vector<double> outv(out.data(), out.data() + out.size());

    InputCorrelations res;
    std::vector<double> out_ranks = rank_transform(out);
    for (size_t a = 0; a < axes.size(); ++a) {
        double rp;
        res.pearson.push_back(pearson(axis_cols[a], outv, rp) ? rp : kNaN);
        // Spearman = Pearson on average ranks.
        Eigen::VectorXd axis_vec = Eigen::Map<const Eigen::VectorXd>(axis_cols[a].data(), points);
        auto ar = rank_transform(axis_vec);
        double rs;
        res.spearman.push_back(pearson(ar, out_ranks, rs) ? rs : kNaN);
    }

    // Conditional entropy H(V | PA): child distribution over the noise axis
    // per parent configuration, uniform weight per configuration.
    const long noise_sz = static_cast<long>(axes.back().size());
    const long n_cfg = points / noise_sz;
    double h_total = 0;
    double out_lo = out.minCoeff(), out_hi = out.maxCoeff();
    const int child_bins = m.discrete ? m.cardinality[static_cast<size_t>(node)] : 16;
    double bw = out_hi > out_lo ? (out_hi - out_lo) / child_bins : 1.0;
    for (long cfg = 0; cfg < n_cfg; ++cfg) {
        std::vector<long> counts(static_cast<size_t>(child_bins), 0);
        for (long g = 0; g < noise_sz; ++g) {
            // Noise is the most significant axis, so the grid point index is
            // cfg + g * n_cfg.
            double y = out(cfg + g * n_cfg);
            long bin = m.discrete ? static_cast<long>(y)
                                  : std::clamp(static_cast<long>((y - out_lo) / bw), 0L,
                                               static_cast<long>(child_bins - 1));
            ++counts[static_cast<size_t>(bin)];
        }
        double h = 0;
        for (long cnt : counts) {
            if (cnt == 0) continue;
            double p = static_cast<double>(cnt) / static_cast<double>(noise_sz);
            h -= p * std::log(p);
        }
        h_total += h;
    }
    res.cond_entropy = n_cfg > 0 ? h_total / static_cast<double>(n_cfg) : 0.0;
    return res;
}

MechanismMetricBlock mechanism_metrics(const Scm& m, RngStream& rng, int grid_resolution,
                                       long grid_budget) {
    // Continuous inputs take their observed range from a probe sample.
    Eigen::MatrixXd probe;
    if (!m.discrete) probe = forward_sample(m, 4096, rng).values;

    std::vector<std::vector<double>> pearson_lists, spearman_lists;  // per node, over PA u {U}
    std::vector<double> cond_entropies;
    for (int node = 0; node < m.n_nodes(); ++node) {
        auto c = mechanism_input_correlations(m, node, probe, grid_resolution, grid_budget);
        std::vector<double> rhos, srhos;
        for (double r : c.pearson)
            if (!std::isnan(r)) rhos.push_back(r);
        for (double r : c.spearman)
            if (!std::isnan(r)) srhos.push_back(r);
        if (!rhos.empty()) pearson_lists.push_back(std::move(rhos));
        if (!srhos.empty()) spearman_lists.push_back(std::move(srhos));
        cond_entropies.push_back(c.cond_entropy);
    }

    MechanismMetricBlock b;
    // Per-node averages, then the weighted-variance aggregation over nodes.
    auto aggregate = [](const std::vector<std::vector<double>>& lists, double& mean, double& var) {
        if (lists.empty()) {
            mean = var = kNaN;
            return;
        }
        double acc = 0;
        for (const auto& l : lists) acc += pop_mean(l);
        mean = acc / static_cast<double>(lists.size());
        double vacc = 0;
        for (const auto& l : lists) {
            double inner = 0;
            for (double r : l) inner += (r - mean) * (r - mean);
            vacc += inner / static_cast<double>(l.size());
        }
        var = vacc / static_cast<double>(lists.size());
    };
    aggregate(pearson_lists, b.pearson_mean, b.pearson_var);
    aggregate(spearman_lists, b.spearman_mean, b.spearman_var);
    b.nodes_in_correlations = static_cast<long>(pearson_lists.size());
    b.cond_entropy_mean = pop_mean(cond_entropies);
    b.cond_entropy_var = pop_var(cond_entropies, b.cond_entropy_mean);
    return b;
}

AssumptionReport assumption_report(const Scm& m, const DistributionMetricBlock& dist) {
    AssumptionReport r;
    r.markovian = true;  // construction guarantees independent exogenous noise
    r.causal_sufficiency = m.graph.hidden().empty();
    r.variable_type = m.discrete ? VariableType::Discrete : VariableType::Continuous;
    for (int v : m.graph.observed()) r.cardinalities.push_back(m.cardinality[static_cast<size_t>(v)]);
    r.probe_samples = dist.probe_samples;
    if (m.discrete) {
        r.strong_positivity = dist.joint_min_prob > 0;
        r.weak_positivity = dist.marginal_min_prob > 0;
    }
    return r;
}

MetricsReport compute_metrics(const Scm& m, long n_probe, RngStream& rng, int grid_resolution,
                              long grid_budget, long path_budget) {
    MetricsReport r;
    r.graph = graph_metrics(m.graph, path_budget);
    r.projected = projected_metrics(latent_project(m.graph));
    r.distribution = distribution_metrics(m, n_probe, rng);
    try {
        r.mechanism = mechanism_metrics(m, rng, grid_resolution, grid_budget);
    } catch (const BudgetError& e) {
        r.mechanism_skip_reason = e.what();
    }
    r.assumptions = assumption_report(m, r.distribution);
    return r;
}

namespace {

nlohmann::json opt_bool(const std::optional<bool>& b) {
    if (!b) return nullptr;
    return *b;
}

}  // namespace

nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["in_degree_mean"] = r.graph.in_degree_mean;
    j["in_degree_var"] = r.graph.in_degree_var;
    j["ancestors_mean"] = r.graph.ancestors_mean;
    j["ancestors_var"] = r.graph.ancestors_var;
    j["descendants_mean"] = r.graph.descendants_mean;
    j["descendants_var"] = r.graph.descendants_var;
    j["path_len_mean"] = r.graph.path_len_mean;
    j["path_len_var"] = r.graph.path_len_var;
    j["path_len_max"] = r.graph.path_len_max;
    j["path_count"] = r.graph.path_count;
    j["paths_exact"] = r.graph.paths_exact;
    j["siblings_mean"] = r.projected.siblings_mean;
    j["siblings_var"] = r.projected.siblings_var;
    j["c_components"] = r.projected.c_component_count;
    j["c_comp_size_mean"] = r.projected.c_size_mean;
    j["c_comp_size_var"] = r.projected.c_size_var;
    auto num_or_null = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    j["joint_min_prob"] = num_or_null(r.distribution.joint_min_prob);
    j["zero_prob_fraction"] = num_or_null(r.distribution.zero_prob_fraction);
    j["marginal_min_prob"] = num_or_null(r.distribution.marginal_min_prob);
    j["marginal_min_mean"] = num_or_null(r.distribution.marginal_min_mean);
    j["marginal_min_var"] = num_or_null(r.distribution.marginal_min_var);
    j["joint_l1_uniform"] = num_or_null(r.distribution.joint_l1_uniform);
    j["marginal_l1_mean"] = num_or_null(r.distribution.marginal_l1_mean);
    j["marginal_l1_var"] = num_or_null(r.distribution.marginal_l1_var);
    j["joint_entropy"] = r.distribution.joint_entropy;
    j["distribution_approximate"] = r.distribution.approximate;
    j["domain_cells"] = num_or_null(r.distribution.domain_cells);
    j["probe_samples"] = r.distribution.probe_samples;
    if (r.mechanism) {
        j["pearson_mean"] = num_or_null(r.mechanism->pearson_mean);
        j["pearson_var"] = num_or_null(r.mechanism->pearson_var);
        j["spearman_mean"] = num_or_null(r.mechanism->spearman_mean);
        j["spearman_var"] = num_or_null(r.mechanism->spearman_var);
        j["cond_entropy_mean"] = r.mechanism->cond_entropy_mean;
        j["cond_entropy_var"] = r.mechanism->cond_entropy_var;
    } else {
        j["mechanism_metrics_skipped"] = r.mechanism_skip_reason;
    }
    j["assumptions"] = {{"markovian", r.assumptions.markovian},
                        {"causal_sufficiency", r.assumptions.causal_sufficiency},
                        {"strong_positivity", opt_bool(r.assumptions.strong_positivity)},
                        {"weak_positivity", opt_bool(r.assumptions.weak_positivity)},
                        {"cardinalities", r.assumptions.cardinalities},
                        {"variable_type", to_string(r.assumptions.variable_type)},
                        {"probe_samples", r.assumptions.probe_samples}};
    return j;
}

std::vector<std::string> metric_csv_columns() {
    return {"in_degree_mean",    "in_degree_var",    "ancestors_mean",   "ancestors_var",
            "descendants_mean",  "descendants_var",  "path_len_mean",    "path_len_var",
            "path_len_max",      "siblings_mean",    "siblings_var",     "c_components",
            "c_comp_size_mean",  "c_comp_size_var",  "joint_min_prob",   "zero_prob_fraction",
            "marginal_min_prob", "marginal_min_mean", "marginal_min_var", "joint_l1_uniform",
            "marginal_l1_mean",  "marginal_l1_var",  "joint_entropy",    "pearson_mean",
            "pearson_var",       "spearman_mean",    "spearman_var",     "cond_entropy_mean",
            "cond_entropy_var"};
}

std::vector<double> metric_csv_row(const MetricsReport& r) {
    const auto& m = r.mechanism;
    return {r.graph.in_degree_mean,
            r.graph.in_degree_var,
            r.graph.ancestors_mean,
            r.graph.ancestors_var,
            r.graph.descendants_mean,
            r.graph.descendants_var,
            r.graph.path_len_mean,
            r.graph.path_len_var,
            static_cast<double>(r.graph.path_len_max),
            r.projected.siblings_mean,
            r.projected.siblings_var,
            static_cast<double>(r.projected.c_component_count),
            r.projected.c_size_mean,
            r.projected.c_size_var,
            r.distribution.joint_min_prob,
            r.distribution.zero_prob_fraction,
            r.distribution.marginal_min_prob,
            r.distribution.marginal_min_mean,
            r.distribution.marginal_min_var,
            r.distribution.joint_l1_uniform,
            r.distribution.marginal_l1_mean,
            r.distribution.marginal_l1_var,
            r.distribution.joint_entropy,
            m ? m->pearson_mean : kNaN,
            m ? m->pearson_var : kNaN,
            m ? m->spearman_mean : kNaN,
            m ? m->spearman_var : kNaN,
            m ? m->cond_entropy_mean : kNaN,
            m ? m->cond_entropy_var : kNaN};
}

}  // namespace scmbench
