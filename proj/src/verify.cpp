#include "scmbench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "scmbench/stats.hpp"

namespace scmbench {

void VerificationResult::add(CompositeRecord rec, bool keep_record) {
    auto bump = [](TestCounts& c, char status) {
        ++c.total;
        if (status == 'P') ++c.pass;
        if (status == 'F') ++c.fail;
        if (status == 'S') ++c.skip;
    };
    bump(composite, rec.status);
    bump(composite_by_group[rec.group], rec.status);
    auto& ind = individual;
    auto& indg = individual_by_group[rec.group];
    for (auto* c : {&ind, &indg}) {
        c->total += rec.strata_total;
        c->pass += rec.strata_pass;
        c->fail += rec.strata_fail;
        c->skip += rec.strata_skip;
    }
    if (keep_record) records.push_back(std::move(rec));
}

void VerificationResult::merge(const VerificationResult& other) {
    auto acc = [](TestCounts& a, const TestCounts& b) {
        a.total += b.total;
        a.pass += b.pass;
        a.fail += b.fail;
        a.skip += b.skip;
    };
    acc(composite, other.composite);
    acc(individual, other.individual);
    for (const auto& [k, v] : other.composite_by_group) acc(composite_by_group[k], v);
    for (const auto& [k, v] : other.individual_by_group) acc(individual_by_group[k], v);
    records.insert(records.end(), other.records.begin(), other.records.end());
}

namespace {

nlohmann::json counts_json(const TestCounts& c) {
    return {{"total", c.total}, {"pass", c.pass}, {"fail", c.fail}, {"skip", c.skip}};
}

}  // namespace

nlohmann::json VerificationResult::to_json() const {
    nlohmann::json j;
    j["composite"] = counts_json(composite);
    j["individual"] = counts_json(individual);
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [k, v] : composite_by_group) {
        groups[k] = {{"composite", counts_json(v)},
                     {"individual", counts_json(individual_by_group.at(k))}};
    }
    j["groups"] = groups;
    return j;
}

namespace {

void require_discrete(const Scm& m, const char* what) {
    if (!m.discrete)
        throw InfeasibleError(std::string(what) + ": requires a discrete model");
}

// Applies BH across the tested strata of one composite and fills the record.
void finish_composite(CompositeRecord& rec, const std::vector<double>& pvals, long skipped,
                      double alpha) {
    rec.strata_total = static_cast<long>(pvals.size()) + skipped;
    rec.strata_skip = skipped;
    auto rejects = bh_correct(pvals, alpha);
    long fails = 0;
    for (bool r : rejects) fails += r;
    for (double p : pvals) rec.min_p = std::min(rec.min_p, p);
    rec.strata_fail = fails;
    rec.strata_pass = static_cast<long>(pvals.size()) - fails;
    rec.status = pvals.empty() ? 'S' : (fails > 0 ? 'F' : 'P');
    rec.p_values = pvals;
}

// Enumerates all size-k subsets of pool, invoking fn on each.
template <typename Fn>
void for_each_subset(const std::vector<int>& pool, int k, Fn&& fn) {
    const int n = static_cast<int>(pool.size());
    if (k > n) return;
    std::vector<int> idx(static_cast<size_t>(k));
    std::vector<int> subset(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
    for (;;) {
        for (int i = 0; i < k; ++i) subset[static_cast<size_t>(i)] = pool[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        fn(subset);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++idx[static_cast<size_t>(i)];
        for (int jj = i + 1; jj < k; ++jj) idx[static_cast<size_t>(jj)] = idx[static_cast<size_t>(jj - 1)] + 1;
    }
}

std::string node_list(const std::vector<int>& xs) {
    std::string s = "{";
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s + "}";
}

// Packs a row's values at the given columns into one stratum key.
uint64_t pack_key(const Eigen::MatrixXd& data, long row, const std::vector<int>& cols,
                  const std::vector<int>& cards) {
    uint64_t key = 0;
    for (size_t k = 0; k < cols.size(); ++k)
        key = key * static_cast<uint64_t>(cards[k]) + static_cast<uint64_t>(data(row, cols[k]));
    return key;
}

}  // namespace

VerificationResult verify_markov(const Scm& m, const VerifyOptions& opts, RngStream& rng) {
    require_discrete(m, "verify_markov");
    const int n = m.n_nodes();
    VerificationResult res;
    Eigen::MatrixXd data = forward_sample(m, opts.samples, rng).values;

    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;

    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            std::vector<int> rest;
            for (int v : all)
                if (v != a && v != b) rest.push_back(v);
            const int card_a = m.cardinality[static_cast<size_t>(a)];
            const int card_b = m.cardinality[static_cast<size_t>(b)];
            for (int size = 0; size <= opts.max_cond; ++size) {
                for_each_subset(rest, size, [&](const std::vector<int>& cond) {
                    if (!d_separated(m.graph, {a}, {b}, cond)) return;

                    std::vector<int> cond_cards;
                    for (int c : cond) cond_cards.push_back(m.cardinality[static_cast<size_t>(c)]);
                    // Contingency table per realized stratum of the conditioning set.
                    std::unordered_map<uint64_t, std::vector<std::vector<double>>> tables;
                    for (long i = 0; i < data.rows(); ++i) {
                        uint64_t key = pack_key(data, i, cond, cond_cards);
                        auto it = tables.find(key);
                        if (it == tables.end())
                            it = tables
                                     .emplace(key, std::vector<std::vector<double>>(
                                                       static_cast<size_t>(card_a),
                                                       std::vector<double>(static_cast<size_t>(card_b), 0.0)))
                                     .first;
                        it->second[static_cast<size_t>(data(i, a))][static_cast<size_t>(data(i, b))] += 1.0;
                    }
                    std::vector<double> pvals;
                    long skipped = 0;
                    for (const auto& [_, table] : tables) {
                        if (!koehler_ok_independence(table)) {
                            ++skipped;
                            continue;
                        }
                        auto r = chi2_independence(table);
                        if (!r.valid) {
                            ++skipped;
                            continue;
                        }
                        pvals.push_back(r.p_value);
                    }
                    CompositeRecord rec;
                    rec.level = "l1";
                    rec.group = "cond_size=" + std::to_string(size);
                    rec.variables = "(" + std::to_string(a) + " _||_ " + std::to_string(b) +
                                    " | " + node_list(cond) + ")";
                    finish_composite(rec, pvals, skipped, opts.alpha);
                    res.add(std::move(rec), opts.keep_records);
                });
            }
        }
    }
    return res;
}

namespace {

// Per-stratum comparison of Y's conditional distribution between two
// interventional datasets. Both sides are finite samples, so each stratum
// uses the two-sample Pearson chi-squared (the independence test on the
// stacked 2 x |Omega_Y| count table); a goodness-of-fit against the sampled
// reference would ignore the reference's own noise and over-reject.
struct CompareSide {
    const Eigen::MatrixXd* data = nullptr;
    std::vector<int> stratum_cols;   // columns whose realized values define strata
    std::vector<int> extra_cols;     // side-specific fixed conditioning columns
    std::vector<double> extra_vals;  // required values for extra_cols
};

void compare_strata(const Scm& m, int y, const CompareSide& a_side, const CompareSide& b_side,
                    double alpha, CompositeRecord& rec) {
    const int card_y = m.cardinality[static_cast<size_t>(y)];
    std::vector<int> cards;
    for (int c : a_side.stratum_cols) cards.push_back(m.cardinality[static_cast<size_t>(c)]);

    auto collect = [&](const CompareSide& side) {
        std::unordered_map<uint64_t, std::vector<double>> counts;
        const Eigen::MatrixXd& d = *side.data;
        for (long i = 0; i < d.rows(); ++i) {
            bool ok = true;
            for (size_t k = 0; k < side.extra_cols.size() && ok; ++k)
                ok = d(i, side.extra_cols[k]) == side.extra_vals[k];
            if (!ok) continue;
            uint64_t key = pack_key(d, i, side.stratum_cols, cards);
            auto it = counts.find(key);
            if (it == counts.end())
                it = counts.emplace(key, std::vector<double>(static_cast<size_t>(card_y), 0.0))
                         .first;
            it->second[static_cast<size_t>(d(i, y))] += 1.0;
        }
        return counts;
    };
    auto obs = collect(a_side);
    auto ref = collect(b_side);

    std::vector<double> pvals;
    long skipped = 0;
    for (const auto& [key, observed] : obs) {
        auto it = ref.find(key);
        if (it == ref.end()) {
            ++skipped;  // reference side never realized this stratum
            continue;
        }
        std::vector<std::vector<double>> table = {observed, it->second};
        if (!koehler_ok_independence(table)) {
            ++skipped;
            continue;
        }
        auto r = chi2_independence(table);
        if (!r.valid) {
            ++skipped;
            continue;
        }
        pvals.push_back(r.p_value);
    }
    finish_composite(rec, pvals, skipped, alpha);
}

}  // namespace

VerificationResult verify_do_calculus(const Scm& m, const VerifyOptions& opts, RngStream& rng) {
    require_discrete(m, "verify_do_calculus");
    const int n = m.n_nodes();
    VerificationResult res;
    if (n < 4) return res;  // univariate tuples need four distinct nodes

    // Realizable intervention values come from a support sample.
    Eigen::MatrixXd support =
        forward_sample(m, std::min<long>(opts.samples, 10000), rng).values;
    auto draw_value = [&](int node) {
        return support(rng.uniform_int(support.rows()), node);
    };
    auto draw_dataset = [&](const std::map<int, double>& interventions) {
        Eigen::MatrixXd u(opts.samples, n);
        for (int j = 0; j < n; ++j) u.col(j) = sample_noise(m.noise[j], opts.samples, rng);
        return forward_eval_do(m, u, interventions);
    };

    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                for (int w = 0; w < n; ++w) {
                    if (x == y || x == z || x == w || y == z || y == w || z == w) continue;
                    const std::vector<int> cond = {x, w};

                    // Rule 1: insertion/deletion of observation.
                    if (d_separated(graph_surgery(m.graph, {x}, {}), {y}, {z}, cond)) {
                        double xv = draw_value(x);
                        Eigen::MatrixXd a = draw_dataset({{x, xv}});
                        Eigen::MatrixXd b = draw_dataset({{x, xv}});
                        CompositeRecord rec;
                        rec.level = "l2";
                        rec.group = "rule1";
                        rec.variables = "X=" + std::to_string(x) + " Y=" + std::to_string(y) +
                                        " Z=" + std::to_string(z) + " W=" + std::to_string(w);
                        // One two-sample test per realized (w, z) stratum of
                        // side A against side B conditioned on W=w only.
                        const int card_w = m.cardinality[static_cast<size_t>(w)];
                        const int card_z = m.cardinality[static_cast<size_t>(z)];
                        const int card_y = m.cardinality[static_cast<size_t>(y)];
                        std::vector<double> pvals;
                        long skipped = 0;
                        for (int wv = 0; wv < card_w; ++wv) {
                            std::vector<double> refc(static_cast<size_t>(card_y), 0.0);
                            bool ref_seen = false;
                            for (long i = 0; i < b.rows(); ++i)
                                if (b(i, w) == wv) {
                                    refc[static_cast<size_t>(b(i, y))] += 1.0;
                                    ref_seen = true;
                                }
                            for (int zv = 0; zv < card_z; ++zv) {
                                std::vector<double> obsc(static_cast<size_t>(card_y), 0.0);
                                double total = 0;
                                for (long i = 0; i < a.rows(); ++i)
                                    if (a(i, w) == wv && a(i, z) == zv) {
                                        obsc[static_cast<size_t>(a(i, y))] += 1.0;
                                        total += 1.0;
                                    }
                                if (total == 0) continue;  // unrealized stratum
                                std::vector<std::vector<double>> table = {obsc, refc};
                                if (!ref_seen || !koehler_ok_independence(table)) {
                                    ++skipped;
                                    continue;
                                }
                                auto r = chi2_independence(table);
                                if (!r.valid) {
                                    ++skipped;
                                    continue;
                                }
                                pvals.push_back(r.p_value);
                            }
                        }
                        finish_composite(rec, pvals, skipped, opts.alpha);
                        res.add(std::move(rec), opts.keep_records);
                    }

                    // Rule 2: action/observation exchange.
                    if (d_separated(graph_surgery(m.graph, {x}, {z}), {y}, {z}, cond)) {
                        double xv = draw_value(x);
                        double zv = draw_value(z);
                        Eigen::MatrixXd a = draw_dataset({{x, xv}, {z, zv}});
                        Eigen::MatrixXd b = draw_dataset({{x, xv}});
                        CompositeRecord rec;
                        rec.level = "l2";
                        rec.group = "rule2";
                        rec.variables = "X=" + std::to_string(x) + " Y=" + std::to_string(y) +
                                        " Z=" + std::to_string(z) + " W=" + std::to_string(w);
                        CompareSide sa{&a, {w}, {}, {}};
                        CompareSide sb{&b, {w}, {z}, {zv}};
                        compare_strata(m, y, sa, sb, opts.alpha, rec);
                        res.add(std::move(rec), opts.keep_records);
                    }

                    // Rule 3: insertion/deletion of action; Z(W) drops Z when
                    // it is an ancestor of W in the X-mutilated graph.
                    {
                        CausalGraph gx = graph_surgery(m.graph, {x}, {});
                        auto anc_w = ancestors(gx, {w});
                        bool z_is_anc = std::binary_search(anc_w.begin(), anc_w.end(), z);
                        std::vector<int> cut = {x};
                        if (!z_is_anc) cut.push_back(z);
                        if (d_separated(graph_surgery(m.graph, cut, {}), {y}, {z}, cond)) {
                            double xv = draw_value(x);
                            double zv = draw_value(z);
                            Eigen::MatrixXd a = draw_dataset({{x, xv}, {z, zv}});
                            Eigen::MatrixXd b = draw_dataset({{x, xv}});
                            CompositeRecord rec;
                            rec.level = "l2";
                            rec.group = "rule3";
                            rec.variables = "X=" + std::to_string(x) + " Y=" + std::to_string(y) +
                                            " Z=" + std::to_string(z) + " W=" + std::to_string(w);
                            CompareSide sa{&a, {w}, {}, {}};
                            CompareSide sb{&b, {w}, {}, {}};
                            compare_strata(m, y, sa, sb, opts.alpha, rec);
                            res.add(std::move(rec), opts.keep_records);
                        }
                    }
                }
    return res;
}

VerificationResult verify_ctf_axioms(const Scm& m, const VerifyOptions& opts, RngStream& rng) {
    const int n = m.n_nodes();
    if (n < 3) throw ParamError("verify_ctf_axioms: needs at least 3 endogenous variables");
    VerificationResult res;

    Eigen::MatrixXd support = forward_sample(m, 1000, rng).values;

    for (int tuple = 0; tuple < opts.axiom_tuples; ++tuple) {
        const long size = rng.uniform_range(3, n);
        auto subset = rng.sample_without_replacement(n, static_cast<int>(size));
        auto cuts = rng.sample_without_replacement(static_cast<int>(size) - 1, 2);
        long c1 = 1 + std::min(cuts[0], cuts[1]);
        long c2 = 1 + std::max(cuts[0], cuts[1]);
        std::vector<int> xs(subset.begin(), subset.begin() + c1);
        std::vector<int> ys(subset.begin() + c1, subset.begin() + c2);
        std::vector<int> ws(subset.begin() + c2, subset.end());

        Eigen::MatrixXd u(opts.noise_draws, n);
        for (int j = 0; j < n; ++j) u.col(j) = sample_noise(m.noise[j], opts.noise_draws, rng);

        const long row = rng.uniform_int(support.rows());
        std::map<int, double> do_x;
        for (int v : xs) do_x[v] = support(row, v);

        const std::string desc = "X=" + node_list(xs) + " Y=" + node_list(ys) +
                                 " W=" + node_list(ws);

        Eigen::MatrixXd base = forward_eval_do(m, u, do_x);

        // Composition: forcing W to its own do(X=x) values must leave Y
        // untouched, row by row, exactly.
        {
            DoMap both;
            for (const auto& [v, val] : do_x) both[v] = Eigen::VectorXd::Constant(u.rows(), val);
            for (int v : ws) both[v] = base.col(v);
            Eigen::MatrixXd comp = forward_eval(m, u, both);
            long checks = 0, fails = 0;
            for (int yv : ys)
                for (long i = 0; i < u.rows(); ++i) {
                    ++checks;
                    if (comp(i, yv) != base(i, yv)) ++fails;
                }
            CompositeRecord rec;
            rec.level = "l3";
            rec.group = "composition";
            rec.variables = desc;
            rec.strata_total = checks;
            rec.strata_fail = fails;
            rec.strata_pass = checks - fails;
            rec.status = fails > 0 ? 'F' : 'P';
            res.add(std::move(rec), opts.keep_records);
        }

        // Effectiveness: intervened variables must read back their forced
        // values everywhere.
        {
            std::map<int, double> both = do_x;
            for (int v : ws) both[v] = support(row, v);
            Eigen::MatrixXd eff = forward_eval_do(m, u, both);
            long checks = 0, fails = 0;
            for (const auto& [v, val] : both)
                for (long i = 0; i < u.rows(); ++i) {
                    ++checks;
                    if (eff(i, v) != val) ++fails;
                }
            CompositeRecord rec;
            rec.level = "l3";
            rec.group = "effectiveness";
            rec.variables = desc;
            rec.strata_total = checks;
            rec.strata_fail = fails;
            rec.strata_pass = checks - fails;
            rec.status = fails > 0 ? 'F' : 'P';
            res.add(std::move(rec), opts.keep_records);
        }

        // Reversibility on one (Y, W) variable pair. Discrete models
        // enumerate every candidate (w, y) value pair; the premise rows are
        // those where forcing w yields y and forcing y yields w.
        {
            const int yv = ys.front();
            const int wv = ws.front();
            long checks = 0, fails = 0;
            if (m.discrete) {
                const int cw = m.cardinality[static_cast<size_t>(wv)];
                const int cy = m.cardinality[static_cast<size_t>(yv)];
                std::vector<Eigen::VectorXd> y_under_w, w_under_y;
                for (int wval = 0; wval < cw; ++wval) {
                    auto d = do_x;
                    d[wv] = wval;
                    y_under_w.push_back(forward_eval_do(m, u, d).col(yv));
                }
                for (int yval = 0; yval < cy; ++yval) {
                    auto d = do_x;
                    d[yv] = yval;
                    w_under_y.push_back(forward_eval_do(m, u, d).col(wv));
                }
                for (int wval = 0; wval < cw; ++wval)
                    for (int yval = 0; yval < cy; ++yval)
                        for (long i = 0; i < u.rows(); ++i) {
                            if (y_under_w[static_cast<size_t>(wval)](i) != yval ||
                                w_under_y[static_cast<size_t>(yval)](i) != wval)
                                continue;
                            ++checks;
                            if (base(i, yv) != static_cast<double>(yval)) ++fails;
                        }
            } else {
                // Constructive premise: w* = W_{do x}(u), y* = Y under
                // do(X, W=w*); rows where forcing Y=y* returns w* satisfy
                // the premise and must keep Y_{do x}(u) = y*.
                DoMap dw;
                for (const auto& [v, val] : do_x) dw[v] = Eigen::VectorXd::Constant(u.rows(), val);
                dw[wv] = base.col(wv);
                Eigen::VectorXd y_star = forward_eval(m, u, dw).col(yv);
                DoMap dy;
                for (const auto& [v, val] : do_x) dy[v] = Eigen::VectorXd::Constant(u.rows(), val);
                dy[yv] = y_star;
                Eigen::VectorXd w_back = forward_eval(m, u, dy).col(wv);
                for (long i = 0; i < u.rows(); ++i) {
                    if (w_back(i) != base(i, wv)) continue;
                    ++checks;
                    if (base(i, yv) != y_star(i)) ++fails;
                }
            }
            CompositeRecord rec;
            rec.level = "l3";
            rec.group = "reversibility";
            rec.variables = desc;
            rec.strata_total = checks;
            rec.strata_fail = fails;
            rec.strata_pass = checks - fails;
            rec.status = checks == 0 ? 'S' : (fails > 0 ? 'F' : 'P');
            res.add(std::move(rec), opts.keep_records);
        }
    }
    return res;
}

}  // namespace scmbench
