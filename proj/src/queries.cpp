#include "scmbench/queries.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace scmbench {

long SupportData::col_of(int node) const {
    auto it = std::lower_bound(node_ids.begin(), node_ids.end(), node);
    if (it == node_ids.end() || *it != node)
        throw NodeNotFoundError("support data: node not observed");
    return static_cast<long>(it - node_ids.begin());
}

SupportData make_support(const Scm& m, long rows, RngStream& rng) {
    SupportData s;
    s.node_ids = m.graph.observed();
    s.data = observed_columns(m, forward_sample(m, rows, rng).values);
    return s;
}

Query sample_query(QueryKind kind, const Scm& m, const SupportData& support, RngStream& rng) {
    const auto obs = m.graph.observed();
    const long n_obs = static_cast<long>(obs.size());
    const long min_obs = kind == QueryKind::Cate ? 3 : 2;
    if (n_obs < min_obs)
        throw ParamError("sample_query: needs at least " + std::to_string(min_obs) +
                         " observed variables");
    if (support.data.rows() < 1) throw ParamError("sample_query: empty support data");

    Query q;
    q.kind = kind;
    q.treatment = obs[static_cast<size_t>(rng.uniform_int(n_obs))];
    q.outcome = obs[static_cast<size_t>(rng.uniform_int(n_obs))];

    auto support_row = [&]() { return rng.uniform_int(support.data.rows()); };
    const long t_col = support.col_of(q.treatment);
    q.t_value = support.data(support_row(), t_col);
    q.c_value = support.data(support_row(), t_col);

    if (kind == QueryKind::Cate) {
        std::vector<int> pool;
        for (int v : obs)
            if (v != q.treatment && v != q.outcome) pool.push_back(v);
        const long d_max = static_cast<long>(pool.size());  // |V_o|-2, or |V_o|-1 when T == Y
        const long d_x = rng.uniform_range(1, d_max);
        auto idx = rng.sample_without_replacement(static_cast<int>(pool.size()),
                                                  static_cast<int>(d_x));
        std::sort(idx.begin(), idx.end());
        const long row = support_row();
        for (int i : idx) {
            q.covariates.push_back(pool[static_cast<size_t>(i)]);
            q.covariate_values.push_back(support.data(row, support.col_of(pool[static_cast<size_t>(i)])));
        }
    } else if (kind == QueryKind::CtfTe) {
        const long d_f = rng.uniform_range(1, n_obs);
        auto idx = rng.sample_without_replacement(static_cast<int>(n_obs), static_cast<int>(d_f));
        std::sort(idx.begin(), idx.end());
        const long row = support_row();
        for (int i : idx) {
            q.factual_vars.push_back(obs[static_cast<size_t>(i)]);
            q.factual_values.push_back(support.data(row, static_cast<long>(i)));
        }
    }
    return q;
}

void validate_query(const Scm& m, const Query& q) {
    auto check_observed = [&](int v, const char* what) {
        if (v < 0 || v >= m.n_nodes())
            throw NodeNotFoundError(std::string("query: unknown node for ") + what);
        if (m.graph.is_hidden[v])
            throw ValidationError(std::string("query: ") + what + " must be observed");
    };
    check_observed(q.treatment, "treatment");
    check_observed(q.outcome, "outcome");
    auto check_value = [&](int node, double v, const char* what) {
        if (m.discrete) {
            long x = static_cast<long>(v);
            if (static_cast<double>(x) != v || x < 0 || x >= m.cardinality[static_cast<size_t>(node)])
                throw ValidationError(std::string("query: ") + what +
                                      " value outside the variable domain");
        }
    };
    check_value(q.treatment, q.t_value, "treatment");
    check_value(q.treatment, q.c_value, "control");

    auto check_distinct = [](const std::vector<int>& xs, const char* what) {
        std::vector<int> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError(std::string("query: duplicate node in ") + what);
    };
    if (q.kind == QueryKind::Cate) {
        if (q.covariates.empty()) throw ValidationError("query: cate requires covariates");
        if (q.covariates.size() != q.covariate_values.size())
            throw ValidationError("query: covariate name/value length mismatch");
        check_distinct(q.covariates, "X");
        for (size_t k = 0; k < q.covariates.size(); ++k) {
            check_observed(q.covariates[k], "covariate");
            if (q.covariates[k] == q.treatment || q.covariates[k] == q.outcome)
                throw ValidationError("query: covariates must exclude treatment and outcome");
            check_value(q.covariates[k], q.covariate_values[k], "covariate");
        }
    }
    if (q.kind == QueryKind::CtfTe) {
        if (q.factual_vars.empty() && !q.factual_values.empty())
            throw ValidationError("query: factual name/value length mismatch");
        if (q.factual_vars.size() != q.factual_values.size())
            throw ValidationError("query: factual name/value length mismatch");
        check_distinct(q.factual_vars, "V_F");
        for (size_t k = 0; k < q.factual_vars.size(); ++k) {
            check_observed(q.factual_vars[k], "factual");
            check_value(q.factual_vars[k], q.factual_values[k], "factual");
        }
        if (q.outcome_value) check_value(q.outcome, *q.outcome_value, "outcome");
    }
}

namespace {

// Both do-arms on one shared noise stream. Only the treatment and its
// descendants can differ across arms, so the control arm stores just those
// columns and reads everything else from the treatment arm. Noise is drawn
// per node in index order, exactly as a full upfront matrix would be.
struct PairedArms {
    Eigen::MatrixXd arm_t;                      // n x N
    std::map<int, Eigen::VectorXd> c_diff;      // treatment + affected descendants

    Eigen::Ref<const Eigen::VectorXd> c_col(int i) const {
        auto it = c_diff.find(i);
        if (it != c_diff.end()) return it->second;
        return arm_t.col(i);
    }
};

PairedArms paired_eval(const Scm& m, long n, int treatment, double t_value, double c_value,
                       RngStream& rng) {
    const int nn = m.n_nodes();
    std::vector<uint8_t> differs(static_cast<size_t>(nn), 0);
    differs[static_cast<size_t>(treatment)] = 1;
    for (int d : descendants(m.graph, {treatment})) differs[static_cast<size_t>(d)] = 1;

    PairedArms out;
    out.arm_t.resize(n, nn);
    Eigen::VectorXd u(n);
    Eigen::MatrixXd pa_t, pa_c;
    for (int i = 0; i < nn; ++i) {
        u = sample_noise(m.noise[static_cast<size_t>(i)], n, rng);
        if (i == treatment) {
            out.arm_t.col(i).setConstant(t_value);
            out.c_diff[i] = Eigen::VectorXd::Constant(n, c_value);
            continue;
        }
        const auto& ps = m.graph.parents[i];
        pa_t.resize(n, static_cast<long>(ps.size()));
        for (size_t k = 0; k < ps.size(); ++k) pa_t.col(static_cast<long>(k)) = out.arm_t.col(ps[k]);
        out.arm_t.col(i) = m.mechanisms[static_cast<size_t>(i)].eval(pa_t, u);
        if (differs[static_cast<size_t>(i)]) {
            pa_c.resize(n, static_cast<long>(ps.size()));
            for (size_t k = 0; k < ps.size(); ++k)
                pa_c.col(static_cast<long>(k)) = out.c_col(ps[k]);
            out.c_diff[i] = m.mechanisms[static_cast<size_t>(i)].eval(pa_c, u);
        }
    }
    return out;
}

// Control arm over an existing noise matrix (counterfactual posteriors):
// copy the treatment arm and recompute the affected columns in index order.
Eigen::MatrixXd paired_arm(const Scm& m, const Eigen::MatrixXd& noise,
                           const Eigen::MatrixXd& first_arm, int treatment, double value) {
    Eigen::MatrixXd arm = first_arm;
    arm.col(treatment).setConstant(value);
    const auto desc = descendants(m.graph, {treatment});
    for (int i : desc) {
        const auto& ps = m.graph.parents[i];
        Eigen::MatrixXd pa(arm.rows(), static_cast<long>(ps.size()));
        for (size_t k = 0; k < ps.size(); ++k) pa.col(static_cast<long>(k)) = arm.col(ps[k]);
        arm.col(i) = m.mechanisms[static_cast<size_t>(i)].eval(pa, noise.col(i));
    }
    return arm;
}

// Weighted mean of one arm's outcome over rows passing its covariate
// condition. Returns false when the stratum carries no mass.
bool stratum_mean(Eigen::Ref<const Eigen::VectorXd> y,
                  const std::vector<Eigen::Ref<const Eigen::VectorXd>>& covs, const Query& q,
                  bool discrete, const KernelConfig& kernel, double& mean_out, double& se_out) {
    const long n = y.size();
    const long k = static_cast<long>(covs.size());
    double wsum = 0, acc = 0;
    std::vector<double> w(static_cast<size_t>(n), 0.0);
    Eigen::VectorXd diff(k);
    for (long i = 0; i < n; ++i) {
        double wi;
        if (discrete) {
            bool match = true;
            for (long j = 0; j < k && match; ++j)
                match = covs[static_cast<size_t>(j)](i) == q.covariate_values[static_cast<size_t>(j)];
            wi = match ? 1.0 : 0.0;
        } else {
            for (long j = 0; j < k; ++j)
                diff(j) = covs[static_cast<size_t>(j)](i) - q.covariate_values[static_cast<size_t>(j)];
            wi = kernel.weight(diff);
        }
        w[static_cast<size_t>(i)] = wi;
        wsum += wi;
        acc += wi * y(i);
    }
    if (wsum <= 0) return false;
    mean_out = acc / wsum;
    double var = 0;
    for (long i = 0; i < n; ++i) {
        double wi = w[static_cast<size_t>(i)] / wsum;
        double d = y(i) - mean_out;
        var += wi * wi * d * d;
    }
    se_out = std::sqrt(var);
    return true;
}

}  // namespace

GroundTruth estimate_ate(const Scm& m, const Query& q, long n, RngStream& rng) {
    validate_query(m, q);
    PairedArms arms = paired_eval(m, n, q.treatment, q.t_value, q.c_value, rng);
    Eigen::VectorXd dy = arms.arm_t.col(q.outcome) - arms.c_col(q.outcome);
    GroundTruth gt;
    gt.value = dy.mean();
    gt.std_error = std::sqrt((dy.array() - gt.value).square().sum()) / static_cast<double>(n);
    gt.n_samples = n;
    return gt;
}

GroundTruth estimate_cate(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                          RngStream& rng) {
    validate_query(m, q);
    PairedArms arms = paired_eval(m, n, q.treatment, q.t_value, q.c_value, rng);
    std::vector<Eigen::Ref<const Eigen::VectorXd>> covs_t, covs_c;
    for (int x : q.covariates) {
        covs_t.push_back(arms.arm_t.col(x));
        covs_c.push_back(arms.c_col(x));
    }
    GroundTruth gt;
    gt.n_samples = n;
    double mt, st, mc, sc;
    if (!stratum_mean(arms.arm_t.col(q.outcome), covs_t, q, m.discrete, kernel, mt, st) ||
        !stratum_mean(arms.c_col(q.outcome), covs_c, q, m.discrete, kernel, mc, sc))
        return gt;  // empty stratum: NaN
    gt.value = mt - mc;
    gt.std_error = std::sqrt(st * st + sc * sc);
    return gt;
}

GroundTruth estimate_ctf_te(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                            RngStream& rng) {
    validate_query(m, q);
    Abduction ab = abduct(m, n, q.factual_vars, q.factual_values,
                          m.discrete ? nullptr : &kernel, rng);
    GroundTruth gt;
    gt.n_samples = n;
    gt.posterior_size = ab.noise_rows.rows();
    if (ab.noise_rows.rows() == 0) return gt;  // empty posterior: NaN
    Eigen::MatrixXd arm_t = forward_eval_do(m, ab.noise_rows, {{q.treatment, q.t_value}});
    Eigen::MatrixXd arm_c = paired_arm(m, ab.noise_rows, arm_t, q.treatment, q.c_value);
    Eigen::VectorXd dy;
    if (q.outcome_value) {
        // Probability form: difference of P(Y = y | .) across the arms.
        dy = ((arm_t.col(q.outcome).array() == *q.outcome_value).cast<double>() -
              (arm_c.col(q.outcome).array() == *q.outcome_value).cast<double>())
                 .matrix();
    } else {
        dy = arm_t.col(q.outcome) - arm_c.col(q.outcome);
    }
    gt.value = ab.weights.dot(dy);
    double var = 0;
    for (long i = 0; i < dy.size(); ++i) {
        double d = dy(i) - gt.value;
        var += ab.weights(i) * ab.weights(i) * d * d;
    }
    gt.std_error = std::sqrt(var);
    return gt;
}

GroundTruth estimate_query(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                           RngStream& rng) {
    switch (q.kind) {
        case QueryKind::Ate: return estimate_ate(m, q, n, rng);
        case QueryKind::Cate: return estimate_cate(m, q, n, kernel, rng);
        case QueryKind::CtfTe: return estimate_ctf_te(m, q, n, kernel, rng);
    }
    throw ParamError("estimate_query: unknown query kind");
}

Query query_from_spec_json(const nlohmann::json& spec) {
    Query q;
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "ate")
        q.kind = QueryKind::Ate;
    else if (kind == "cate")
        q.kind = QueryKind::Cate;
    else if (kind == "ctf_te")
        q.kind = QueryKind::CtfTe;
    else
        throw ValidationError("query spec: unknown kind '" + kind + "'");
    q.treatment = spec.at("T").get<int>();
    q.outcome = spec.at("Y").get<int>();
    q.t_value = spec.at("t").get<double>();
    q.c_value = spec.at("c").get<double>();
    if (spec.contains("X")) q.covariates = spec["X"].get<std::vector<int>>();
    if (spec.contains("x")) q.covariate_values = spec["x"].get<std::vector<double>>();
    if (spec.contains("V_F")) q.factual_vars = spec["V_F"].get<std::vector<int>>();
    if (spec.contains("v_F")) q.factual_values = spec["v_F"].get<std::vector<double>>();
    if (spec.contains("y")) q.outcome_value = spec["y"].get<double>();
    return q;
}

nlohmann::json query_to_json(const Query& q, const GroundTruth& gt, long id, long n_estimation) {
    nlohmann::json j;
    j["id"] = id;
    j["kind"] = to_string(q.kind);
    j["T"] = q.treatment;
    j["Y"] = q.outcome;
    if (q.kind == QueryKind::Cate) {
        j["X"] = q.covariates;
        j["x"] = q.covariate_values;
    }
    if (q.kind == QueryKind::CtfTe) {
        j["V_F"] = q.factual_vars;
        j["v_F"] = q.factual_values;
        if (q.outcome_value) j["y"] = *q.outcome_value;
    }
    j["t"] = q.t_value;
    j["c"] = q.c_value;
    if (gt.is_nan())
        j["ground_truth"] = nullptr;
    else
        j["ground_truth"] = gt.value;
    j["n_estimation"] = n_estimation;
    j["nan"] = gt.is_nan();
    return j;
}

}  // namespace scmbench
