#include "scmbench/scm.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

namespace scmbench {

double kernel_weight(KernelKind kind, const Eigen::VectorXd& diff, double h) {
    if (!(h > 0)) throw ParamError("kernel_weight: bandwidth must be > 0");
    if (kind == KernelKind::Gaussian) return std::exp(-diff.squaredNorm() / (2.0 * h * h));
    return diff.size() == 0 || diff.cwiseAbs().maxCoeff() <= h ? 1.0 : 0.0;
}

double KernelConfig::weight(const Eigen::VectorXd& diff) const {
    if (custom) {
        double w = custom(diff, bandwidth);
        if (!(w >= 0)) throw ParamError("custom kernel returned a negative or NaN weight");
        return w;
    }
    return kernel_weight(kind, diff, bandwidth);
}

void Scm::validate() const {
    graph.validate();
    if (static_cast<int>(mechanisms.size()) != graph.n ||
        static_cast<int>(noise.size()) != graph.n ||
        static_cast<int>(cardinality.size()) != graph.n)
        throw ValidationError("scm: per-node array size mismatch");
    for (int i = 0; i < graph.n; ++i) {
        if (mechanisms[i].arity() != static_cast<int>(graph.parents[i].size()))
            throw ValidationError("scm: mechanism arity mismatch at node " + std::to_string(i));
        if (discrete && mechanisms[i].family != MechanismFamily::Tabular)
            throw ValidationError("scm: discrete model with non-tabular mechanism");
    }
}

Scm sample_scm(const SpaceOfInterest& soi, uint64_t master_seed, long scm_index) {
    if (!soi.markovian)
        throw InfeasibleError(
            "semi-Markovian construction is not sampled directly; use hidden variables on a "
            "Markovian model");

    RngStream s_struct(master_seed, "scm/structure", static_cast<uint64_t>(scm_index));

    Scm m;
    m.provenance = {soi.hash(), master_seed, scm_index};
    m.discrete = soi.variable_type == VariableType::Discrete;

    if (soi.predefined_graph) {
        m.graph = *soi.predefined_graph;
        m.graph.validate();
        if (m.graph.hidden().empty() && soi.hidden_proportion > 0)
            assign_hidden(m.graph, soi.hidden_proportion, s_struct);
    } else {
        const int n = static_cast<int>(s_struct.uniform_range(soi.num_nodes.lo, soi.num_nodes.hi));
        const double edges =
            soi.expected_edges.eval(static_cast<double>(n), static_cast<double>(soi.cardinality.lo));
        if (edges < 0) throw DomainError("expected_edges is negative at N=" + std::to_string(n));
        m.graph = sample_dag(n, edges / static_cast<double>(n), s_struct);
        assign_hidden(m.graph, soi.hidden_proportion, s_struct);
    }

    const int n = m.graph.n;
    m.cardinality.assign(n, 0);
    if (m.discrete)
        for (int i = 0; i < n; ++i)
            m.cardinality[i] =
                static_cast<int>(s_struct.uniform_range(soi.cardinality.lo, soi.cardinality.hi));
    m.noise.assign(n, soi.noise_distribution);

    // Explicit mechanisms override sampling (paired with predefined graphs).
    if (soi.mechanism_args.is_object() && soi.mechanism_args.contains("mechanisms")) {
        const auto& arr = soi.mechanism_args["mechanisms"];
        if (!arr.is_array() || static_cast<int>(arr.size()) != n)
            throw ValidationError("mechanism_args.mechanisms: need one entry per node");
        for (const auto& mj : arr) m.mechanisms.push_back(mechanism_from_json(mj));
        m.validate();
        return m;
    }

    for (int i = 0; i < n; ++i) {
        RngStream s_mech(master_seed, "scm/mechanism", static_cast<uint64_t>(scm_index),
                         static_cast<uint64_t>(i));
        if (m.discrete) {
            std::vector<int> parent_cards;
            for (int p : m.graph.parents[i]) parent_cards.push_back(m.cardinality[p]);
            const long regions = soi.noise_regions.eval_int(static_cast<double>(n),
                                                            static_cast<double>(m.cardinality[i]));
            if (regions < 1) throw DomainError("noise_regions must floor to >= 1");
            Mechanism mech;
            mech.family = MechanismFamily::Tabular;
            switch (soi.discrete_sampling) {
                case DiscreteSampling::SampleRejection:
                    mech.tabular = sample_regional_rejection(parent_cards, m.cardinality[i],
                                                             regions, soi.noise_distribution,
                                                             s_mech, soi.table_budget);
                    break;
                case DiscreteSampling::Exhaustive:
                    mech.tabular = sample_regional_exhaustive(parent_cards, m.cardinality[i],
                                                              soi.noise_distribution, s_mech,
                                                              soi.table_budget);
                    break;
                case DiscreteSampling::UnbiasedRandom:
                    mech.tabular = sample_regional_unbiased(parent_cards, m.cardinality[i],
                                                            regions, soi.noise_distribution,
                                                            s_mech, soi.table_budget);
                    break;
            }
            m.mechanisms.push_back(std::move(mech));
        } else {
            m.mechanisms.push_back(sample_continuous_mechanism(
                soi.mechanism_family, static_cast<int>(m.graph.parents[i].size()),
                soi.mechanism_args, soi.noise_mode, s_mech));
        }
    }
    m.validate();
    return m;
}

namespace {

Eigen::MatrixXd draw_noise_matrix(const Scm& m, long n, RngStream& rng) {
    Eigen::MatrixXd u(n, m.n_nodes());
    for (int j = 0; j < m.n_nodes(); ++j) u.col(j) = sample_noise(m.noise[j], n, rng);
    return u;
}

}  // namespace

Eigen::MatrixXd forward_eval(const Scm& m, const Eigen::MatrixXd& noise, const DoMap& interventions) {
    const long n = noise.rows();
    if (noise.cols() != m.n_nodes()) throw ParamError("forward_eval: noise matrix shape mismatch");
    for (const auto& [node, col] : interventions) {
        if (node < 0 || node >= m.n_nodes()) throw NodeNotFoundError("forward_eval: unknown node");
        if (col.size() != n) throw ParamError("forward_eval: intervention column length mismatch");
    }
    Eigen::MatrixXd values(n, m.n_nodes());
    for (int i = 0; i < m.n_nodes(); ++i) {
        auto it = interventions.find(i);
        if (it != interventions.end()) {
            values.col(i) = it->second;
            continue;
        }
        const auto& ps = m.graph.parents[i];
        const Mechanism& mech = m.mechanisms[static_cast<size_t>(i)];
        if (mech.family == MechanismFamily::Linear) {
            // Accumulate straight off the value columns; no parent gather.
            Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
            for (size_t k = 0; k < ps.size(); ++k)
                base += mech.linear.weights(static_cast<long>(k)) * values.col(ps[k]);
            if (mech.noise_mode == NoiseMode::Additive)
                values.col(i) = base + noise.col(i);
            else
                values.col(i) = base.cwiseProduct(noise.col(i));
            continue;
        }
        Eigen::MatrixXd pa(n, static_cast<long>(ps.size()));
        for (size_t k = 0; k < ps.size(); ++k) pa.col(static_cast<long>(k)) = values.col(ps[k]);
        values.col(i) = mech.eval(pa, noise.col(i));
    }
    return values;
}

Eigen::MatrixXd forward_eval_do(const Scm& m, const Eigen::MatrixXd& noise,
                                const std::map<int, double>& interventions) {
    DoMap cols;
    for (const auto& [node, v] : interventions)
        cols[node] = Eigen::VectorXd::Constant(noise.rows(), v);
    return forward_eval(m, noise, cols);
}

SampleResult forward_sample(const Scm& m, long n, RngStream& rng) {
    if (n < 1) throw ParamError("forward_sample: n must be >= 1");
    SampleResult out;
    out.noise = draw_noise_matrix(m, n, rng);
    out.values = forward_eval(m, out.noise);
    return out;
}

Abduction abduct(const Scm& m, long n_draws, const std::vector<int>& factual_vars,
                 const std::vector<double>& factual_values, const KernelConfig* kernel,
                 RngStream& rng) {
    if (factual_vars.size() != factual_values.size())
        throw ParamError("abduct: factual variable/value length mismatch");
    for (int v : factual_vars) {
        if (v < 0 || v >= m.n_nodes()) throw NodeNotFoundError("abduct: unknown factual node");
        if (m.graph.is_hidden[v]) throw ParamError("abduct: factual node is hidden");
    }
    Eigen::MatrixXd u = draw_noise_matrix(m, n_draws, rng);
    Eigen::MatrixXd full = forward_eval(m, u);

    Abduction out;
    out.candidates = n_draws;
    std::vector<long> keep;
    std::vector<double> weights;
    const long f = static_cast<long>(factual_vars.size());
    Eigen::VectorXd diff(f);
    for (long i = 0; i < n_draws; ++i) {
        if (m.discrete || kernel == nullptr) {
            bool match = true;
            for (long k = 0; k < f && match; ++k)
                match = full(i, factual_vars[static_cast<size_t>(k)]) ==
                        factual_values[static_cast<size_t>(k)];
            if (match) {
                keep.push_back(i);
                weights.push_back(1.0);
            }
        } else {
            for (long k = 0; k < f; ++k)
                diff(k) = full(i, factual_vars[static_cast<size_t>(k)]) -
                          factual_values[static_cast<size_t>(k)];
            double w = kernel->weight(diff);
            if (w > 0) {
                keep.push_back(i);
                weights.push_back(w);
            }
        }
    }
    out.noise_rows.resize(static_cast<long>(keep.size()), m.n_nodes());
    out.weights.resize(static_cast<long>(keep.size()));
    double total = 0;
    for (double w : weights) total += w;
    for (size_t r = 0; r < keep.size(); ++r) {
        out.noise_rows.row(static_cast<long>(r)) = u.row(keep[r]);
        out.weights(static_cast<long>(r)) = weights[r] / total;
    }
    return out;
}

Eigen::MatrixXd observed_columns(const Scm& m, const Eigen::MatrixXd& full) {
    const auto obs = m.graph.observed();
    Eigen::MatrixXd out(full.rows(), static_cast<long>(obs.size()));
    for (size_t k = 0; k < obs.size(); ++k) out.col(static_cast<long>(k)) = full.col(obs[k]);
    return out;
}

std::vector<std::string> observed_column_names(const Scm& m) {
    std::vector<std::string> names;
    for (int v : m.graph.observed()) names.push_back("v" + std::to_string(v));
    return names;
}

nlohmann::json scm_to_json(const Scm& m) {
    nlohmann::json j;
    j["graph"] = graph_to_json(m.graph);
    auto mechs = nlohmann::json::array();
    for (const auto& mech : m.mechanisms) mechs.push_back(mechanism_to_json(mech));
    j["mechanisms"] = mechs;
    auto noise = nlohmann::json::array();
    for (const auto& ns : m.noise)
        noise.push_back({{"kind", ns.kind == NoiseSpec::Kind::Uniform ? "uniform" : "normal"},
                         {"args", {hex_double(ns.a), hex_double(ns.b)}}});
    j["noise"] = noise;
    j["cardinality"] = m.cardinality;
    j["discrete"] = m.discrete;
    j["provenance"] = {{"soi_hash", m.provenance.soi_hash},
                       {"master_seed", m.provenance.master_seed},
                       {"scm_index", m.provenance.scm_index}};
    return j;
}

Scm scm_from_json(const nlohmann::json& j) {
    Scm m;
    m.graph = graph_from_json(j.at("graph"));
    for (const auto& mj : j.at("mechanisms")) m.mechanisms.push_back(mechanism_from_json(mj));
    for (const auto& nj : j.at("noise")) {
        NoiseSpec ns;
        ns.kind = nj.at("kind").get<std::string>() == "uniform" ? NoiseSpec::Kind::Uniform
                                                                : NoiseSpec::Kind::Normal;
        ns.a = parse_hex_double(nj.at("args")[0].get<std::string>());
        ns.b = parse_hex_double(nj.at("args")[1].get<std::string>());
        m.noise.push_back(ns);
    }
    m.cardinality = j.at("cardinality").get<std::vector<int>>();
    m.discrete = j.at("discrete").get<bool>();
    if (j.contains("provenance")) {
        m.provenance.soi_hash = j["provenance"].value("soi_hash", "");
        m.provenance.master_seed = j["provenance"].value("master_seed", 0ULL);
        m.provenance.scm_index = j["provenance"].value("scm_index", 0L);
    }
    m.validate();
    return m;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const Eigen::MatrixXd& data,
               const std::vector<std::string>& col_names) {
    if (static_cast<long>(col_names.size()) != data.cols())
        throw ParamError("write_csv: column name count mismatch");
    for (size_t k = 0; k < col_names.size(); ++k)
        out << (k ? "," : "") << col_names[k];
    out << "\n";
    for (long i = 0; i < data.rows(); ++i) {
        for (long k = 0; k < data.cols(); ++k) out << (k ? "," : "") << format_double(data(i, k));
        out << "\n";
    }
}

}  // namespace scmbench
