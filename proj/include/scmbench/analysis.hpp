#pragma once

#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "scmbench/scm.hpp"

namespace scmbench {

struct GraphMetricBlock {
    double in_degree_mean = 0, in_degree_var = 0;
    double ancestors_mean = 0, ancestors_var = 0;
    double descendants_mean = 0, descendants_var = 0;
    double path_len_mean = 0, path_len_var = 0;
    long path_len_max = 0;
    long path_count = 0;
    bool paths_exact = true;  // false once the enumeration budget is hit
};

struct ProjectedMetricBlock {
    double siblings_mean = 0, siblings_var = 0;
    long c_component_count = 0;
    double c_size_mean = 0, c_size_var = 0;
};

struct DistributionMetricBlock {
    double joint_min_prob = 0;
    double zero_prob_fraction = 0;
    double marginal_min_prob = 0;
    double marginal_min_mean = 0, marginal_min_var = 0;
    double joint_l1_uniform = 0;
    double marginal_l1_mean = 0, marginal_l1_var = 0;
    double joint_entropy = 0;  // nats
    double domain_cells = 0;   // |Omega_{V_O}|
    long probe_samples = 0;
    bool approximate = false;  // continuous models: binned entropy only
};

struct MechanismMetricBlock {
    double pearson_mean = 0, pearson_var = 0;
    double spearman_mean = 0, spearman_var = 0;
    double cond_entropy_mean = 0, cond_entropy_var = 0;
    long nodes_in_correlations = 0;
};

struct AssumptionReport {
    bool markovian = true;
    bool causal_sufficiency = true;
    std::optional<bool> strong_positivity;  // unset for continuous models
    std::optional<bool> weak_positivity;
    std::vector<int> cardinalities;
    VariableType variable_type = VariableType::Continuous;
    long probe_samples = 0;
};

GraphMetricBlock graph_metrics(const CausalGraph& g, long path_budget = 1000000);
ProjectedMetricBlock projected_metrics(const Admg& a);

// Empirical probabilities over the observed variables from n forward
// samples. Discrete models use the exact cell domain; continuous ones get a
// binned entropy estimate only, flagged approximate.
DistributionMetricBlock distribution_metrics(const Scm& m, long n_probe, RngStream& rng);

// Per-axis correlations of one node's mechanism over its input grid: one
// entry per parent, plus the noise axis last. Degenerate pairs (constant
// axis or constant output) are NaN.
struct InputCorrelations {
    std::vector<double> pearson;
    std::vector<double> spearman;
    double cond_entropy = 0.0;
};

InputCorrelations mechanism_input_correlations(const Scm& m, int node, const Eigen::MatrixXd& probe,
                                               int grid_resolution, long grid_budget);

// Mechanism image analysis over the cartesian product of input domains (the
// noise axis is discretized). Deliberately not the entailed distribution.
MechanismMetricBlock mechanism_metrics(const Scm& m, RngStream& rng, int grid_resolution = 16,
                                       long grid_budget = 1000000);

AssumptionReport assumption_report(const Scm& m, const DistributionMetricBlock& dist);

// All blocks for one SCM; the mechanism block is omitted (with a note) when
// its grid exceeds the budget.
struct MetricsReport {
    GraphMetricBlock graph;
    ProjectedMetricBlock projected;
    DistributionMetricBlock distribution;
    std::optional<MechanismMetricBlock> mechanism;
    std::string mechanism_skip_reason;
    AssumptionReport assumptions;
};

MetricsReport compute_metrics(const Scm& m, long n_probe, RngStream& rng, int grid_resolution = 16,
                              long grid_budget = 1000000, long path_budget = 1000000);

nlohmann::json metrics_to_json(const MetricsReport& r);

// Stable column order for the metrics CSV matrix.
std::vector<std::string> metric_csv_columns();
std::vector<double> metric_csv_row(const MetricsReport& r);

}  // namespace scmbench
