#pragma once

#include <Eigen/Dense>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "scmbench/graph.hpp"
#include "scmbench/kernels.hpp"
#include "scmbench/mechanisms.hpp"
#include "scmbench/soi.hpp"

namespace scmbench {

struct Provenance {
    std::string soi_hash;
    uint64_t master_seed = 0;
    long scm_index = 0;
};

// A fully materialized structural causal model. Immutable after sampling;
// evaluation is reentrant.
struct Scm {
    CausalGraph graph;
    std::vector<Mechanism> mechanisms;  // one per node
    std::vector<NoiseSpec> noise;       // one independent exogenous per node
    std::vector<int> cardinality;       // per node; 0 marks continuous
    bool discrete = false;
    Provenance provenance;

    int n_nodes() const { return graph.n; }
    void validate() const;
};

// Columns follow node index order; noise kept so counterfactual procedures
// can reuse exact draws.
struct SampleResult {
    Eigen::MatrixXd values;  // n x N
    Eigen::MatrixXd noise;   // n x N
};

// Interventions: per-node forced column (same length as the noise matrix).
using DoMap = std::map<int, Eigen::VectorXd>;

Scm sample_scm(const SpaceOfInterest& soi, uint64_t master_seed, long scm_index);

SampleResult forward_sample(const Scm& m, long n, RngStream& rng);

// Evaluates all nodes in topological order on a fixed noise matrix;
// intervened nodes take their forced values, their mechanisms and noise
// columns are ignored.
Eigen::MatrixXd forward_eval(const Scm& m, const Eigen::MatrixXd& noise,
                             const DoMap& interventions = {});

// Scalar-constant convenience wrapper.
Eigen::MatrixXd forward_eval_do(const Scm& m, const Eigen::MatrixXd& noise,
                                const std::map<int, double>& interventions);

// Noise posterior consistent with a factual observation. Discrete models
// condition exactly; continuous ones weight rows with the kernel. An empty
// posterior comes back with zero rows (NaN ground truth upstream).
struct Abduction {
    Eigen::MatrixXd noise_rows;  // m x N
    Eigen::VectorXd weights;     // normalized, length m
    long candidates = 0;         // rows drawn before conditioning
};

Abduction abduct(const Scm& m, long n_draws, const std::vector<int>& factual_vars,
                 const std::vector<double>& factual_values, const KernelConfig* kernel,
                 RngStream& rng);

Eigen::MatrixXd observed_columns(const Scm& m, const Eigen::MatrixXd& full);
std::vector<std::string> observed_column_names(const Scm& m);

nlohmann::json scm_to_json(const Scm& m);
Scm scm_from_json(const nlohmann::json& j);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
void write_csv(std::ostream& out, const Eigen::MatrixXd& data,
               const std::vector<std::string>& col_names);

}  // namespace scmbench
