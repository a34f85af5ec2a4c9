#pragma once

#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "scmbench/scm.hpp"

namespace scmbench {

struct Query {
    QueryKind kind = QueryKind::Ate;
    int treatment = 0;
    int outcome = 0;
    double t_value = 0.0;
    double c_value = 0.0;
    std::vector<int> covariates;           // CATE
    std::vector<double> covariate_values;  // CATE
    std::vector<int> factual_vars;         // Ctf-TE
    std::vector<double> factual_values;    // Ctf-TE
    std::optional<double> outcome_value;   // probability-form Ctf-TE only
};

struct GroundTruth {
    double value = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    long n_samples = 0;
    long posterior_size = 0;

    bool is_nan() const { return std::isnan(value); }
};

// Rows of jointly realized observed values; query realizations draw from
// here so they always lie in the model's effective support.
struct SupportData {
    Eigen::MatrixXd data;       // rows x |V_O|
    std::vector<int> node_ids;  // ascending observed ids

    long col_of(int node) const;
};

SupportData make_support(const Scm& m, long rows, RngStream& rng);

// Treatment/outcome drawn uniformly (independently; T == Y is permitted),
// covariate/factual set sizes uniform over the admissible range, values from
// support rows.
Query sample_query(QueryKind kind, const Scm& m, const SupportData& support, RngStream& rng);

// Checks a query against the model (variables observed, sets disjoint where
// required, values in discrete domains).
void validate_query(const Scm& m, const Query& q);

Query query_from_spec_json(const nlohmann::json& spec);
nlohmann::json query_to_json(const Query& q, const GroundTruth& gt, long id, long n_estimation);

// One shared noise matrix, two do-arms; paired difference of outcome means.
GroundTruth estimate_ate(const Scm& m, const Query& q, long n, RngStream& rng);

// ATE arms restricted to the covariate stratum: exact row filter for
// discrete models, kernel weights otherwise. Empty stratum -> NaN.
GroundTruth estimate_cate(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                          RngStream& rng);

// Abduction on fresh noise, then paired do-arms over the posterior rows.
GroundTruth estimate_ctf_te(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                            RngStream& rng);

GroundTruth estimate_query(const Scm& m, const Query& q, long n, const KernelConfig& kernel,
                           RngStream& rng);

}  // namespace scmbench
