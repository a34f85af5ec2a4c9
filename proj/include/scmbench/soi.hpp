#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scmbench/common.hpp"
#include "scmbench/expr.hpp"
#include "scmbench/graph.hpp"

namespace scmbench {

// Declarative sampling domain for causal datasets. Immutable after
// validation; safe to share across generation threads.
//
// The on-disk form is a JSON document; see README for the schema. Unknown
// keys are errors.
struct SpaceOfInterest {
    Interval num_nodes{5, 15};
    Interval variable_dim{1, 1};  // parsed, must stay [1, 1]
    SymbolicExpr expected_edges;  // required; expected TOTAL edge count
    double hidden_proportion = 0.0;
    bool markovian = true;
    bool semi_markovian = false;
    std::optional<CausalGraph> predefined_graph;

    MechanismFamily mechanism_family = MechanismFamily::Linear;
    nlohmann::json mechanism_args = nlohmann::json::object();
    VariableType variable_type = VariableType::Continuous;
    Interval cardinality{2, 2};
    DiscreteSampling discrete_sampling = DiscreteSampling::SampleRejection;
    NoiseMode noise_mode = NoiseMode::Additive;
    NoiseSpec noise_distribution{NoiseSpec::Kind::Uniform, -1.0, 1.0};
    SymbolicExpr noise_regions;  // default "N"; discrete only

    QueryKind query_type = QueryKind::Ate;
    long queries_per_scm = 1;
    nlohmann::json specific_queries = nlohmann::json::array();
    bool allow_nan_queries = false;
    bool disable_queries = false;
    bool ctf_te_probability_form = false;
    KernelKind kernel = KernelKind::Gaussian;
    double bandwidth = 0.1;

    long num_samples = 1000;

    // Engine knobs (documented defaults; overridable in the document).
    long estimation_samples = 10000;  // ground-truth Monte-Carlo budget per query
    long query_retry_cap = 100;       // resampling attempts before a NaN query is fatal
    long table_budget = 1000000;      // max tabular-mechanism entries per node
    long support_samples = 0;         // 0 = auto: max(100000, 100 * num_samples)

    // Non-fatal notes from validation (ignored fields etc).
    std::vector<std::string> warnings;

    // Support-dataset row count for an SCM with n nodes; the automatic size
    // is capped so the support matrix stays within a bounded cell count.
    long resolved_support_samples(int n_nodes) const;

    nlohmann::json to_json() const;
    std::string canonical_text() const;
    std::string hash() const;  // FNV-1a64 of the canonical text, hex
};

SpaceOfInterest parse_soi(const std::string& text);
SpaceOfInterest parse_soi_json(const nlohmann::json& doc);

// Applies one "key=value" override to a raw document; values parse as JSON
// when possible and fall back to plain strings.
void apply_override(nlohmann::json& doc, const std::string& key_value);

SpaceOfInterest load_soi_file(const std::string& path,
                              const std::vector<std::string>& overrides = {});

}  // namespace scmbench
