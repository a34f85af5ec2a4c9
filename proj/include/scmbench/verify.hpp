#pragma once

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "scmbench/scm.hpp"

namespace scmbench {

struct TestCounts {
    long total = 0, pass = 0, fail = 0, skip = 0;
};

// One composite test (a d-separated triplet, a do-calculus tuple, or an
// axiom instance) with its per-stratum accounting.
struct CompositeRecord {
    std::string level;
    std::string group;      // breakdown key: cond_size=k, rule1..3, axiom name
    std::string variables;  // human-readable tuple description
    char status = 'S';      // 'P' | 'F' | 'S'
    long strata_total = 0, strata_pass = 0, strata_fail = 0, strata_skip = 0;
    double min_p = 1.0;
    std::vector<double> p_values;  // tested strata, enumeration order
};

// Dual accounting: composite tests and their individual chi-squared strata.
struct VerificationResult {
    TestCounts composite;
    TestCounts individual;
    std::map<std::string, TestCounts> composite_by_group;
    std::map<std::string, TestCounts> individual_by_group;
    std::vector<CompositeRecord> records;

    void add(CompositeRecord rec, bool keep_record);
    void merge(const VerificationResult& other);
    nlohmann::json to_json() const;
};

struct VerifyOptions {
    long samples = 50000;        // data points per generated dataset
    double alpha = 0.05;         // BH false-discovery level per composite test
    int max_cond = 3;            // conditioning set size bound (L1)
    long noise_draws = 10000;    // exogenous realizations per axiom tuple (L3)
    int axiom_tuples = 5;        // sampled (X, Y, W) partitions per SCM (L3)
    bool keep_records = false;
};

// L1: every d-separated (A, B | C) with singleton A, B and |C| <= max_cond
// must show conditional independence in forward-sampled data. Per-stratum
// chi-squared tests, Koehler-filtered, BH-corrected within the composite.
VerificationResult verify_markov(const Scm& m, const VerifyOptions& opts, RngStream& rng);

// L2: for each do-calculus rule and each univariate (X, Y, Z, W) tuple whose
// surgical-graph precondition holds, the rule's two sides are generated as
// interventional datasets and compared with chi-squared goodness-of-fit
// tests per stratum.
VerificationResult verify_do_calculus(const Scm& m, const VerifyOptions& opts, RngStream& rng);

// L3: composition, effectiveness and reversibility checked as exact
// equalities of deterministic evaluations on sampled noise. Any mismatch is
// a failure; no statistics involved.
VerificationResult verify_ctf_axioms(const Scm& m, const VerifyOptions& opts, RngStream& rng);

}  // namespace scmbench
