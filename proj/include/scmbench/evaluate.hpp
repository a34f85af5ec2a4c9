#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "scmbench/pipeline.hpp"

namespace scmbench {

// External estimator: a shell command run once per SCM inside a work
// directory holding data.csv, graph.json and queries.jsonl (ground truths
// withheld). It must write estimates.jsonl ({"id": k, "estimate": v} per
// line) and exit 0. Timeouts, nonzero exits, NaN or missing estimates all
// count as failed query slots.
struct EstimatorSpec {
    std::string command;
    double timeout_seconds = 600;
};

struct EvalOptions {
    std::vector<SpaceOfInterest> sois;
    std::vector<uint64_t> seeds;
    long scms_per_seed = 1;
    EstimatorSpec estimator;
    std::filesystem::path work_dir;
    int jobs = 1;
    bool truth_sidecar = false;  // writes queries_truth.jsonl per work dir
};

struct QueryRecord {
    long soi_index = 0;
    uint64_t seed = 0;
    long scm_index = 0;
    long query_id = 0;
    QueryKind kind = QueryKind::Ate;
    double truth = 0;
    double estimate = 0;
    bool failed = false;
    bool truth_nan = false;
    std::string fail_reason;

    double error() const { return estimate - truth; }
    double abs_error() const { return std::abs(error()); }
    double sq_error() const { return error() * error(); }
};

// Aggregates follow the evaluation recipe: error moments are computed over
// the squared errors of non-failed slots; failed slots count only toward
// the failure rate; NaN-truth slots are excluded from both.
struct EvaluationRun {
    long total_slots = 0;
    long failed_slots = 0;
    long nan_truth_slots = 0;
    double failure_rate = 0;
    double mean_error = 0, std_error = 0, max_error = 0, min_error = 0;
    double runtime_mean = 0, runtime_std = 0, runtime_total = 0;
    std::vector<QueryRecord> records;
    std::vector<double> scm_runtimes;

    nlohmann::json to_json() const;

    // Recomputes every aggregate from the per-query records; merging runs
    // and re-aggregating loses nothing.
    static EvaluationRun from_records(std::vector<QueryRecord> records,
                                      std::vector<double> runtimes);
};

EvaluationRun run_evaluation(const EvalOptions& opts);

void write_records_csv(std::ostream& out, const EvaluationRun& run);

}  // namespace scmbench
