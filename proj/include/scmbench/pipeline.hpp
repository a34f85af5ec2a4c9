#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

#include "scmbench/analysis.hpp"
#include "scmbench/queries.hpp"
#include "scmbench/verify.hpp"

namespace scmbench {

// Runs fn(0..count-1) on a worker pool; the first captured exception is
// rethrown after all workers join. jobs <= 0 selects the CPU count.
void parallel_for(long count, int jobs, const std::function<void(long)>& fn);

// Everything generated for one SCM index, before any file is written.
struct ScmArtifacts {
    Scm scm;
    Eigen::MatrixXd observed;  // num_samples x |V_O|
    Admg projected;
    std::vector<Query> queries;
    std::vector<GroundTruth> truths;
};

// Deterministic in (soi, seed, index): every random stream derives from the
// triple, so indices can be generated concurrently in any order.
ScmArtifacts generate_one(const SpaceOfInterest& soi, uint64_t seed, long index);

struct GenerateOptions {
    uint64_t seed = 0;
    long num_scms = 1;
    std::filesystem::path out_dir;
    int jobs = 1;
    bool with_metrics = true;
    long probe_samples = 1000000;
    int grid_resolution = 16;
    bool stamp = false;  // opt-in wall-clock timestamp in the manifest
    std::string command_line;
};

void run_generate(const SpaceOfInterest& soi, const GenerateOptions& opts);

// Collects per-SCM metrics from an output tree into a CSV matrix (one row
// per SCM). Missing metrics.json files are recomputed from scm.json.
void run_analyze(const std::filesystem::path& in_dir, std::ostream& csv_out, long probe_samples,
                 uint64_t seed, int jobs = 1);

struct VerifyRunOptions {
    std::string level = "l1";  // l1 | l2 | l3
    long num_scms = 1;
    uint64_t seed = 0;
    int jobs = 1;
    VerifyOptions verify;
};

VerificationResult run_verify(const SpaceOfInterest& soi, const VerifyRunOptions& opts);

// Writes the per-composite records of a verification run as CSV.
void write_verify_records(std::ostream& out, const VerificationResult& res);

}  // namespace scmbench
