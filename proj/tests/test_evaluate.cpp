#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "scmbench/evaluate.hpp"

using namespace scmbench;
using namespace scmbench::testing;
namespace fs = std::filesystem;

#ifndef STUB_ESTIMATOR_PATH
#define STUB_ESTIMATOR_PATH "./stub_estimator"
#endif

namespace {

SpaceOfInterest eval_soi() {
    return parse_soi(R"({
        "num_nodes": [3, 4],
        "expected_edges": "N",
        "queries_per_scm": 2,
        "num_samples": 100,
        "estimation_samples": 500,
        "support_samples": 1000
    })");
}

EvalOptions base_opts(const std::string& mode, const fs::path& work) {
    EvalOptions opts;
    opts.sois = {eval_soi()};
    opts.seeds = {1, 2};
    opts.scms_per_seed = 2;
    opts.estimator = {std::string(STUB_ESTIMATOR_PATH) + " " + mode, 60};
    opts.work_dir = work;
    opts.jobs = 2;
    opts.truth_sidecar = true;
    return opts;
}

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("scmbench_eval_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("oracle estimator closes the loop with zero error") {
    auto work = temp_dir("oracle");
    auto run = run_evaluation(base_opts("oracle", work));
    CHECK(run.total_slots == 8);  // 2 seeds x 2 scms x 2 queries
    CHECK(run.failed_slots == 0);
    CHECK(run.failure_rate == 0.0);
    CHECK(run.mean_error == 0.0);
    CHECK(run.max_error == 0.0);
    CHECK(run.runtime_total > 0.0);
    fs::remove_all(work);
}

TEST_CASE("constant-zero estimator error equals the mean squared truth") {
    auto work = temp_dir("zero");
    auto run = run_evaluation(base_opts("zero", work));
    CHECK(run.failed_slots == 0);
    double expect = 0;
    for (const auto& r : run.records) expect += r.truth * r.truth;
    expect /= static_cast<double>(run.records.size());
    CHECK(run.mean_error == doctest::Approx(expect).epsilon(1e-12));
    fs::remove_all(work);
}

TEST_CASE("estimators that exit nonzero fail every slot") {
    auto work = temp_dir("fail");
    auto run = run_evaluation(base_opts("fail", work));
    CHECK(run.failed_slots == run.total_slots);
    CHECK(run.failure_rate == 1.0);
    CHECK(std::isnan(run.mean_error));
    CHECK(std::isnan(run.std_error));
    for (const auto& r : run.records) CHECK(r.fail_reason == "exit_code=9");
    fs::remove_all(work);
}

TEST_CASE("timeouts count as failures") {
    auto work = temp_dir("timeout");
    auto opts = base_opts("oracle", work);
    opts.estimator = {"sleep 5", 0.2};
    opts.seeds = {1};
    opts.scms_per_seed = 1;
    auto run = run_evaluation(opts);
    CHECK(run.failure_rate == 1.0);
    CHECK(run.records[0].fail_reason == "timeout");
    fs::remove_all(work);
}

TEST_CASE("work directories follow the estimator contract") {
    auto work = temp_dir("contract");
    auto opts = base_opts("oracle", work);
    opts.seeds = {1};
    opts.scms_per_seed = 1;
    run_evaluation(opts);
    fs::path dir = work / "soi0_seed1_scm0";
    for (const char* f : {"data.csv", "graph.json", "queries.jsonl", "queries_truth.jsonl",
                          "estimates.jsonl"})
        CHECK(fs::exists(dir / f));
    // Ground truth is withheld from queries.jsonl.
    std::ifstream in(dir / "queries.jsonl");
    std::string line;
    while (std::getline(in, line)) CHECK(line.find("ground_truth") == std::string::npos);
    fs::remove_all(work);
}

TEST_CASE("aggregates recompute exactly from the record file") {
    auto work = temp_dir("agg");
    auto run = run_evaluation(base_opts("zero", work));
    auto again = EvaluationRun::from_records(run.records, run.scm_runtimes);
    CHECK(again.mean_error == run.mean_error);
    CHECK(again.std_error == run.std_error);
    CHECK(again.max_error == run.max_error);
    CHECK(again.min_error == run.min_error);
    CHECK(again.failure_rate == run.failure_rate);
    CHECK(again.runtime_mean == run.runtime_mean);
    fs::remove_all(work);
}

TEST_CASE("generated inputs are identical across estimator runs") {
    auto w1 = temp_dir("repro1");
    auto w2 = temp_dir("repro2");
    auto r1 = run_evaluation(base_opts("oracle", w1));
    auto r2 = run_evaluation(base_opts("zero", w2));
    REQUIRE(r1.records.size() == r2.records.size());
    for (size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(r1.records[i].truth == r2.records[i].truth);
        CHECK(r1.records[i].kind == r2.records[i].kind);
    }
    fs::remove_all(w1);
    fs::remove_all(w2);
}

TEST_CASE("multiple spaces evaluate in one run") {
    auto work = temp_dir("multi");
    auto opts = base_opts("oracle", work);
    opts.sois.push_back(eval_soi());
    opts.seeds = {1};
    opts.scms_per_seed = 1;
    auto run = run_evaluation(opts);
    CHECK(run.total_slots == 4);  // 2 sois x 1 seed x 1 scm x 2 queries
    bool saw0 = false, saw1 = false;
    for (const auto& r : run.records) {
        saw0 |= r.soi_index == 0;
        saw1 |= r.soi_index == 1;
    }
    CHECK(saw0);
    CHECK(saw1);
    fs::remove_all(work);
}

TEST_CASE("results and records serialize") {
    auto work = temp_dir("serialize");
    auto run = run_evaluation(base_opts("oracle", work));
    auto j = run.to_json();
    CHECK(j["failure_rate"] == 0.0);
    CHECK(j["mean_error"] == 0.0);
    std::ostringstream csv;
    write_records_csv(csv, run);
    std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') ==
          static_cast<long>(run.records.size()) + 1);
    fs::remove_all(work);
}
