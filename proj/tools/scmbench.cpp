#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scmbench/evaluate.hpp"
#include "scmbench/pipeline.hpp"
#include "scmbench/version.hpp"

namespace {

using namespace scmbench;

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
    if (seeds.empty()) throw ParamError("--seeds: expected a comma-separated list");
    return seeds;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot write " + out_path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scmbench: sample causal models, data, queries and ground truths from a "
                 "declarative space of interest"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    std::string soi_path, out_path, in_path, level = "l1", estimator_cmd, seeds_text = "0";
    std::string records_path;
    std::vector<std::string> overrides;
    uint64_t seed = 0;
    long num_scms = 1;
    int jobs = 0;  // all cores
    long probe = 1000000;
    long samples = 50000;
    long noise_draws = 10000;
    int axiom_tuples = 5;
    int max_cond = 3;
    double alpha = 0.05;
    double timeout = 600;
    bool no_metrics = false, stamp = false, truth_sidecar = false;

    auto add_common = [&](CLI::App* cmd, bool needs_soi) {
        if (needs_soi)
            cmd->add_option("--soi", soi_path, "SoI configuration file (JSON)")->required();
        cmd->add_option("--set", overrides, "key=value override applied before validation");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--jobs", jobs, "worker pool size (0 = all cores)");
    };

    auto* generate = app.add_subcommand("generate", "sample SCMs, data, queries, ground truths");
    add_common(generate, true);
    generate->add_option("--scms", num_scms, "number of SCMs to generate");
    generate->add_option("--out", out_path, "output directory")->required();
    generate->add_option("--probe", probe, "probe samples for the metrics block");
    generate->add_flag("--no-metrics", no_metrics, "skip metrics.json");
    generate->add_flag("--stamp", stamp,
                       "record a wall-clock timestamp in the manifest (breaks byte-identical "
                       "reruns)");

    auto* analyze = app.add_subcommand("analyze", "collect per-SCM metrics into a CSV matrix");
    analyze->add_option("--in", in_path, "generated output directory")->required();
    analyze->add_option("--out", out_path, "CSV destination (default stdout)");
    analyze->add_option("--probe", probe, "probe samples when metrics must be recomputed");
    analyze->add_option("--seed", seed, "seed for recomputed metrics");
    analyze->add_option("--jobs", jobs, "worker pool size");

    auto* verify = app.add_subcommand("verify", "statistical PCH verification of sampled SCMs");
    add_common(verify, true);
    verify->add_option("--level", level, "l1 | l2 | l3")->required();
    verify->add_option("--scms", num_scms, "SCMs to sample and verify");
    verify->add_option("--alpha", alpha, "BH false-discovery level");
    verify->add_option("--samples", samples, "data points per generated dataset");
    verify->add_option("--max-cond", max_cond, "conditioning set size bound (l1)");
    verify->add_option("--noise-draws", noise_draws, "exogenous draws per axiom tuple (l3)");
    verify->add_option("--tuples", axiom_tuples, "axiom tuples per SCM (l3)");
    verify->add_option("--out", out_path, "JSON report destination (default stdout)");
    verify->add_option("--records", records_path, "per-composite CSV record file");

    auto* evaluate = app.add_subcommand("evaluate", "drive an external estimator over benchmarks");
    add_common(evaluate, true);
    evaluate->add_option("--seeds", seeds_text, "comma-separated seed list");
    evaluate->add_option("--scms", num_scms, "SCMs per seed");
    evaluate->add_option("--estimator", estimator_cmd, "estimator shell command")->required();
    evaluate->add_option("--out", out_path, "work/output directory")->required();
    evaluate->add_option("--timeout", timeout, "per-SCM estimator timeout in seconds");
    evaluate->add_flag("--truth-sidecar", truth_sidecar,
                       "also write queries_truth.jsonl in each work directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            SpaceOfInterest soi = load_soi_file(soi_path, overrides);
            for (const auto& w : soi.warnings) std::cerr << "warning: " << w << "\n";
            GenerateOptions opts;
            opts.seed = seed;
            opts.num_scms = num_scms;
            opts.out_dir = out_path;
            opts.jobs = jobs;
            opts.with_metrics = !no_metrics;
            opts.probe_samples = probe;
            opts.stamp = stamp;
            opts.command_line = join_args(argc, argv);
            run_generate(soi, opts);
            std::cerr << "generated " << num_scms << " SCM(s) under " << out_path << "\n";
        } else if (analyze->parsed()) {
            std::ostringstream csv;
            run_analyze(in_path, csv, probe, seed, jobs);
            emit(out_path, csv.str());
        } else if (verify->parsed()) {
            SpaceOfInterest soi = load_soi_file(soi_path, overrides);
            for (const auto& w : soi.warnings) std::cerr << "warning: " << w << "\n";
            VerifyRunOptions opts;
            opts.level = level;
            opts.num_scms = num_scms;
            opts.seed = seed;
            opts.jobs = jobs;
            opts.verify.samples = samples;
            opts.verify.alpha = alpha;
            opts.verify.max_cond = max_cond;
            opts.verify.noise_draws = noise_draws;
            opts.verify.axiom_tuples = axiom_tuples;
            opts.verify.keep_records = !records_path.empty();
            VerificationResult res = run_verify(soi, opts);
            if (!records_path.empty()) {
                std::ofstream rec(records_path);
                if (!rec) throw Error("cannot write " + records_path);
                write_verify_records(rec, res);
            }
            emit(out_path, res.to_json().dump(2) + "\n");
        } else if (evaluate->parsed()) {
            EvalOptions opts;
            opts.sois.push_back(load_soi_file(soi_path, overrides));
            opts.seeds = parse_seed_list(seeds_text);
            opts.scms_per_seed = num_scms;
            opts.estimator = {estimator_cmd, timeout};
            opts.work_dir = out_path;
            opts.jobs = jobs;
            opts.truth_sidecar = truth_sidecar;
            EvaluationRun run = run_evaluation(opts);
            std::ofstream results(opts.work_dir / "results.json");
            results << run.to_json().dump(2) << "\n";
            std::ofstream records(opts.work_dir / "records.csv");
            write_records_csv(records, run);
            std::cerr << "evaluation complete: failure rate " << run.failure_rate << "\n";
        }
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConflictError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
