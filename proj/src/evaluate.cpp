#include "scmbench/evaluate.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace scmbench {

namespace {

// Runs `sh -c command` with cwd set to dir; returns the exit code or -1 on
// timeout (the process group is killed).
int run_command(const std::string& command, const std::filesystem::path& dir,
                double timeout_seconds) {
    pid_t pid = fork();
    if (pid < 0) throw Error("evaluate: fork failed");
    if (pid == 0) {
        if (chdir(dir.c_str()) != 0) _exit(126);
        setpgid(0, 0);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_seconds));
    for (;;) {
        int status = 0;
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            return 128;  // killed by signal
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            return -1;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

// queries.jsonl with the ground-truth fields withheld.
std::string queries_without_truth(const ScmArtifacts& art, long estimation_samples) {
    std::ostringstream out;
    for (size_t i = 0; i < art.queries.size(); ++i) {
        nlohmann::json j = query_to_json(art.queries[i], art.truths[i], static_cast<long>(i),
                                         estimation_samples);
        j.erase("ground_truth");
        j.erase("nan");
        out << j.dump() << "\n";
    }
    return out.str();
}

std::string queries_truth_sidecar(const ScmArtifacts& art) {
    std::ostringstream out;
    for (size_t i = 0; i < art.truths.size(); ++i) {
        nlohmann::json j;
        j["id"] = i;
        if (art.truths[i].is_nan())
            j["ground_truth"] = nullptr;
        else
            j["ground_truth"] = art.truths[i].value;
        out << j.dump() << "\n";
    }
    return out.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("evaluate: cannot write " + p.string());
    out << content;
}

}  // namespace

EvaluationRun EvaluationRun::from_records(std::vector<QueryRecord> records,
                                          std::vector<double> runtimes) {
    EvaluationRun run;
    run.records = std::move(records);
    run.scm_runtimes = std::move(runtimes);

    std::vector<double> sq;
    for (const auto& r : run.records) {
        if (r.truth_nan) {
            ++run.nan_truth_slots;
            continue;
        }
        ++run.total_slots;
        if (r.failed)
            ++run.failed_slots;
        else
            sq.push_back(r.sq_error());
    }
    run.failure_rate =
        run.total_slots > 0 ? static_cast<double>(run.failed_slots) / run.total_slots : 0.0;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (sq.empty()) {
        run.mean_error = run.std_error = run.max_error = run.min_error = nan;
    } else {
        double mean = 0;
        for (double v : sq) mean += v;
        mean /= static_cast<double>(sq.size());
        double var = 0;
        for (double v : sq) var += (v - mean) * (v - mean);
        var /= static_cast<double>(sq.size());
        run.mean_error = mean;
        run.std_error = std::sqrt(var);
        run.max_error = *std::max_element(sq.begin(), sq.end());
        run.min_error = *std::min_element(sq.begin(), sq.end());
    }
    if (!run.scm_runtimes.empty()) {
        double mean = 0;
        for (double v : run.scm_runtimes) mean += v;
        run.runtime_total = mean;
        mean /= static_cast<double>(run.scm_runtimes.size());
        double var = 0;
        for (double v : run.scm_runtimes) var += (v - mean) * (v - mean);
        var /= static_cast<double>(run.scm_runtimes.size());
        run.runtime_mean = mean;
        run.runtime_std = std::sqrt(var);
    }
    return run;
}

EvaluationRun run_evaluation(const EvalOptions& opts) {
    if (opts.sois.empty() || opts.seeds.empty())
        throw ParamError("evaluate: need at least one SoI and one seed");
    std::filesystem::create_directories(opts.work_dir);

    struct Task {
        long soi_index;
        uint64_t seed;
        long scm_index;
    };
    std::vector<Task> tasks;
    for (size_t s = 0; s < opts.sois.size(); ++s)
        for (uint64_t seed : opts.seeds)
            for (long k = 0; k < opts.scms_per_seed; ++k)
                tasks.push_back({static_cast<long>(s), seed, k});

    std::vector<std::vector<QueryRecord>> task_records(tasks.size());
    std::vector<double> task_runtimes(tasks.size(), 0.0);

    parallel_for(static_cast<long>(tasks.size()), opts.jobs, [&](long ti) {
        const Task& task = tasks[static_cast<size_t>(ti)];
        const SpaceOfInterest& soi = opts.sois[static_cast<size_t>(task.soi_index)];
        ScmArtifacts art = generate_one(soi, task.seed, task.scm_index);

        std::filesystem::path dir =
            opts.work_dir / ("soi" + std::to_string(task.soi_index) + "_seed" +
                             std::to_string(task.seed) + "_scm" + std::to_string(task.scm_index));
        std::filesystem::create_directories(dir);
        {
            std::ostringstream csv;
            write_csv(csv, art.observed, observed_column_names(art.scm));
            write_file(dir / "data.csv", csv.str());
        }
        write_file(dir / "graph.json", admg_to_json(art.projected).dump(2) + "\n");
        write_file(dir / "queries.jsonl", queries_without_truth(art, soi.estimation_samples));
        if (opts.truth_sidecar) write_file(dir / "queries_truth.jsonl", queries_truth_sidecar(art));
        std::filesystem::remove(dir / "estimates.jsonl");

        const auto t0 = std::chrono::steady_clock::now();
        int exit_code =
            run_command(opts.estimator.command, dir, opts.estimator.timeout_seconds);
        task_runtimes[static_cast<size_t>(ti)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::string scm_failure;
        std::map<long, double> estimates;
        if (exit_code == -1) {
            scm_failure = "timeout";
        } else if (exit_code != 0) {
            scm_failure = "exit_code=" + std::to_string(exit_code);
        } else {
            std::ifstream in(dir / "estimates.jsonl");
            if (!in) {
                scm_failure = "missing estimates.jsonl";
            } else {
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    try {
                        auto j = nlohmann::json::parse(line);
                        long id = j.at("id").get<long>();
                        estimates[id] = j.at("estimate").is_number()
                                            ? j["estimate"].get<double>()
                                            : std::numeric_limits<double>::quiet_NaN();
                    } catch (const nlohmann::json::exception&) {
                        scm_failure = "malformed estimates.jsonl";
                        break;
                    }
                }
            }
        }

        auto& recs = task_records[static_cast<size_t>(ti)];
        for (size_t qi = 0; qi < art.queries.size(); ++qi) {
            QueryRecord rec;
            rec.soi_index = task.soi_index;
            rec.seed = task.seed;
            rec.scm_index = task.scm_index;
            rec.query_id = static_cast<long>(qi);
            rec.kind = art.queries[qi].kind;
            rec.truth = art.truths[qi].value;
            rec.truth_nan = art.truths[qi].is_nan();
            if (!scm_failure.empty()) {
                rec.failed = true;
                rec.fail_reason = scm_failure;
            } else {
                auto it = estimates.find(static_cast<long>(qi));
                if (it == estimates.end()) {
                    rec.failed = true;
                    rec.fail_reason = "no estimate";
                } else if (!std::isfinite(it->second)) {
                    rec.failed = true;
                    rec.fail_reason = "nan estimate";
                    rec.estimate = it->second;
                } else {
                    rec.estimate = it->second;
                }
            }
            recs.push_back(rec);
        }
    });

    std::vector<QueryRecord> all;
    for (auto& part : task_records) all.insert(all.end(), part.begin(), part.end());
    return EvaluationRun::from_records(std::move(all), std::move(task_runtimes));
}

nlohmann::json EvaluationRun::to_json() const {
    auto num_or_null = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    nlohmann::json j;
    j["total_query_slots"] = total_slots;
    j["failed_query_slots"] = failed_slots;
    j["nan_truth_slots"] = nan_truth_slots;
    j["failure_rate"] = failure_rate;
    j["mean_error"] = num_or_null(mean_error);
    j["std_error"] = num_or_null(std_error);
    j["max_error"] = num_or_null(max_error);
    j["min_error"] = num_or_null(min_error);
    j["runtime_mean"] = runtime_mean;
    j["runtime_std"] = runtime_std;
    j["runtime_total"] = runtime_total;
    j["num_scms"] = scm_runtimes.size();
    return j;
}

void write_records_csv(std::ostream& out, const EvaluationRun& run) {
    out << "soi_index,seed,scm_index,query_id,kind,truth,estimate,error,abs_error,sq_error,"
           "failed,fail_reason\n";
    for (const auto& r : run.records) {
        out << r.soi_index << "," << r.seed << "," << r.scm_index << "," << r.query_id << ","
            << to_string(r.kind) << "," << format_double(r.truth) << ","
            << (r.failed ? "" : format_double(r.estimate)) << ","
            << (r.failed || r.truth_nan ? "" : format_double(r.error())) << ","
            << (r.failed || r.truth_nan ? "" : format_double(r.abs_error())) << ","
            << (r.failed || r.truth_nan ? "" : format_double(r.sq_error())) << ","
            << (r.failed ? 1 : 0) << "," << r.fail_reason << "\n";
    }
}

}  // namespace scmbench
