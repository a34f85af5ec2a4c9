#include "scmbench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "scmbench/version.hpp"

namespace scmbench {

void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min(jobs, static_cast<int>(std::min<long>(count, 1024))));
    if (jobs == 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

ScmArtifacts generate_one(const SpaceOfInterest& soi, uint64_t seed, long index) {
    ScmArtifacts art;
    art.scm = sample_scm(soi, seed, index);
    const Scm& m = art.scm;

    RngStream data_rng(seed, "data", static_cast<uint64_t>(index));
    art.observed = observed_columns(m, forward_sample(m, soi.num_samples, data_rng).values);
    art.projected = latent_project(m.graph);

    if (soi.disable_queries) return art;

    RngStream support_rng(seed, "support", static_cast<uint64_t>(index));
    SupportData support = make_support(m, soi.resolved_support_samples(m.n_nodes()), support_rng);
    KernelConfig kernel{soi.kernel, soi.bandwidth, {}};

    if (!soi.specific_queries.empty()) {
        for (size_t qi = 0; qi < soi.specific_queries.size(); ++qi) {
            Query q = query_from_spec_json(soi.specific_queries[qi]);
            validate_query(m, q);
            RngStream qrng(seed, "query", static_cast<uint64_t>(index), qi);
            art.queries.push_back(q);
            art.truths.push_back(estimate_query(m, q, soi.estimation_samples, kernel, qrng));
        }
        return art;
    }

    for (long slot = 0; slot < soi.queries_per_scm; ++slot) {
        RngStream qrng(seed, "query", static_cast<uint64_t>(index), static_cast<uint64_t>(slot));
        Query q;
        GroundTruth gt;
        bool accepted = false;
        for (long attempt = 0; attempt < soi.query_retry_cap; ++attempt) {
            q = sample_query(soi.query_type, m, support, qrng);
            if (q.kind == QueryKind::CtfTe && soi.ctf_te_probability_form && m.discrete)
                q.outcome_value = support.data(qrng.uniform_int(support.data.rows()),
                                               support.col_of(q.outcome));
            gt = estimate_query(m, q, soi.estimation_samples, kernel, qrng);
            if (!gt.is_nan() || soi.allow_nan_queries) {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw Error("query slot " + std::to_string(slot) + " of SCM " + std::to_string(index) +
                        ": no non-NaN query found within " + std::to_string(soi.query_retry_cap) +
                        " attempts");
        art.queries.push_back(q);
        art.truths.push_back(gt);
    }
    return art;
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

void write_scm_dir(const SpaceOfInterest& soi, const GenerateOptions& opts,
                   const ScmArtifacts& art, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    write_text_atomic(dir / "scm.json", scm_to_json(art.scm).dump(2) + "\n");
    write_text_atomic(dir / "graph.json", admg_to_json(art.projected).dump(2) + "\n");

    {
        std::ostringstream csv;
        write_csv(csv, art.observed, observed_column_names(art.scm));
        write_text_atomic(dir / "data.csv", csv.str());
    }
    if (!soi.disable_queries) {
        std::ostringstream out;
        for (size_t i = 0; i < art.queries.size(); ++i)
            out << query_to_json(art.queries[i], art.truths[i], static_cast<long>(i),
                                 soi.estimation_samples)
                       .dump()
                << "\n";
        write_text_atomic(dir / "queries.jsonl", out.str());
    }
    if (opts.with_metrics) {
        RngStream mrng(opts.seed, "metrics", static_cast<uint64_t>(art.scm.provenance.scm_index));
        MetricsReport rep =
            compute_metrics(art.scm, opts.probe_samples, mrng, opts.grid_resolution);
        write_text_atomic(dir / "metrics.json", metrics_to_json(rep).dump(2) + "\n");
    }
    nlohmann::json sidecar = {{"soi_hash", soi.hash()},
                              {"master_seed", opts.seed},
                              {"scm_index", art.scm.provenance.scm_index},
                              {"schema_version", kSchemaVersion}};
    write_text_atomic(dir / "manifest.json", sidecar.dump(2) + "\n");
}

}  // namespace

void run_generate(const SpaceOfInterest& soi, const GenerateOptions& opts) {
    if (opts.num_scms < 0) throw ParamError("generate: num_scms must be >= 0");
    std::filesystem::create_directories(opts.out_dir);

    parallel_for(opts.num_scms, opts.jobs, [&](long k) {
        ScmArtifacts art = generate_one(soi, opts.seed, k);
        write_scm_dir(soi, opts, art, opts.out_dir / ("scm_" + std::to_string(k)));
    });

    nlohmann::json manifest;
    manifest["tool"] = kToolName;
    manifest["tool_version"] = kToolVersion;
    manifest["schema_version"] = kSchemaVersion;
    manifest["soi_hash"] = soi.hash();
    manifest["soi"] = soi.to_json();
    manifest["master_seed"] = opts.seed;
    manifest["command"] = opts.command_line;
    if (opts.stamp) {
        auto now = std::chrono::system_clock::now();
        manifest["timestamp"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    } else {
        manifest["timestamp"] = nullptr;
    }
    manifest["num_scms"] = opts.num_scms;
    auto scms = nlohmann::json::array();
    for (long k = 0; k < opts.num_scms; ++k)
        scms.push_back({{"index", k}, {"dir", "scm_" + std::to_string(k)}});
    manifest["scms"] = scms;
    write_text_atomic(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

void run_analyze(const std::filesystem::path& in_dir, std::ostream& csv_out, long probe_samples,
                 uint64_t seed, int jobs) {
    const auto cols = metric_csv_columns();
    csv_out << "scm_index";
    for (const auto& c : cols) csv_out << "," << c;
    csv_out << "\n";
    if (!std::filesystem::exists(in_dir)) return;

    std::vector<std::pair<long, std::filesystem::path>> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("scm_", 0) != 0) continue;
        dirs.emplace_back(std::stol(name.substr(4)), entry.path());
    }
    std::sort(dirs.begin(), dirs.end());

    std::vector<std::vector<double>> rows(dirs.size());
    parallel_for(static_cast<long>(dirs.size()), jobs, [&](long i) {
        const auto& dir = dirs[static_cast<size_t>(i)].second;
        nlohmann::json j;
        if (std::filesystem::exists(dir / "metrics.json")) {
            std::ifstream in(dir / "metrics.json");
            in >> j;
        } else {
            std::ifstream in(dir / "scm.json");
            if (!in) throw Error("analyze: no metrics.json or scm.json in " + dir.string());
            nlohmann::json sj;
            in >> sj;
            Scm m = scm_from_json(sj);
            RngStream rng(seed, "metrics", static_cast<uint64_t>(dirs[static_cast<size_t>(i)].first));
            j = metrics_to_json(compute_metrics(m, probe_samples, rng));
        }
        std::vector<double> row;
        for (const auto& c : metric_csv_columns()) {
            if (j.contains(c) && j[c].is_number())
                row.push_back(j[c].get<double>());
            else
                row.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        rows[static_cast<size_t>(i)] = std::move(row);
    });
    for (size_t i = 0; i < dirs.size(); ++i) {
        csv_out << dirs[i].first;
        for (double v : rows[i]) csv_out << "," << format_double(v);
        csv_out << "\n";
    }
}

VerificationResult run_verify(const SpaceOfInterest& soi, const VerifyRunOptions& opts) {
    if (opts.level != "l1" && opts.level != "l2" && opts.level != "l3")
        throw ParamError("verify: level must be l1, l2 or l3");
    std::vector<VerificationResult> parts(static_cast<size_t>(opts.num_scms));
    parallel_for(opts.num_scms, opts.jobs, [&](long k) {
        Scm m = sample_scm(soi, opts.seed, k);
        RngStream rng(opts.seed, "verify/" + opts.level, static_cast<uint64_t>(k));
        if (opts.level == "l1")
            parts[static_cast<size_t>(k)] = verify_markov(m, opts.verify, rng);
        else if (opts.level == "l2")
            parts[static_cast<size_t>(k)] = verify_do_calculus(m, opts.verify, rng);
        else
            parts[static_cast<size_t>(k)] = verify_ctf_axioms(m, opts.verify, rng);
    });
    VerificationResult merged;
    for (const auto& p : parts) merged.merge(p);
    return merged;
}

void write_verify_records(std::ostream& out, const VerificationResult& res) {
    out << "level,group,variables,status,strata_total,strata_pass,strata_fail,strata_skip,"
           "min_p,p_values\n";
    for (const auto& r : res.records) {
        out << r.level << "," << r.group << ",\"" << r.variables << "\"," << r.status << ","
            << r.strata_total << "," << r.strata_pass << "," << r.strata_fail << ","
            << r.strata_skip << "," << format_double(r.min_p) << ",\"";
        for (size_t i = 0; i < r.p_values.size(); ++i)
            out << (i ? ";" : "") << format_double(r.p_values[i]);
        out << "\"\n";
    }
}

}  // namespace scmbench
