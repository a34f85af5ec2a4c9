#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "scmbench/pipeline.hpp"

using namespace scmbench;
using namespace scmbench::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("scmbench_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Byte compare two directory trees.
void check_identical_trees(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    REQUIRE(rel_a == rel_b);
    for (const auto& rel : rel_a) CHECK(slurp(a / rel) == slurp(b / rel));
}

SpaceOfInterest small_soi() {
    return parse_soi(R"({
        "num_nodes": [3, 5],
        "expected_edges": "N",
        "num_samples": 200,
        "estimation_samples": 500,
        "support_samples": 2000
    })");
}

GenerateOptions small_opts(const fs::path& out, int jobs) {
    GenerateOptions opts;
    opts.seed = 7;
    opts.num_scms = 3;
    opts.out_dir = out;
    opts.jobs = jobs;
    opts.probe_samples = 2000;
    opts.command_line = "test";
    return opts;
}

}  // namespace

TEST_CASE("generate emits the documented per-scm layout") {
    auto out = temp_dir("layout");
    run_generate(small_soi(), small_opts(out, 1));
    CHECK(fs::exists(out / "manifest.json"));
    for (int k = 0; k < 3; ++k) {
        fs::path dir = out / ("scm_" + std::to_string(k));
        for (const char* f :
             {"scm.json", "graph.json", "data.csv", "queries.jsonl", "metrics.json",
              "manifest.json"})
            CHECK(fs::exists(dir / f));
        auto sidecar = nlohmann::json::parse(slurp(dir / "manifest.json"));
        CHECK(sidecar["scm_index"] == k);
        CHECK(sidecar["schema_version"] == 1);
        CHECK(sidecar["master_seed"] == 7);
        CHECK(sidecar.contains("soi_hash"));
    }
    auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["num_scms"] == 3);
    CHECK(manifest["timestamp"].is_null());
    CHECK(manifest["scms"].size() == 3);
    fs::remove_all(out);
}

TEST_CASE("generate is byte-identical across runs and worker counts") {
    auto a = temp_dir("det_a");
    auto b = temp_dir("det_b");
    auto c = temp_dir("det_c");
    run_generate(small_soi(), small_opts(a, 1));
    run_generate(small_soi(), small_opts(b, 1));
    run_generate(small_soi(), small_opts(c, 4));
    check_identical_trees(a, b);
    check_identical_trees(a, c);
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
}

TEST_CASE("zero scms still writes the manifest") {
    auto out = temp_dir("empty");
    auto opts = small_opts(out, 1);
    opts.num_scms = 0;
    run_generate(small_soi(), opts);
    CHECK(fs::exists(out / "manifest.json"));
    int entries = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
    fs::remove_all(out);
}

TEST_CASE("disable_queries skips the query file") {
    auto soi = small_soi();
    soi.disable_queries = true;
    auto out = temp_dir("noq");
    auto opts = small_opts(out, 1);
    opts.num_scms = 1;
    run_generate(soi, opts);
    CHECK_FALSE(fs::exists(out / "scm_0" / "queries.jsonl"));
    CHECK(fs::exists(out / "scm_0" / "data.csv"));
    fs::remove_all(out);
}

TEST_CASE("analyze on a missing directory yields a header-only csv") {
    std::ostringstream csv;
    run_analyze(temp_dir("nonexistent"), csv, 1000, 0);
    std::string text = csv.str();
    CHECK(text.rfind("scm_index,in_degree_mean,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("analyze collects one row per generated scm") {
    auto out = temp_dir("an");
    run_generate(small_soi(), small_opts(out, 2));
    std::ostringstream csv;
    run_analyze(out, csv, 1000, 0);
    std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 rows
    CHECK(text.find("\n0,") != std::string::npos);
    CHECK(text.find("\n2,") != std::string::npos);

    // Recomputation path: metrics.json removed, falls back to scm.json.
    fs::remove(out / "scm_1" / "metrics.json");
    std::ostringstream csv2;
    run_analyze(out, csv2, 1000, 0);
    std::string text2 = csv2.str();
    CHECK(std::count(text2.begin(), text2.end(), '\n') == 4);
    fs::remove_all(out);
}

TEST_CASE("verify driver aggregates over sampled models") {
    auto soi = discrete_grid_soi(3, 0.5, 3, 2);
    VerifyRunOptions opts;
    opts.level = "l3";
    opts.num_scms = 2;
    opts.seed = 5;
    opts.jobs = 2;
    opts.verify.noise_draws = 1000;
    opts.verify.axiom_tuples = 2;
    auto res = run_verify(soi, opts);
    CHECK(res.composite.total == 2 * 2 * 3);  // scms x tuples x axioms
    CHECK(res.composite.fail == 0);
    CHECK_THROWS_AS(([&] {
                        opts.level = "bogus";
                        run_verify(soi, opts);
                    }()),
                    ParamError);
}

TEST_CASE("query generation respects the nan policy") {
    // A space whose CATE strata are often empty would retry; here just check
    // the retry loop terminates and produces non-NaN truths by default.
    auto soi = parse_soi(R"({
        "num_nodes": [4, 4],
        "expected_edges": "N",
        "variable_type": "discrete",
        "mechanism_family": "tabular",
        "cardinality": [2, 2],
        "noise_regions": "4",
        "noise_distribution": {"kind": "uniform", "args": [0, 1]},
        "query_type": "cate",
        "queries_per_scm": 3,
        "num_samples": 100,
        "estimation_samples": 2000,
        "support_samples": 2000
    })");
    auto art = generate_one(soi, 3, 0);
    REQUIRE(art.truths.size() == 3);
    for (const auto& t : art.truths) CHECK_FALSE(t.is_nan());
}

TEST_CASE("specific queries bypass the sampler") {
    auto soi = parse_soi(R"json({
        "num_nodes": [2, 2],
        "expected_edges": "0",
        "predefined_graph": {"nodes": 2, "directed_edges": [[0, 1]], "hidden": []},
        "specific_queries": [
            {"kind": "ate", "T": 0, "Y": 1, "t": 0.5, "c": -0.5}
        ],
        "num_samples": 100,
        "estimation_samples": 1000,
        "support_samples": 1000
    })json");
    auto art = generate_one(soi, 1, 0);
    REQUIRE(art.queries.size() == 1);
    CHECK(art.queries[0].treatment == 0);
    CHECK(art.queries[0].t_value == 0.5);
    CHECK_FALSE(art.truths[0].is_nan());
}

TEST_CASE("reloaded models regenerate the released data bit-exactly") {
    auto out = temp_dir("reload");
    auto soi = small_soi();
    auto opts = small_opts(out, 1);
    opts.num_scms = 1;
    run_generate(soi, opts);

    nlohmann::json sj = nlohmann::json::parse(slurp(out / "scm_0" / "scm.json"));
    Scm m = scm_from_json(sj);
    RngStream data_rng(opts.seed, "data", 0);
    auto regenerated = observed_columns(m, forward_sample(m, soi.num_samples, data_rng).values);
    std::ostringstream csv;
    write_csv(csv, regenerated, observed_column_names(m));
    CHECK(csv.str() == slurp(out / "scm_0" / "data.csv"));
    fs::remove_all(out);
}

TEST_CASE("graph json key order is stable for golden files") {
    CausalGraph g;
    g.n = 2;
    g.parents = {{}, {0}};
    g.is_hidden = {0, 0};
    CHECK(graph_to_json(g).dump() ==
          R"({"bidirected_edges":[],"directed_edges":[[0,1]],"hidden":[],"nodes":[0,1]})");
}
