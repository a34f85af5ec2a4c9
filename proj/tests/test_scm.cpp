#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "oracle.hpp"
#include "scmbench/scm.hpp"

using namespace scmbench;
using namespace scmbench::testing;

TEST_CASE("predefined two-node space yields linear mechanisms of the right arity") {
    auto soi = parse_soi(R"({
        "expected_edges": "N",
        "predefined_graph": {"nodes": 2, "directed_edges": [[0, 1]], "hidden": []}
    })");
    auto m = sample_scm(soi, 1, 0);
    CHECK(m.n_nodes() == 2);
    CHECK(m.mechanisms[0].arity() == 0);
    CHECK(m.mechanisms[1].arity() == 1);
    CHECK_FALSE(m.discrete);
}

TEST_CASE("semi-markovian direct construction is infeasible") {
    auto soi = parse_soi(R"({"expected_edges": "N", "markovian": false, "semi_markovian": true})");
    CHECK_THROWS_AS(sample_scm(soi, 1, 0), InfeasibleError);
}

TEST_CASE("discrete grid point respects the region bound") {
    auto soi = discrete_grid_soi(4, 0.4, 5, 3);
    auto m = sample_scm(soi, 7, 0);
    CHECK(m.discrete);
    for (int i = 0; i < m.n_nodes(); ++i) {
        const auto& tab = m.mechanisms[static_cast<size_t>(i)].tabular;
        long n_cfg = tab.n_configs();
        long cap = pow_capped(3, n_cfg, 1000000);
        CHECK(tab.regions() <= std::min<long>(5, cap));
        CHECK(tab.regions() >= 1);
    }
}

TEST_CASE("expected edge expressions resolve through the sampled node count") {
    auto soi = parse_soi(R"({"num_nodes": [10, 10], "expected_edges": "0.5*N"})");
    double total = 0;
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep)
        total += static_cast<double>(sample_scm(soi, 1234, rep).graph.edge_count());
    // Expected total edges = 0.5 * N = 5, i.e. per-node expected degree 0.5.
    CHECK(std::abs(total / reps - 5.0) < 0.4);
}

TEST_CASE("same seed and space give byte-identical models") {
    auto soi = discrete_grid_soi(5, 0.4, 6, 3);
    auto a = scm_to_json(sample_scm(soi, 99, 3)).dump();
    auto b = scm_to_json(sample_scm(soi, 99, 3)).dump();
    CHECK(a == b);
    auto c = scm_to_json(sample_scm(soi, 99, 4)).dump();
    CHECK(a != c);
}

TEST_CASE("scm json round trip is bit exact") {
    auto soi = discrete_grid_soi(4, 0.5, 4, 2);
    auto m = sample_scm(soi, 11, 0);
    auto back = scm_from_json(scm_to_json(m));
    CHECK(scm_to_json(back).dump() == scm_to_json(m).dump());
}

TEST_CASE("forward sampling keeps the noise column for source nodes") {
    Scm m;
    m.graph.n = 1;
    m.graph.parents = {{}};
    m.graph.is_hidden = {0};
    m.graph.is_hidden[0] = 0;
    m.mechanisms = {linear_mech({})};
    m.noise = {unit_noise()};
    m.cardinality = {0};
    RngStream rng(1, "scm");
    auto s = forward_sample(m, 1000, rng);
    CHECK(s.values.col(0) == s.noise.col(0));
}

TEST_CASE("chain mean matches the sum of two uniforms") {
    auto m = linear_chain(1.0);
    RngStream rng(2, "scm");
    auto s = forward_sample(m, 100000, rng);
    CHECK(std::abs(s.values.col(1).mean() - 1.0) < 0.01);
}

TEST_CASE("nodes recompute from stored parents and noise") {
    auto soi = discrete_grid_soi(5, 0.6, 4, 3);
    auto m = sample_scm(soi, 5, 0);
    RngStream rng(3, "scm");
    auto s = forward_sample(m, 200, rng);
    for (int i = 0; i < m.n_nodes(); ++i) {
        const auto& ps = m.graph.parents[i];
        Eigen::MatrixXd pa(s.values.rows(), static_cast<long>(ps.size()));
        for (size_t k = 0; k < ps.size(); ++k) pa.col(static_cast<long>(k)) = s.values.col(ps[k]);
        Eigen::VectorXd again = m.mechanisms[static_cast<size_t>(i)].eval(pa, s.noise.col(i));
        CHECK(again == s.values.col(i));
    }
}

TEST_CASE("discrete joint matches exact enumeration") {
    // Collider 0 -> 2 <- 1 with binary tabular mechanisms.
    Scm m;
    m.graph.n = 3;
    m.graph.parents = {{}, {}, {0, 1}};
    m.graph.is_hidden = {0, 0, 0};
    RngStream mech_rng(17, "mech");
    m.mechanisms = {fair_coin(), fair_coin(),
                    tabular_mech({2, 2}, 2, {0.0, 0.2, 0.55, 1.0},
                                 {{0, 1, 1, 0}, {1, 1, 0, 0}, {0, 0, 0, 1}})};
    m.noise = {unit_noise(), unit_noise(), unit_noise()};
    m.cardinality = {2, 2, 2};
    m.discrete = true;
    m.validate();

    ExactDiscreteOracle oracle(m);
    auto exact = oracle.joint({});

    RngStream rng(4, "scm");
    const long n = 100000;
    auto s = forward_sample(m, n, rng);
    std::map<std::vector<int>, long> counts;
    for (long i = 0; i < n; ++i)
        ++counts[{static_cast<int>(s.values(i, 0)), static_cast<int>(s.values(i, 1)),
                  static_cast<int>(s.values(i, 2))}];

    // Chi-squared goodness of fit against the exact joint at alpha = 0.01.
    double stat = 0;
    long cells = 0;
    for (const auto& [outcome, p] : exact) {
        double expect = p * n;
        if (expect == 0) continue;
        double obs = static_cast<double>(counts[outcome]);
        stat += (obs - expect) * (obs - expect) / expect;
        ++cells;
    }
    REQUIRE(cells >= 2);
    // 99th percentile of chi2 with 7 df is 18.48.
    CHECK(stat < 18.48);
}

TEST_CASE("interventions pin columns and preserve non-descendants") {
    auto soi = discrete_grid_soi(5, 0.5, 4, 2);
    auto m = sample_scm(soi, 21, 0);
    RngStream rng(5, "scm");
    auto s = forward_sample(m, 500, rng);

    // Empty intervention set reproduces the forward pass exactly.
    auto same = forward_eval(m, s.noise);
    CHECK(same == s.values);

    auto with_do = forward_eval_do(m, s.noise, {{2, 1.0}});
    CHECK((with_do.col(2).array() == 1.0).all());
    auto desc = descendants(m.graph, {2});
    for (int v = 0; v < m.n_nodes(); ++v) {
        if (v == 2 || std::binary_search(desc.begin(), desc.end(), v)) continue;
        CHECK(with_do.col(v) == s.values.col(v));
    }
}

TEST_CASE("paired noise makes the linear effect exact") {
    // 0 -> 1 with V1 = 2 V0 + u.
    auto m = linear_chain(2.0);
    RngStream rng(6, "scm");
    Eigen::MatrixXd u(10000, 2);
    for (int j = 0; j < 2; ++j) u.col(j) = sample_noise(m.noise[static_cast<size_t>(j)], 10000, rng);
    auto arm_t = forward_eval_do(m, u, {{0, 1.0}});
    auto arm_c = forward_eval_do(m, u, {{0, 0.0}});
    Eigen::VectorXd diff = arm_t.col(1) - arm_c.col(1);
    CHECK(diff.minCoeff() == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(diff.maxCoeff() == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("abduction with no factuals keeps every row") {
    auto m = linear_chain(1.0);
    RngStream rng(7, "scm");
    auto ab = abduct(m, 1000, {}, {}, nullptr, rng);
    CHECK(ab.noise_rows.rows() == 1000);
    CHECK(std::abs(ab.weights.sum() - 1.0) < 1e-12);
    CHECK(ab.weights.minCoeff() == ab.weights.maxCoeff());
}

TEST_CASE("abduction on a deterministic model recovers the consistent class") {
    // Deterministic: single region per node; the factual fixes everything.
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {0}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {tabular_mech({}, 2, {0.0, 0.6, 1.0}, {{0}, {1}}),
                    tabular_mech({2}, 2, {0.0, 1.0}, {{1, 0}})};  // V1 = 1 - V0
    m.noise = {unit_noise(), unit_noise()};
    m.cardinality = {2, 2};
    m.discrete = true;

    RngStream rng(8, "scm");
    auto ab = abduct(m, 5000, {0, 1}, {1.0, 0.0}, nullptr, rng);
    CHECK(ab.noise_rows.rows() > 0);
    // Every surviving noise row reproduces the factual.
    auto values = forward_eval(m, ab.noise_rows);
    CHECK((values.col(0).array() == 1.0).all());
    CHECK((values.col(1).array() == 0.0).all());
    // And the posterior mass matches P(V0 = 1) = 0.4 within Monte-Carlo error.
    double frac = static_cast<double>(ab.noise_rows.rows()) / 5000.0;
    CHECK(std::abs(frac - 0.4) < 0.03);
}

TEST_CASE("binary posterior matches the Bayes computation") {
    // 0 -> 1, P(V0=1) = 0.5; V1 = V0 with prob 0.7 else 1 - V0.
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {0}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {fair_coin(),
                    tabular_mech({2}, 2, {0.0, 0.7, 1.0}, {{0, 1}, {1, 0}})};
    m.noise = {unit_noise(), unit_noise()};
    m.cardinality = {2, 2};
    m.discrete = true;

    RngStream rng(9, "scm");
    auto ab = abduct(m, 200000, {1}, {1.0}, nullptr, rng);
    // P(V0 = 1 | V1 = 1) = 0.7*0.5 / (0.7*0.5 + 0.3*0.5) = 0.7.
    auto values = forward_eval(m, ab.noise_rows);
    double p = values.col(0).mean();
    CHECK(std::abs(p - 0.7) < 0.01);
}

TEST_CASE("continuous abduction weights rows by the kernel") {
    auto m = linear_chain(1.0);
    RngStream rng(10, "scm");
    KernelConfig kernel{KernelKind::Epsilon, 0.05, {}};
    auto ab = abduct(m, 20000, {0}, {0.5}, &kernel, rng);
    CHECK(ab.noise_rows.rows() > 0);
    auto values = forward_eval(m, ab.noise_rows);
    CHECK((values.col(0).array() - 0.5).abs().maxCoeff() <= 0.05);
    CHECK(std::abs(ab.weights.sum() - 1.0) < 1e-9);
}

TEST_CASE("csv output round trips exactly") {
    auto m = linear_chain(0.5);
    RngStream rng(11, "scm");
    auto s = forward_sample(m, 100, rng);
    std::ostringstream out;
    write_csv(out, s.values, {"v0", "v1"});
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "v0,v1");
    for (long i = 0; i < 100; ++i) {
        std::string line;
        REQUIRE(std::getline(in, line));
        auto comma = line.find(',');
        CHECK(std::stod(line.substr(0, comma)) == s.values(i, 0));
        CHECK(std::stod(line.substr(comma + 1)) == s.values(i, 1));
    }
}
