#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "scmbench/analysis.hpp"

using namespace scmbench;
using namespace scmbench::testing;

TEST_CASE("empty graph metrics are all zero") {
    CausalGraph g;
    g.n = 4;
    g.parents = {{}, {}, {}, {}};
    g.is_hidden.assign(4, 0);
    auto b = graph_metrics(g);
    CHECK(b.in_degree_mean == 0.0);
    CHECK(b.ancestors_mean == 0.0);
    CHECK(b.path_len_mean == 0.0);
    CHECK(b.path_len_max == 0);
    CHECK(b.path_count == 0);
    CHECK(b.paths_exact);
}

TEST_CASE("chain of three path statistics") {
    CausalGraph g;
    g.n = 3;
    g.parents = {{}, {0}, {1}};
    g.is_hidden.assign(3, 0);
    auto b = graph_metrics(g);
    CHECK(b.in_degree_mean == doctest::Approx(2.0 / 3.0));
    CHECK(b.path_count == 3);  // 0->1, 1->2, 0->1->2
    CHECK(b.path_len_mean == doctest::Approx(4.0 / 3.0));
    CHECK(b.path_len_max == 2);
    CHECK(b.ancestors_mean == doctest::Approx((0 + 1 + 2) / 3.0));
    CHECK(b.descendants_mean == doctest::Approx((2 + 1 + 0) / 3.0));
}

TEST_CASE("complete dag mean in-degree") {
    CausalGraph g;
    g.n = 4;
    g.parents = {{}, {0}, {0, 1}, {0, 1, 2}};
    g.is_hidden.assign(4, 0);
    auto b = graph_metrics(g);
    CHECK(b.in_degree_mean == doctest::Approx(6.0 / 4.0));
}

TEST_CASE("path budget flags approximate statistics") {
    CausalGraph g;
    g.n = 16;
    g.parents.resize(16);
    g.is_hidden.assign(16, 0);
    for (int i = 1; i < 16; ++i)
        for (int j = 0; j < i; ++j) g.parents[i].push_back(j);
    auto b = graph_metrics(g, 1000);
    CHECK_FALSE(b.paths_exact);
    CHECK(b.path_count <= 1000);
}

TEST_CASE("projected metrics count siblings and c-components") {
    Admg a;
    a.nodes = {0, 1, 2, 3};
    a.bidirected = {{0, 1}};
    auto b = projected_metrics(a);
    CHECK(b.siblings_mean == doctest::Approx(2.0 / 4.0));
    CHECK(b.c_component_count == 3);  // {0,1}, {2}, {3}
    CHECK(b.c_size_mean == doctest::Approx(4.0 / 3.0));

    Admg none;
    none.nodes = {0, 1, 2};
    auto nb = projected_metrics(none);
    CHECK(nb.siblings_mean == 0.0);
    CHECK(nb.c_component_count == 3);
    CHECK(nb.c_size_mean == 1.0);
}

namespace {

Scm independent_coins(int k) {
    Scm m;
    m.graph.n = k;
    m.graph.parents.assign(static_cast<size_t>(k), {});
    m.graph.is_hidden.assign(static_cast<size_t>(k), 0);
    for (int i = 0; i < k; ++i) m.mechanisms.push_back(fair_coin());
    m.noise.assign(static_cast<size_t>(k), unit_noise());
    m.cardinality.assign(static_cast<size_t>(k), 2);
    m.discrete = true;
    return m;
}

}  // namespace

TEST_CASE("independent fair coins have uniform joint statistics") {
    auto m = independent_coins(3);
    RngStream rng(1, "an");
    auto d = distribution_metrics(m, 1000000, rng);
    CHECK(d.domain_cells == 8.0);
    CHECK(d.joint_min_prob > 0.0);
    CHECK(d.zero_prob_fraction == 0.0);
    CHECK(std::abs(d.joint_entropy - 3 * std::log(2.0)) < 0.02);
    CHECK(d.joint_l1_uniform < 0.01);
    CHECK(d.marginal_l1_mean < 0.01);
    CHECK(std::abs(d.marginal_min_prob - 0.5) < 0.01);
}

TEST_CASE("deterministic point mass statistics") {
    // Two nodes, each constant 0 (single region, constant mapping).
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {tabular_mech({}, 2, {0.0, 1.0}, {{0}}), tabular_mech({}, 2, {0.0, 1.0}, {{0}})};
    m.noise = {unit_noise(), unit_noise()};
    m.cardinality = {2, 2};
    m.discrete = true;
    RngStream rng(2, "an");
    auto d = distribution_metrics(m, 10000, rng);
    CHECK(d.joint_min_prob == 0.0);  // three of four cells unrealized
    CHECK(d.zero_prob_fraction == doctest::Approx(3.0 / 4.0));
    CHECK(d.joint_entropy == 0.0);
    auto rep = assumption_report(m, d);
    REQUIRE(rep.strong_positivity.has_value());
    CHECK_FALSE(*rep.strong_positivity);
    REQUIRE(rep.weak_positivity.has_value());
    CHECK_FALSE(*rep.weak_positivity);
}

TEST_CASE("joint probabilities sum to one") {
    auto soi = discrete_grid_soi(4, 0.5, 5, 3);
    auto m = sample_scm(soi, 9, 0);
    RngStream rng(3, "an");
    auto d = distribution_metrics(m, 50000, rng);
    // zero_prob_fraction and l1 are consistent only if the realized mass is 1:
    // recompute the sum via entropy bookkeeping is awkward, so check bounds.
    CHECK(d.zero_prob_fraction >= 0.0);
    CHECK(d.zero_prob_fraction <= 1.0);
    CHECK(d.joint_entropy >= 0.0);
    CHECK(d.joint_l1_uniform >= 0.0);
    CHECK(d.joint_l1_uniform <= 2.0 + 1e-9);
}

TEST_CASE("strong positivity implies weak positivity") {
    RngStream seed_rng(4, "an");
    for (int rep = 0; rep < 10; ++rep) {
        auto soi = discrete_grid_soi(3 + rep % 3, 0.4, 4, 2);
        auto m = sample_scm(soi, 100 + rep, 0);
        RngStream rng(5, "an", static_cast<uint64_t>(rep));
        auto d = distribution_metrics(m, 20000, rng);
        auto rep_out = assumption_report(m, d);
        if (rep_out.strong_positivity.value()) CHECK(rep_out.weak_positivity.value());
        CHECK(rep_out.markovian);
        CHECK(rep_out.causal_sufficiency);
    }
}

TEST_CASE("linear mechanism parent correlation is one") {
    // V1 = 2 V0 + u with a vanishing noise span: the parent pair is exactly
    // linear up to the negligible noise contribution.
    Scm m = linear_chain(2.0);
    m.noise[1] = {NoiseSpec::Kind::Uniform, 0.0, 1e-9};
    RngStream rng(6, "an");
    Eigen::MatrixXd probe = forward_sample(m, 4096, rng).values;
    auto c = mechanism_input_correlations(m, 1, probe, 16, 1000000);
    REQUIRE(c.pearson.size() == 2);  // parent axis, noise axis
    CHECK(c.pearson[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.spearman[0] > 0.99);
}

TEST_CASE("monotone decreasing table gives pearson and spearman of minus one") {
    // V1 = 3 - V0 through a single-region table: no noise influence at all.
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {0}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {tabular_mech({}, 4, {0.0, 0.25, 0.5, 0.75, 1.0}, {{0}, {1}, {2}, {3}}),
                    tabular_mech({4}, 4, {0.0, 1.0}, {{3, 2, 1, 0}})};
    m.noise = {unit_noise(), unit_noise()};
    m.cardinality = {4, 4};
    m.discrete = true;
    Eigen::MatrixXd probe;
    auto c = mechanism_input_correlations(m, 1, probe, 16, 1000000);
    REQUIRE(c.pearson.size() == 2);
    CHECK(c.pearson[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(c.spearman[0] == doctest::Approx(-1.0).epsilon(1e-12));
    // The noise axis carries no influence: zero covariance by symmetry.
    CHECK(std::abs(c.pearson[1]) < 1e-12);
    CHECK(c.cond_entropy == 0.0);

    // Identity mapping flips the sign.
    m.mechanisms[1] = tabular_mech({4}, 4, {0.0, 1.0}, {{0, 1, 2, 3}});
    auto ci = mechanism_input_correlations(m, 1, probe, 16, 1000000);
    CHECK(ci.pearson[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ci.spearman[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-region tabular mechanisms have zero conditional entropy") {
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {0}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {tabular_mech({}, 2, {0.0, 1.0}, {{1}}),
                    tabular_mech({2}, 2, {0.0, 1.0}, {{1, 0}})};
    m.noise = {unit_noise(), unit_noise()};
    m.cardinality = {2, 2};
    m.discrete = true;
    RngStream rng(8, "an");
    auto b = mechanism_metrics(m, rng, 16, 1000000);
    CHECK(b.cond_entropy_mean == 0.0);
    CHECK(b.cond_entropy_var == 0.0);
}

TEST_CASE("grid budget overflow is reported and skipped in the bundle") {
    auto soi = discrete_grid_soi(4, 0.9, 4, 2);
    auto m = sample_scm(soi, 10, 0);
    RngStream rng(9, "an");
    CHECK_THROWS_AS(mechanism_metrics(m, rng, 16, 4), BudgetError);
    RngStream rng2(10, "an");
    auto rep = compute_metrics(m, 1000, rng2, 16, 4);
    CHECK_FALSE(rep.mechanism.has_value());
    CHECK_FALSE(rep.mechanism_skip_reason.empty());
}

TEST_CASE("metrics report serializes to a flat map plus csv row") {
    auto soi = discrete_grid_soi(4, 0.5, 4, 2);
    auto m = sample_scm(soi, 11, 0);
    RngStream rng(11, "an");
    auto rep = compute_metrics(m, 5000, rng);
    auto j = metrics_to_json(rep);
    CHECK(j.contains("in_degree_mean"));
    CHECK(j.contains("joint_entropy"));
    CHECK(j.contains("pearson_mean"));
    CHECK(j["assumptions"].contains("strong_positivity"));
    auto cols = metric_csv_columns();
    auto row = metric_csv_row(rep);
    CHECK(cols.size() == row.size());
}

TEST_CASE("continuous models fall back to binned entropy") {
    auto m = linear_chain(1.0);
    RngStream rng(12, "an");
    auto d = distribution_metrics(m, 20000, rng);
    CHECK(d.approximate);
    CHECK(d.joint_entropy > 0.0);
    CHECK(std::isnan(d.joint_min_prob));
    auto rep = assumption_report(m, d);
    CHECK_FALSE(rep.strong_positivity.has_value());
}
