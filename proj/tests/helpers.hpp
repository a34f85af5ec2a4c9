#pragma once

// Shared SCM builders for the test suites.

#include <sstream>

#include "scmbench/queries.hpp"
#include "scmbench/scm.hpp"

namespace scmbench::testing {

inline Mechanism linear_mech(std::vector<double> weights,
                             NoiseMode mode = NoiseMode::Additive) {
    Mechanism m;
    m.family = MechanismFamily::Linear;
    m.noise_mode = mode;
    m.linear.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<long>(weights.size()));
    return m;
}

inline Mechanism tabular_mech(std::vector<int> parent_cards, int child_card,
                              std::vector<double> boundaries,
                              std::vector<std::vector<uint16_t>> mappings) {
    Mechanism m;
    m.family = MechanismFamily::Tabular;
    m.tabular.child_card = child_card;
    m.tabular.parent_cards = std::move(parent_cards);
    m.tabular.boundaries = std::move(boundaries);
    m.tabular.mappings = std::move(mappings);
    return m;
}

// Chain 0 -> 1 with V1 = w*V0 + u, both noises Uniform[lo, hi).
inline Scm linear_chain(double w, double lo = 0.0, double hi = 1.0) {
    Scm m;
    m.graph.n = 2;
    m.graph.parents = {{}, {0}};
    m.graph.is_hidden = {0, 0};
    m.mechanisms = {linear_mech({}), linear_mech({w})};
    m.noise = {{NoiseSpec::Kind::Uniform, lo, hi}, {NoiseSpec::Kind::Uniform, lo, hi}};
    m.cardinality = {0, 0};
    m.discrete = false;
    return m;
}

// Fair parentless binary node: regions [0, .5) -> 0 and [.5, 1] -> 1.
inline Mechanism fair_coin() {
    return tabular_mech({}, 2, {0.0, 0.5, 1.0}, {{0}, {1}});
}

inline NoiseSpec unit_noise() { return {NoiseSpec::Kind::Uniform, 0.0, 1.0}; }

// SoI document for a discrete grid point parameterized by edge probability
// (expected edges = p * N * (N-1) / 2, so p_edge resolves back to p).
inline SpaceOfInterest discrete_grid_soi(int n, double edge_prob, long regions, int card,
                                         const std::string& strategy = "sample_rejection",
                                         long num_samples = 1000) {
    std::ostringstream doc;
    doc << "{"
        << "\"num_nodes\": [" << n << ", " << n << "],"
        << "\"expected_edges\": \"" << edge_prob << "*N*(N-1)/2\","
        << "\"variable_type\": \"discrete\","
        << "\"mechanism_family\": \"tabular\","
        << "\"discrete_sampling\": \"" << strategy << "\","
        << "\"cardinality\": [" << card << ", " << card << "],"
        << "\"noise_regions\": \"" << regions << "\","
        << "\"noise_distribution\": {\"kind\": \"uniform\", \"args\": [0, 1]},"
        << "\"num_samples\": " << num_samples << "}";
    return parse_soi(doc.str());
}

}  // namespace scmbench::testing
