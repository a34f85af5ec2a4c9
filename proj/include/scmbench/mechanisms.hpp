#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "scmbench/common.hpp"
#include "scmbench/rng.hpp"

namespace scmbench {

// Tabular mechanism over a partition of the noise support: region r carries
// one parents-to-child mapping. Parent configurations index mappings in
// mixed radix with the first parent least significant.
struct RegionalMechanism {
    int child_card = 2;
    std::vector<int> parent_cards;
    std::vector<double> boundaries;               // R+1 ascending; spans the noise support
    std::vector<std::vector<uint16_t>> mappings;  // R tables of size n_configs()

    long regions() const { return static_cast<long>(mappings.size()); }
    long n_configs() const;
    long region_of(double u) const;  // half-open intervals, last one closed
    long config_index(const double* pa) const;
    double eval(const double* pa, double u) const;
};

struct LinearMechanism {
    Eigen::VectorXd weights;  // one per parent
};

struct NeuralMechanism {
    std::vector<Eigen::MatrixXd> weights;  // layer l maps in -> out as (out x in)
    std::vector<Eigen::VectorXd> biases;   // rectifier between layers, none after the last
};

struct Mechanism {
    MechanismFamily family = MechanismFamily::Linear;
    NoiseMode noise_mode = NoiseMode::Additive;  // ignored for tabular
    RegionalMechanism tabular;
    LinearMechanism linear;
    NeuralMechanism neural;

    int arity() const;

    // Vectorized evaluation over n samples: pa is n x arity, u is length n.
    Eigen::VectorXd eval(const Eigen::MatrixXd& pa, const Eigen::VectorXd& u) const;

    // Scalar evaluation (grid probes).
    double eval1(const double* pa, double u) const;
};

// base^exp, clamped to cap+1 when it would exceed cap.
long pow_capped(long base, long exp, long cap);

// Algorithm: effective region count R' = min(R, C^{n_configs}); boundaries
// are R'-1 sorted uniform draws over the noise support plus its endpoints;
// mappings resample until distinct from all prior ones.
RegionalMechanism sample_regional_rejection(const std::vector<int>& parent_cards, int child_card,
                                            long regions, const NoiseSpec& omega_u, RngStream& rng,
                                            long table_budget);

// One region per possible mapping; the full function space is covered.
RegionalMechanism sample_regional_exhaustive(const std::vector<int>& parent_cards, int child_card,
                                             const NoiseSpec& omega_u, RngStream& rng,
                                             long table_budget);

// Mappings drawn independently; duplicates permitted.
RegionalMechanism sample_regional_unbiased(const std::vector<int>& parent_cards, int child_card,
                                           long regions, const NoiseSpec& omega_u, RngStream& rng,
                                           long table_budget);

// Linear: weights i.i.d. Uniform[-1, 1]. Neural: dense rectifier network,
// default two hidden layers of width 8; args may set "hidden_layers".
Mechanism sample_continuous_mechanism(MechanismFamily family, int n_parents,
                                      const nlohmann::json& args, NoiseMode mode, RngStream& rng);

Eigen::VectorXd sample_noise(const NoiseSpec& spec, long n, RngStream& rng);

nlohmann::json mechanism_to_json(const Mechanism& m);
Mechanism mechanism_from_json(const nlohmann::json& j);

}  // namespace scmbench
