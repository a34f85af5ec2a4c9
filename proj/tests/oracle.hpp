#pragma once

// Test-only oracles, kept independent of the library's algorithms:
//  - d-separation by exhaustive simple-path enumeration;
//  - exact query values for small discrete models by enumerating every
//    combination of noise regions.

#include <map>
#include <vector>

#include "scmbench/queries.hpp"
#include "scmbench/scm.hpp"

namespace scmbench::testing {

bool oracle_d_separated(const CausalGraph& g, int a, int b, const std::vector<int>& cond);

class ExactDiscreteOracle {
public:
    explicit ExactDiscreteOracle(const Scm& m);

    // Exact joint over all node values under an optional intervention.
    std::map<std::vector<int>, double> joint(const std::map<int, double>& do_map) const;

    double ate(const Query& q) const;
    double cate(const Query& q) const;     // NaN when the stratum has no mass
    double ctf_te(const Query& q) const;   // NaN when the posterior is empty
    double value(const Query& q) const;

private:
    template <typename Fn>
    void for_each_combo(Fn&& fn) const;  // fn(probability, region index per node)

    std::vector<int> eval_combo(const std::vector<int>& regions,
                                const std::map<int, double>& do_map) const;

    const Scm* m_;
    std::vector<std::vector<double>> region_probs_;
};

}  // namespace scmbench::testing
