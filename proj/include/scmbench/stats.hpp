#pragma once

#include <vector>

#include "scmbench/common.hpp"

namespace scmbench {

// Regularized upper incomplete gamma Q(a, x); chi2_sf(x, df) = Q(df/2, x/2).
double gamma_q(double a, double x);
double chi2_sf(double x, long df);

struct Chi2Result {
    double statistic = 0.0;
    long df = 0;
    double p_value = 1.0;
    bool valid = false;  // false: degenerate table, stratum counts as a skip
};

// Pearson independence test on an r x c count table. All-zero rows/columns
// are dropped before degrees of freedom are computed.
Chi2Result chi2_independence(const std::vector<std::vector<double>>& counts);

// Goodness of fit of observed counts against expected counts (same total up
// to scaling; expected is rescaled to the observed total). Cells that are
// zero on both sides are dropped.
Chi2Result chi2_gof(const std::vector<double>& observed, const std::vector<double>& expected);

// Benjamini-Hochberg step-up at level alpha; true marks a rejection.
std::vector<bool> bh_correct(const std::vector<double>& p_values, double alpha);

// Sample-size adequacy surrogate for the chi-squared approximation: the
// stratum must hold at least 5 samples per cell and every expected count
// must reach 1 (computed after dropping zero margins / both-zero cells).
bool koehler_ok_independence(const std::vector<std::vector<double>>& counts);
bool koehler_ok_gof(const std::vector<double>& observed, const std::vector<double>& expected);

}  // namespace scmbench
