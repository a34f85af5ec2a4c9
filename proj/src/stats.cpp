#include "scmbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scmbench {

namespace {

// Lower regularized incomplete gamma by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0 || x < 0) throw ParamError("gamma_q: need a > 0, x >= 0");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double x, long df) {
    if (df < 1) throw ParamError("chi2_sf: df must be >= 1");
    if (x <= 0) return 1.0;
    return gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

namespace {

// Drops all-zero rows and columns; returns the reduced table.
std::vector<std::vector<double>> reduce_table(const std::vector<std::vector<double>>& counts) {
    if (counts.empty()) return {};
    const size_t c0 = counts[0].size();
    std::vector<double> rowsum(counts.size(), 0.0), colsum(c0, 0.0);
    for (size_t r = 0; r < counts.size(); ++r) {
        if (counts[r].size() != c0) throw ParamError("chi2: ragged count table");
        for (size_t c = 0; c < c0; ++c) {
            if (counts[r][c] < 0) throw ParamError("chi2: negative count");
            rowsum[r] += counts[r][c];
            colsum[c] += counts[r][c];
        }
    }
    std::vector<std::vector<double>> out;
    for (size_t r = 0; r < counts.size(); ++r) {
        if (rowsum[r] == 0) continue;
        std::vector<double> row;
        for (size_t c = 0; c < c0; ++c)
            if (colsum[c] > 0) row.push_back(counts[r][c]);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

Chi2Result chi2_independence(const std::vector<std::vector<double>>& counts) {
    Chi2Result res;
    auto t = reduce_table(counts);
    const size_t r = t.size();
    const size_t c = r > 0 ? t[0].size() : 0;
    if (r < 2 || c < 2) return res;  // degenerate

    std::vector<double> rowsum(r, 0.0), colsum(c, 0.0);
    double n = 0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            rowsum[i] += t[i][j];
            colsum[j] += t[i][j];
            n += t[i][j];
        }
    double stat = 0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            double e = rowsum[i] * colsum[j] / n;
            double d = t[i][j] - e;
            stat += d * d / e;
        }
    res.statistic = stat;
    res.df = static_cast<long>((r - 1) * (c - 1));
    res.p_value = chi2_sf(stat, res.df);
    res.valid = true;
    return res;
}

Chi2Result chi2_gof(const std::vector<double>& observed, const std::vector<double>& expected) {
    if (observed.size() != expected.size()) throw ParamError("chi2_gof: length mismatch");
    Chi2Result res;
    double n_obs = 0, n_exp = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (observed[i] < 0 || expected[i] < 0) throw ParamError("chi2_gof: negative count");
        n_obs += observed[i];
        n_exp += expected[i];
    }
    if (n_obs == 0 || n_exp == 0) return res;

    double stat = 0;
    long cells = 0;
    bool impossible = false;
    for (size_t i = 0; i < observed.size(); ++i) {
        double e = expected[i] * n_obs / n_exp;
        if (e == 0 && observed[i] == 0) continue;
        if (e == 0) {
            impossible = true;  // mass observed where the reference puts none
            ++cells;
            continue;
        }
        double d = observed[i] - e;
        stat += d * d / e;
        ++cells;
    }
    if (cells < 2) return res;
    res.statistic = impossible ? std::numeric_limits<double>::infinity() : stat;
    res.df = cells - 1;
    res.p_value = impossible ? 0.0 : chi2_sf(stat, res.df);
    res.valid = true;
    return res;
}

std::vector<bool> bh_correct(const std::vector<double>& p_values, double alpha) {
    const size_t m = p_values.size();
    std::vector<bool> reject(m, false);
    if (m == 0) return reject;
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
    long k = -1;  // largest i with p_(i) <= (i+1)/m * alpha
    for (size_t i = 0; i < m; ++i)
        if (p_values[order[i]] <= static_cast<double>(i + 1) / static_cast<double>(m) * alpha)
            k = static_cast<long>(i);
    for (long i = 0; i <= k; ++i) reject[order[static_cast<size_t>(i)]] = true;
    return reject;
}

bool koehler_ok_independence(const std::vector<std::vector<double>>& counts) {
    auto t = reduce_table(counts);
    const size_t r = t.size();
    const size_t c = r > 0 ? t[0].size() : 0;
    if (r < 2 || c < 2) return false;
    std::vector<double> rowsum(r, 0.0), colsum(c, 0.0);
    double n = 0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            rowsum[i] += t[i][j];
            colsum[j] += t[i][j];
            n += t[i][j];
        }
    if (n < 5.0 * static_cast<double>(r * c)) return false;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j)
            if (rowsum[i] * colsum[j] / n < 1.0) return false;
    return true;
}

bool koehler_ok_gof(const std::vector<double>& observed, const std::vector<double>& expected) {
    if (observed.size() != expected.size()) throw ParamError("koehler_ok_gof: length mismatch");
    double n_obs = 0, n_exp = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        n_obs += observed[i];
        n_exp += expected[i];
    }
    if (n_obs == 0 || n_exp == 0) return false;
    long cells = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        double e = expected[i] * n_obs / n_exp;
        if (e == 0 && observed[i] == 0) continue;
        ++cells;
        if (e < 1.0) return false;
    }
    if (cells < 2) return false;
    return n_obs >= 5.0 * static_cast<double>(cells);
}

}  // namespace scmbench
