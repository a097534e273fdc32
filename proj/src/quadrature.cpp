#include "glf/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "glf/errors.hpp"

namespace glf {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Evaluate P_m(x) and P_m'(x) by the three-term recurrence.
void legendre_pair(int m, double x, double& p, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 1; k < m; ++k) {
        double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
    }
    p = (m == 0) ? 1.0 : p1;
    dp = (m == 0) ? 0.0 : m * (x * p1 - p0) / (x * x - 1.0);
}

GaussLegendreRule build_rule(int m) {
    GaussLegendreRule rule;
    rule.m = m;
    rule.nodes.assign(m, 0.0);
    rule.weights.assign(m, 0.0);
    if (m == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
        return rule;
    }
    // Compute the negative half; mirror for exact symmetry. The midpoint node
    // of an odd rule is 0 with weight 2/P_m'(0)^2.
    int half = m / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-point guess for the i-th smallest root.
        double x = -std::cos(kPi * (i + 0.75) / (m + 0.5));
        double p, dp;
        for (int it = 0; it < 100; ++it) {
            legendre_pair(m, x, p, dp);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15 && std::abs(p) < 1e-14) break;
        }
        legendre_pair(m, x, p, dp);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = x;
        rule.weights[i] = w;
        rule.nodes[m - 1 - i] = -x;
        rule.weights[m - 1 - i] = w;
    }
    if (m % 2 == 1) {
        double p, dp;
        legendre_pair(m, 0.0, p, dp);
        rule.nodes[half] = 0.0;
        rule.weights[half] = 2.0 / (dp * dp);
    }
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int m) {
    if (m < 1) throw validation_error("gauss_legendre: m must be >= 1");
    if (m > 100000) throw validation_error("gauss_legendre: m too large (max 1e5)");
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<const GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(m);
    if (it == cache.end()) {
        it = cache.emplace(m, std::make_unique<const GaussLegendreRule>(build_rule(m))).first;
    }
    return *it->second;
}

std::int64_t QuadratureGrid::flatten(const std::vector<int>& idx) const {
    if (static_cast<int>(idx.size()) != dim)
        throw validation_error("flatten: index dimension mismatch");
    std::int64_t j = 0;
    for (int k = 0; k < dim; ++k) {
        if (idx[k] < 0 || idx[k] >= s[k]) throw validation_error("flatten: index out of range");
        j = j * s[k] + idx[k];
    }
    return j;
}

std::vector<int> QuadratureGrid::unflatten(std::int64_t j) const {
    if (j < 0 || j >= total_size) throw validation_error("unflatten: index out of range");
    std::vector<int> idx(dim);
    for (int k = dim - 1; k >= 0; --k) {
        idx[k] = static_cast<int>(j % s[k]);
        j /= s[k];
    }
    return idx;
}

QuadratureGrid tensor_grid(const std::vector<double>& U, const std::vector<int>& s,
                           DomainKind domain) {
    const int d = static_cast<int>(U.size());
    if (d < 1 || s.size() != U.size())
        throw validation_error("tensor_grid: U and s must have equal positive length");
    std::int64_t total = 1;
    for (int k = 0; k < d; ++k) {
        if (!(U[k] > 0.0)) throw validation_error("tensor_grid: U components must be positive");
        if (s[k] < 1) throw validation_error("tensor_grid: s components must be >= 1");
        total *= s[k];
        if (total > 100000000)
            throw capacity_error("tensor_grid: grid exceeds 1e8 points");
    }

    QuadratureGrid grid;
    grid.dim = d;
    grid.domain = domain;
    grid.U = U;
    grid.s = s;
    grid.total_size = total;
    grid.nodes.assign(static_cast<std::size_t>(total) * d, 0.0);
    grid.base_weights.assign(total, 0.0);

    std::vector<const GaussLegendreRule*> rules(d);
    for (int k = 0; k < d; ++k) rules[k] = &gauss_legendre(s[k]);

    const bool positive = (domain == DomainKind::positive_box);
    std::vector<int> idx(d, 0);
    for (std::int64_t j = 0; j < total; ++j) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            double chi = rules[k]->nodes[idx[k]];
            double wk = rules[k]->weights[idx[k]];
            if (positive) {
                grid.nodes[j * d + k] = U[k] * (chi + 1.0) * 0.5;
                w *= U[k] * wk * 0.5;
            } else {
                grid.nodes[j * d + k] = U[k] * chi;
                w *= U[k] * wk;
            }
        }
        grid.base_weights[j] = w;
        // advance the multi-index, last dimension fastest
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[k] < s[k]) break;
            idx[k] = 0;
        }
    }
    return grid;
}

}  // namespace glf
