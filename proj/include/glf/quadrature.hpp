#ifndef GLF_QUADRATURE_HPP
#define GLF_QUADRATURE_HPP

#include <cstdint>
#include <memory>
#include <vector>

namespace glf {

/// One-dimensional Gauss-Legendre rule on [-1,1].
///
/// Nodes are strictly increasing and exactly antisymmetric about 0
/// (node[i] == -node[m-1-i] bitwise); weights are positive, symmetric and
/// sum to 2. The rule integrates polynomials of degree <= 2m-1 exactly.
struct GaussLegendreRule {
    int m = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes by Newton iteration on P_m with Chebyshev-point initial guesses;
// deterministic, and cached per m behind a mutex (rules are immutable).
const GaussLegendreRule& gauss_legendre(int m);

enum class DomainKind {
    symmetric_box,  // product of [-U_k, U_k]
    positive_box,   // product of [0, U_k]
};

/// Tensorized, box-scaled Gauss-Legendre grid with a fixed row-major
/// flattening of the per-dimension indices (last index fastest).
struct QuadratureGrid {
    int dim = 0;
    DomainKind domain = DomainKind::symmetric_box;
    std::vector<double> U;       // truncation half-widths, one per dimension
    std::vector<int> s;          // per-dimension rule sizes
    std::int64_t total_size = 0; // prod s_k
    std::vector<double> nodes;   // total_size x dim, row-major
    std::vector<double> base_weights;  // total_size

    const double* node(std::int64_t j) const { return nodes.data() + j * dim; }

    std::int64_t flatten(const std::vector<int>& idx) const;
    std::vector<int> unflatten(std::int64_t j) const;
};

// Flattened node j has components U_k * chi_{j_k} (symmetric box) or
// U_k * (chi_{j_k}+1)/2 (positive box); base weights are prod_k U_k w_{j_k}
// and prod_k U_k w_{j_k}/2 respectively, so the weight total equals the box
// volume. Rejects grids with more than 10^8 points.
QuadratureGrid tensor_grid(const std::vector<double>& U, const std::vector<int>& s,
                           DomainKind domain);

}  // namespace glf

#endif
