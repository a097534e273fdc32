#ifndef GLF_BOUNDS_HPP
#define GLF_BOUNDS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "glf/kernels.hpp"

namespace glf {

/// Spectral-equivalence budget for a target dataset size: the truncation and
/// quadrature halves of the error split each get 1/(2 sigma_f0^2 n).
struct EquivalenceBudget {
    std::int64_t n = 0;
    HyperDomain domain;
    double per_term_tolerance() const { return 1.0 / (2.0 * domain.sf2_hi * n); }
};

/// Bernstein polyellipse data for the quadrature-size bound. rho_k is the
/// sum of semi-axes of the ellipse with foci +-U_k through i beta_k / 2.
/// M and C can overflow double for aggressive corners, so their logs are
/// carried alongside and are what the size bound consumes.
struct PolyellipseParams {
    std::vector<double> beta;
    std::vector<double> rho;
    double M_R = 1.0;
    double M_Ubeta = 0.0;
    double C_Ubeta = 0.0;
    double log_M_Ubeta = 0.0;
    double log_C_Ubeta = 0.0;
};

/// Full parameter plan: truncation box, polyellipse constants and
/// per-dimension quadrature sizes for n-spectral equivalence over the domain.
struct BoundPlan {
    std::vector<double> U;
    std::vector<int> s;
    PolyellipseParams pe;
    DecayClassInfo decay;
    std::int64_t n = 0;
    std::int64_t s_total = 0;
    std::int64_t s_cap = 0;
    bool exceeds_cap = false;
    bool s_exceeds_n = false;

    std::string report(const KernelSpec& spec) const;
};

// Minimal truncation half-widths U^(min) making the tail term of the error
// split <= 1/(2 sigma_f0^2 n), per decay class at the domain corner. The
// poly_r class solves its defining equation by bisection with an
// adaptive-quadrature tail integral.
std::vector<double> compute_umin(const KernelSpec& spec, const HyperDomain& domain,
                                 std::int64_t n);

// Polyellipse parameters and the bound constants M_{U,beta}, C_{U,beta} for
// the families with worked constants (gaussian, matern, semigroup); the
// Laplacian/Cauchy Fourier densities have no supported polyellipse constants
// and raise unsupported_analyticity.
PolyellipseParams polyellipse_params(const KernelSpec& spec, const HyperDomain& domain,
                                     const std::vector<double>& U);

// Per-dimension quadrature sizes: ceil of
//   [ (1/d) ln(2^{2d+2} M^2 C n^2 sigma_f0^2 / sigma_n0^2) + ln U_k
//     - ln(rho_k - 1) ] / (2 ln rho_k) + 1,
// with a minimum of 1.
std::vector<int> compute_s(const KernelSpec& spec, const HyperDomain& domain, std::int64_t n,
                           const std::vector<double>& U, const PolyellipseParams& pe);

// compute_umin -> polyellipse_params -> compute_s, wrapped in a report.
// Plans whose s_total exceeds the cap are returned intact with the flag set;
// nothing is silently truncated.
BoundPlan plan(const KernelSpec& spec, const HyperDomain& domain, std::int64_t n,
               std::int64_t s_cap = 1000000);

// Tail integral for the poly_r class, int_{m2}^inf t^{d/2-1} (1+t)^{-r} dt,
// by adaptive quadrature in trigonometric variables. Exposed for tests.
double poly_r_tail(double m2, int d, double r);

}  // namespace glf

#endif
