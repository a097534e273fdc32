#ifndef GLF_DIAGNOSTICS_HPP
#define GLF_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "glf/kernels.hpp"
#include "glf/linalg.hpp"
#include "glf/quadrature.hpp"

namespace glf {

/// Certification data for one (K, Ktilde) pair: the generalized eigenvalue
/// band of Ktilde v = lambda K v against the required (1 +- 1/n) band, and
/// the KL divergence between the induced zero-mean Gaussian priors.
struct EquivalenceReport {
    std::int64_t n = 0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double band_lo = 0.0;  // 1 - 1/n
    double band_hi = 0.0;  // 1 + 1/n
    bool pass = false;
    double kl = 0.0;
    double kl_bound = 0.0;  // 1 + 2/n

    std::string summary() const;
};

// Generalized eigenvalues via K = R^T R and a symmetric eigensolve of
// R^{-T} Ktilde R^{-1}. Both inputs must be symmetric; K positive definite.
EquivalenceReport spectral_equivalence_check(const Matrix& K, const Matrix& Ktilde);

// KL(N(mu0,S0) || N(mu1,S1)) for equal means (the prior comparison case).
double kl_divergence(const Matrix& S0, const Matrix& S1);
// General form with a mean shift.
double kl_divergence(const Matrix& S0, const Matrix& S1, const Vector& mu0, const Vector& mu1);

// Tail-mass bound n sigma_n^{-2} M_R^2 int_{|eta|>=U} p(eta) d eta for d=1,
// by adaptive quadrature of the actual density (two-sided for Fourier
// families, one-sided for the semigroup).
double truncation_probe(const KernelSpec& spec, const HyperParams& corner, double U,
                        std::int64_t n);

/// Empirical sup|ktilde - k| over sampled pairs for each quadrature size in
/// the sweep (fixed U).
struct QuadratureProbeRow {
    int s = 0;
    double sup_error = 0.0;
};

std::vector<QuadratureProbeRow> quadrature_probe(const KernelSpec& spec,
                                                 const HyperParams& theta, double U,
                                                 const std::vector<int>& s_sweep, int n_pairs,
                                                 std::uint64_t seed);

}  // namespace glf

#endif
