#ifndef GLF_KERNELS_HPP
#define GLF_KERNELS_HPP

#include <string>
#include <vector>

#include "glf/linalg.hpp"

namespace glf {

enum class KernelFamily { gaussian, matern, laplacian, cauchy, reciprocal_semigroup };

enum class FeatureKind {
    fourier,            // phi(x,eta) = e^{-i x'eta}
    exponential_decay,  // phi(x,eta) = e^{-eta'x}, nonnegative data and frequencies
};

KernelFamily parse_family(const std::string& name);
std::string family_name(KernelFamily family);

/// A parameterized kernel family: exact evaluator, spectral density with its
/// theta0-gradient, feature function, decay-class metadata and the data
/// bounding box R (data lies in prod [-R_k/2, R_k/2], or prod [0, R_k] for
/// the semigroup family).
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    int dim = 1;
    bool anisotropic = false;  // per-dimension lengthscales in theta0
    double nu = 2.5;           // matern smoothness
    std::vector<double> bounding_box;

    FeatureKind feature_kind() const {
        return family == KernelFamily::reciprocal_semigroup ? FeatureKind::exponential_decay
                                                            : FeatureKind::fourier;
    }
    int theta0_size() const { return anisotropic ? dim : 1; }
    void validate() const;

    static KernelSpec make(KernelFamily family, int dim, std::vector<double> bounding_box,
                           bool anisotropic = false, double nu = 2.5);
};

/// theta = [theta0, sigma_f^2, sigma_n^2]; theta0 holds the lengthscales
/// (or the semigroup rate lambda).
struct HyperParams {
    Vector theta0;
    double sf2 = 1.0;
    double sn2 = 0.0;

    double length(const KernelSpec& spec, int k) const {
        return theta0[spec.anisotropic ? k : 0];
    }
    void validate(const KernelSpec& spec) const;
};

/// Box constraints on (theta0, sigma_f^2, sigma_n^2). The corner
/// [theta0_lo, sf2_hi, sn2_lo] is the worst case for the truncation and
/// quadrature bounds and the starting point for hyperparameter learning.
struct HyperDomain {
    Vector theta0_lo, theta0_hi;
    double sf2_lo = 0.0, sf2_hi = 0.0;
    double sn2_lo = 0.0, sn2_hi = 0.0;

    HyperParams corner() const { return HyperParams{theta0_lo, sf2_hi, sn2_lo}; }
    void validate(const KernelSpec& spec) const;
};

enum class DecayClass { poly, poly_r, exp1, exp2 };

struct DecayClassInfo {
    DecayClass cls = DecayClass::exp2;
    double C = 0.0;
    std::vector<double> L;
    double r = 0.0;  // only for poly_r (matern: r = nu + d/2)
};

// Exact kernel value sigma_f^2 k0(...) + sigma_n^2 gamma(x - x'); gamma fires
// only on exact equality of the points.
double eval_kernel(const KernelSpec& spec, const HyperParams& theta, const double* x,
                   const double* xp);
double eval_kernel(const KernelSpec& spec, const HyperParams& theta, const Vector& x,
                   const Vector& xp);

// Spectral density p(eta; theta0). Normalization conventions follow the
// kernel/density pairing: Cauchy integrates to prod 2/ell_k and the d-variate
// semigroup density to lambda^{1-d}; the other families integrate to 1.
double spectral_density(const KernelSpec& spec, const Vector& theta0, const double* eta);

// Componentwise d p / d theta0.
Vector density_grad(const KernelSpec& spec, const Vector& theta0, const double* eta);

// Worst-case decay-class constants over the domain, evaluated at the corner
// (smallest lengthscales).
DecayClassInfo decay_class(const KernelSpec& spec, const HyperDomain& domain);

// d k / d theta0 of the exact kernel (used by the dense baseline's gradient).
Vector kernel_grad_theta0(const KernelSpec& spec, const HyperParams& theta, const double* x,
                          const double* xp);

}  // namespace glf

#endif
