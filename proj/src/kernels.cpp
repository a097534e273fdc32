#include "glf/kernels.hpp"

#include <cmath>

#include "glf/errors.hpp"
#include "glf/numeric.hpp"

namespace glf {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool points_equal(int d, const double* x, const double* xp) {
    for (int k = 0; k < d; ++k)
        if (x[k] != xp[k]) return false;
    return true;
}

// Matern radial profile at u = sqrt(2 nu) ||L^{-1}(x-x')||.
double matern_profile(double nu, double u) {
    if (u <= 1e-30) return 1.0;
    if (std::abs(nu - 0.5) < 1e-12) return std::exp(-u);
    if (std::abs(nu - 1.5) < 1e-12) return (1.0 + u) * std::exp(-u);
    if (std::abs(nu - 2.5) < 1e-12) return (1.0 + u + u * u / 3.0) * std::exp(-u);
    if (std::abs(nu - 3.5) < 1e-12)
        return (1.0 + u + 0.4 * u * u + u * u * u / 15.0) * std::exp(-u);
    double lg = std::lgamma(nu);
    double val = std::exp((1.0 - nu) * std::log(2.0) - lg + nu * std::log(u)) * bessel_k(nu, u);
    return std::min(val, 1.0);
}

// d/du of the profile, via d/du [u^nu K_nu(u)] = -u^nu K_{nu-1}(u).
double matern_profile_du(double nu, double u) {
    if (u <= 1e-30) return 0.0;
    double lg = std::lgamma(nu);
    return -std::exp((1.0 - nu) * std::log(2.0) - lg + nu * std::log(u)) *
           bessel_k(nu - 1.0, u);
}

}  // namespace

KernelFamily parse_family(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "matern") return KernelFamily::matern;
    if (name == "laplacian") return KernelFamily::laplacian;
    if (name == "cauchy") return KernelFamily::cauchy;
    if (name == "reciprocal_semigroup") return KernelFamily::reciprocal_semigroup;
    throw validation_error("unknown kernel family: " + name);
}

std::string family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::matern: return "matern";
        case KernelFamily::laplacian: return "laplacian";
        case KernelFamily::cauchy: return "cauchy";
        case KernelFamily::reciprocal_semigroup: return "reciprocal_semigroup";
    }
    return "?";
}

void KernelSpec::validate() const {
    if (dim < 1) throw validation_error("KernelSpec: dim must be >= 1");
    if (family == KernelFamily::matern && !(nu > 0.0))
        throw validation_error("KernelSpec: matern nu must be positive");
    if (family == KernelFamily::reciprocal_semigroup && anisotropic)
        throw validation_error("KernelSpec: the semigroup rate is a single scalar");
    if (static_cast<int>(bounding_box.size()) != dim)
        throw validation_error("KernelSpec: bounding_box size must equal dim");
    for (double r : bounding_box)
        if (!(r > 0.0)) throw validation_error("KernelSpec: bounding_box must be positive");
}

KernelSpec KernelSpec::make(KernelFamily family, int dim, std::vector<double> bounding_box,
                            bool anisotropic, double nu) {
    KernelSpec spec;
    spec.family = family;
    spec.dim = dim;
    spec.anisotropic = anisotropic;
    spec.nu = nu;
    spec.bounding_box = std::move(bounding_box);
    spec.validate();
    return spec;
}

void HyperParams::validate(const KernelSpec& spec) const {
    if (theta0.size() != spec.theta0_size())
        throw validation_error("HyperParams: theta0 size mismatch");
    for (int i = 0; i < theta0.size(); ++i)
        if (!(theta0[i] > 0.0)) throw validation_error("HyperParams: theta0 must be positive");
    if (sf2 < 0.0 || sn2 < 0.0)
        throw validation_error("HyperParams: variances must be nonnegative");
}

void HyperDomain::validate(const KernelSpec& spec) const {
    if (theta0_lo.size() != spec.theta0_size() || theta0_hi.size() != spec.theta0_size())
        throw validation_error("HyperDomain: theta0 bound size mismatch");
    for (int i = 0; i < theta0_lo.size(); ++i)
        if (!(theta0_lo[i] > 0.0 && theta0_lo[i] <= theta0_hi[i]))
            throw validation_error("HyperDomain: need 0 < lo <= hi for theta0");
    if (!(sf2_lo > 0.0 && sf2_lo <= sf2_hi))
        throw validation_error("HyperDomain: need 0 < lo <= hi for sigma_f^2");
    if (!(sn2_lo > 0.0 && sn2_lo <= sn2_hi))
        throw validation_error("HyperDomain: need 0 < lo <= hi for sigma_n^2");
}

double eval_kernel(const KernelSpec& spec, const HyperParams& theta, const double* x,
                   const double* xp) {
    theta.validate(spec);
    const int d = spec.dim;
    double k0 = 1.0;
    switch (spec.family) {
        case KernelFamily::gaussian: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double r = (x[k] - xp[k]) / theta.length(spec, k);
                q += r * r;
            }
            k0 = std::exp(-0.5 * q);
            break;
        }
        case KernelFamily::matern: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double r = (x[k] - xp[k]) / theta.length(spec, k);
                q += r * r;
            }
            k0 = matern_profile(spec.nu, std::sqrt(2.0 * spec.nu * q));
            break;
        }
        case KernelFamily::laplacian: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) q += std::abs(x[k] - xp[k]) / theta.length(spec, k);
            k0 = std::exp(-q);
            break;
        }
        case KernelFamily::cauchy: {
            // kept exactly as the 2^d prod ell_k/(ell_k^2 + r_k^2) convention,
            // paired with the e^{-||L eta||_1} density
            k0 = 1.0;
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                double r = x[k] - xp[k];
                k0 *= 2.0 * ell / (ell * ell + r * r);
            }
            break;
        }
        case KernelFamily::reciprocal_semigroup: {
            double lambda = theta.theta0[0];
            k0 = 1.0;
            for (int k = 0; k < d; ++k) {
                if (x[k] < 0.0 || xp[k] < 0.0)
                    throw validation_error("eval_kernel: semigroup data must be nonnegative");
                k0 *= lambda / (x[k] + xp[k] + lambda);
            }
            break;
        }
    }
    double ridge = points_equal(d, x, xp) ? theta.sn2 : 0.0;
    return theta.sf2 * k0 + ridge;
}

double eval_kernel(const KernelSpec& spec, const HyperParams& theta, const Vector& x,
                   const Vector& xp) {
    return eval_kernel(spec, theta, x.data(), xp.data());
}

double spectral_density(const KernelSpec& spec, const Vector& theta0, const double* eta) {
    const int d = spec.dim;
    auto len = [&](int k) { return theta0[spec.anisotropic ? k : 0]; };
    switch (spec.family) {
        case KernelFamily::gaussian: {
            double prod = 1.0, q = 0.0;
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                prod *= ell;
                q += ell * ell * eta[k] * eta[k];
            }
            return prod * std::pow(kTwoPi, -0.5 * d) * std::exp(-0.5 * q);
        }
        case KernelFamily::matern: {
            double nu = spec.nu, r = nu + 0.5 * d;
            double prod = 1.0, q = 0.0;
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                prod *= ell;
                q += ell * ell * eta[k] * eta[k];
            }
            double c = std::exp(std::lgamma(r) - std::lgamma(nu)) *
                       std::pow(2.0 * nu * kPi, -0.5 * d);
            return c * prod * std::pow(1.0 + q / (2.0 * nu), -r);
        }
        case KernelFamily::laplacian: {
            double v = std::pow(kPi, -static_cast<double>(d));
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                v *= ell / (1.0 + ell * ell * eta[k] * eta[k]);
            }
            return v;
        }
        case KernelFamily::cauchy: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) q += len(k) * std::abs(eta[k]);
            return std::exp(-q);
        }
        case KernelFamily::reciprocal_semigroup: {
            double lambda = theta0[0];
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                if (eta[k] < 0.0) return 0.0;
                q += eta[k];
            }
            return lambda * std::exp(-lambda * q);
        }
    }
    return 0.0;
}

Vector density_grad(const KernelSpec& spec, const Vector& theta0, const double* eta) {
    const int d = spec.dim;
    const int nt = spec.theta0_size();
    auto len = [&](int k) { return theta0[spec.anisotropic ? k : 0]; };
    Vector g = Vector::Zero(nt);
    double p = spectral_density(spec, theta0, eta);
    switch (spec.family) {
        case KernelFamily::gaussian: {
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                double term = p * (1.0 / ell - ell * eta[k] * eta[k]);
                g[spec.anisotropic ? k : 0] += term;
            }
            break;
        }
        case KernelFamily::matern: {
            double nu = spec.nu, r = nu + 0.5 * d;
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                q += ell * ell * eta[k] * eta[k];
            }
            double denom = 1.0 + q / (2.0 * nu);
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                double term = p * (1.0 / ell - (r / nu) * ell * eta[k] * eta[k] / denom);
                g[spec.anisotropic ? k : 0] += term;
            }
            break;
        }
        case KernelFamily::laplacian: {
            for (int k = 0; k < d; ++k) {
                double ell = len(k);
                double le2 = ell * ell * eta[k] * eta[k];
                double term = p * (1.0 / ell) * (1.0 - le2) / (1.0 + le2);
                g[spec.anisotropic ? k : 0] += term;
            }
            break;
        }
        case KernelFamily::cauchy: {
            for (int k = 0; k < d; ++k) {
                double term = -std::abs(eta[k]) * p;
                g[spec.anisotropic ? k : 0] += term;
            }
            break;
        }
        case KernelFamily::reciprocal_semigroup: {
            double lambda = theta0[0];
            double q = 0.0;
            bool outside = false;
            for (int k = 0; k < d; ++k) {
                if (eta[k] < 0.0) outside = true;
                q += eta[k];
            }
            g[0] = outside ? 0.0 : std::exp(-lambda * q) * (1.0 - lambda * q);
            break;
        }
    }
    return g;
}

DecayClassInfo decay_class(const KernelSpec& spec, const HyperDomain& domain) {
    spec.validate();
    domain.validate(spec);
    const int d = spec.dim;
    auto corner_len = [&](int k) { return domain.theta0_lo[spec.anisotropic ? k : 0]; };
    DecayClassInfo info;
    info.L.resize(d);
    double prod_ell = 1.0;
    for (int k = 0; k < d; ++k) prod_ell *= corner_len(k);
    switch (spec.family) {
        case KernelFamily::gaussian:
            info.cls = DecayClass::exp2;
            info.C = prod_ell * std::pow(kTwoPi, -0.5 * d);
            for (int k = 0; k < d; ++k) info.L[k] = corner_len(k) / std::sqrt(2.0);
            break;
        case KernelFamily::matern: {
            if (!(spec.nu > 0.0)) throw validation_error("decay_class: matern nu must be positive");
            double nu = spec.nu;
            info.cls = DecayClass::poly_r;
            info.r = nu + 0.5 * d;
            info.C = std::exp(std::lgamma(info.r) - std::lgamma(nu)) *
                     std::pow(2.0 * kPi * nu, -0.5 * d) * prod_ell;
            for (int k = 0; k < d; ++k) info.L[k] = corner_len(k) / std::sqrt(2.0 * nu);
            break;
        }
        case KernelFamily::laplacian:
            info.cls = DecayClass::poly;
            info.C = std::pow(kPi, -static_cast<double>(d)) * prod_ell;
            for (int k = 0; k < d; ++k) info.L[k] = corner_len(k);
            break;
        case KernelFamily::cauchy:
            info.cls = DecayClass::exp1;
            info.C = 1.0;
            for (int k = 0; k < d; ++k) info.L[k] = corner_len(k);
            break;
        case KernelFamily::reciprocal_semigroup: {
            double lambda0 = domain.theta0_lo[0];
            info.cls = DecayClass::exp1;
            info.C = lambda0;
            for (int k = 0; k < d; ++k) info.L[k] = lambda0;
            break;
        }
    }
    return info;
}

Vector kernel_grad_theta0(const KernelSpec& spec, const HyperParams& theta, const double* x,
                          const double* xp) {
    const int d = spec.dim;
    const int nt = spec.theta0_size();
    Vector g = Vector::Zero(nt);
    switch (spec.family) {
        case KernelFamily::gaussian: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double r = (x[k] - xp[k]) / theta.length(spec, k);
                q += r * r;
            }
            double k0 = std::exp(-0.5 * q);
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                double r = x[k] - xp[k];
                g[spec.anisotropic ? k : 0] += theta.sf2 * k0 * r * r / (ell * ell * ell);
            }
            break;
        }
        case KernelFamily::matern: {
            double nu = spec.nu;
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double r = (x[k] - xp[k]) / theta.length(spec, k);
                q += r * r;
            }
            double u = std::sqrt(2.0 * nu * q);
            if (u <= 1e-14) break;  // flat at coincident points
            double dprofile = matern_profile_du(nu, u);
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                double rk = (x[k] - xp[k]) / ell;
                // du/dell_k = -2 nu rk^2 / (ell u)
                double du = -2.0 * nu * rk * rk / (ell * u);
                g[spec.anisotropic ? k : 0] += theta.sf2 * dprofile * du;
            }
            break;
        }
        case KernelFamily::laplacian: {
            double q = 0.0;
            for (int k = 0; k < d; ++k) q += std::abs(x[k] - xp[k]) / theta.length(spec, k);
            double k0 = std::exp(-q);
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                g[spec.anisotropic ? k : 0] +=
                    theta.sf2 * k0 * std::abs(x[k] - xp[k]) / (ell * ell);
            }
            break;
        }
        case KernelFamily::cauchy: {
            double k0 = 1.0;
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                double r = x[k] - xp[k];
                k0 *= 2.0 * ell / (ell * ell + r * r);
            }
            for (int k = 0; k < d; ++k) {
                double ell = theta.length(spec, k);
                double r = x[k] - xp[k];
                g[spec.anisotropic ? k : 0] +=
                    theta.sf2 * k0 * (1.0 / ell - 2.0 * ell / (ell * ell + r * r));
            }
            break;
        }
        case KernelFamily::reciprocal_semigroup: {
            double lambda = theta.theta0[0];
            double k0 = 1.0;
            for (int k = 0; k < d; ++k) k0 *= lambda / (x[k] + xp[k] + lambda);
            double sum = 0.0;
            for (int k = 0; k < d; ++k) {
                double t = x[k] + xp[k];
                sum += t / (lambda * (t + lambda));
            }
            g[0] = theta.sf2 * k0 * sum;
            break;
        }
    }
    return g;
}

}  // namespace glf
