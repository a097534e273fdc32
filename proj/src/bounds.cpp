#include "glf/bounds.hpp"

#include <cmath>
#include <sstream>

#include "glf/errors.hpp"
#include "glf/numeric.hpp"

namespace glf {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

double norm2(const std::vector<double>& v) {
    double q = 0.0;
    for (double x : v) q += x * x;
    return std::sqrt(q);
}

double norm2(const std::vector<double>& v, double scale_each) {
    double q = 0.0;
    for (double x : v) q += (x * scale_each) * (x * scale_each);
    return std::sqrt(q);
}

}  // namespace

double poly_r_tail(double m2, int d, double r) {
    // t = tan^2(theta) turns the integrand into 2 sin^{d-1} cos^{2r-d-1},
    // smooth on [atan(m), pi/2] whenever 2r - d >= 1.
    double lo = std::atan(std::sqrt(std::max(m2, 0.0)));
    auto f = [d, r](double th) {
        double s = std::sin(th), c = std::cos(th);
        return 2.0 * std::pow(s, d - 1) * std::pow(c, 2.0 * r - d - 1.0);
    };
    QuadratureControl ctl;
    ctl.rel_tol = 1e-13;
    return integrate(f, lo, 0.5 * kPi, ctl);
}

std::vector<double> compute_umin(const KernelSpec& spec, const HyperDomain& domain,
                                 std::int64_t n) {
    if (n < 1) throw validation_error("compute_umin: n must be >= 1");
    DecayClassInfo info = decay_class(spec, domain);
    const int d = spec.dim;
    const double M_R = 1.0;  // |phi| <= 1 for both feature kinds
    const double sf2 = domain.sf2_hi;
    const double sn2 = domain.sn2_lo;
    if (!(sn2 > 0.0))
        throw validation_error("compute_umin: a positive ridge floor sigma_n0^2 is required");
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    const bool one_sided = (spec.feature_kind() == FeatureKind::exponential_decay);
    // two-sided tails pick up a factor 2 relative to the positive-orthant case
    const double tail_factor = one_sided ? 2.0 : 4.0;

    std::vector<double> U(d);
    switch (info.cls) {
        case DecayClass::poly: {
            double A = tail_factor * info.C * M_R * M_R * sf2 * n2 / sn2;
            for (int k = 0; k < d; ++k) {
                double z = info.L[k] * std::pow(A, -1.0 / d);
                if (!(z > 0.0 && z < 0.5 * kPi))
                    throw bound_failure("compute_umin: cot argument out of range (n too small)");
                U[k] = std::tan(0.5 * kPi - z) / info.L[k];
            }
            break;
        }
        case DecayClass::exp1: {
            double A = tail_factor * info.C * M_R * M_R * sf2 * n2 / sn2;
            for (int k = 0; k < d; ++k) {
                double arg = std::pow(A, 1.0 / d) / info.L[k];
                if (!(arg > 1.0))
                    throw bound_failure("compute_umin: log formula nonpositive (n too small)");
                U[k] = std::log(arg) / info.L[k];
            }
            break;
        }
        case DecayClass::exp2: {
            double A = std::pow(2.0, 2 - d) * info.C * M_R * M_R * sf2 * n2 / sn2;
            for (int k = 0; k < d; ++k) {
                double arg = std::sqrt(kPi) / info.L[k] * std::pow(A, 1.0 / d);
                if (!(arg > 1.0))
                    throw bound_failure("compute_umin: sqrt-log formula nonpositive (n too small)");
                U[k] = std::sqrt(std::log(arg)) / info.L[k];
            }
            break;
        }
        case DecayClass::poly_r: {
            double r = info.r;
            if (!(r > 0.5 * d)) throw validation_error("compute_umin: poly_r needs r > d/2");
            double prodL = 1.0;
            for (double L : info.L) prodL *= L;
            if (d == 2) {
                double inner = kPi * info.C * M_R * M_R * sf2 * n2 /
                               ((r - 1.0) * sn2 * info.L[0] * info.L[1]);
                double x2 = std::pow(inner, 1.0 / (r - 1.0)) - 1.0;
                if (!(x2 > 0.0))
                    throw bound_failure("compute_umin: d=2 radical nonpositive (n too small)");
                for (int k = 0; k < d; ++k) U[k] = std::sqrt(x2) / info.L[k];
                break;
            }
            // G(x) = K_pref * tail(x^2) decreases in x; solve G(x) = target.
            double target = 1.0 / (2.0 * sf2 * static_cast<double>(n));
            double K_pref = std::pow(kPi, 0.5 * d) * info.C * static_cast<double>(n) * M_R *
                            M_R /
                            (std::pow(2.0, d - 1) * std::tgamma(0.5 * d) * sn2 * prodL);
            auto G = [&](double x) { return K_pref * poly_r_tail(x * x, d, r); };
            double hi = std::pow(std::pow(kPi, 0.5 * d) * info.C * M_R * M_R * sf2 * n2 /
                                     (std::pow(2.0, d - 2) * (2.0 * r - d) *
                                      std::tgamma(0.5 * d) * sn2 * prodL),
                                 1.0 / (2.0 * r - d));
            int expand = 0;
            while (G(hi) > target) {
                hi *= 2.0;
                if (++expand > 60)
                    throw bound_failure("compute_umin: no positive root within bracket");
            }
            double lo = hi;
            while (lo > 1e-12 && G(lo) <= target) lo *= 0.5;
            if (lo <= 1e-12) {
                for (int k = 0; k < d; ++k) U[k] = lo / info.L[k];
                break;  // any truncation satisfies the budget already
            }
            for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
                double mid = 0.5 * (lo + hi);
                (G(mid) > target ? lo : hi) = mid;
            }
            double x = 0.5 * (lo + hi);
            for (int k = 0; k < d; ++k) U[k] = x / info.L[k];
            break;
        }
    }
    return U;
}

PolyellipseParams polyellipse_params(const KernelSpec& spec, const HyperDomain& domain,
                                     const std::vector<double>& U) {
    spec.validate();
    domain.validate(spec);
    const int d = spec.dim;
    if (static_cast<int>(U.size()) != d)
        throw validation_error("polyellipse_params: U size mismatch");
    for (double u : U)
        if (!(u > 0.0)) throw validation_error("polyellipse_params: U must be positive");

    auto corner_len = [&](int k) { return domain.theta0_lo[spec.anisotropic ? k : 0]; };
    const std::vector<double>& R = spec.bounding_box;

    PolyellipseParams pe;
    pe.beta.resize(d);
    pe.rho.resize(d);
    pe.M_R = 1.0;

    switch (spec.family) {
        case KernelFamily::gaussian: {
            double q = 0.0, prod_ell = 1.0;
            for (int k = 0; k < d; ++k) {
                pe.beta[k] = 2.0 * U[k];
                pe.rho[k] = 1.0 + std::sqrt(2.0);
                double ell = corner_len(k);
                prod_ell *= ell;
                q += ell * ell * U[k] * U[k];
            }
            pe.log_C_Ubeta = std::log(prod_ell) - 0.5 * d * std::log(2.0 * kPi) + 0.5 * q;
            pe.log_M_Ubeta = 0.5 * norm2(U) * norm2(R);
            break;
        }
        case KernelFamily::matern: {
            double nu = spec.nu;
            double r = nu + 0.5 * d;
            double prod_ell = 1.0;
            for (int k = 0; k < d; ++k) {
                double ell = corner_len(k);
                prod_ell *= ell;
                pe.beta[k] = std::sqrt(2.0 * nu) / (ell * std::sqrt(static_cast<double>(d)));
                double t = pe.beta[k] / (2.0 * U[k]);
                pe.rho[k] = t + std::sqrt(t * t + 1.0);
            }
            pe.log_C_Ubeta = std::lgamma(r) - std::lgamma(nu) -
                             0.5 * d * std::log(2.0 * nu * kPi) + std::log(prod_ell) -
                             r * std::log(0.75);
            pe.log_M_Ubeta = 0.25 * norm2(pe.beta) * norm2(R);
            break;
        }
        case KernelFamily::reciprocal_semigroup: {
            double lambda0 = domain.theta0_lo[0];
            double u1 = 0.0, ur = 0.0;
            for (int k = 0; k < d; ++k) {
                pe.beta[k] = 2.0 * U[k];
                pe.rho[k] = 1.0 + std::sqrt(2.0);
                u1 += U[k];
                ur += U[k] * R[k];
            }
            double c = 0.5 * (std::sqrt(2.0) - 1.0);
            pe.log_C_Ubeta = std::log(lambda0) + lambda0 * c * u1;
            pe.log_M_Ubeta = c * ur;
            break;
        }
        case KernelFamily::laplacian:
        case KernelFamily::cauchy:
            throw unsupported_analyticity(
                "polyellipse_params: no worked polyellipse constants for the " +
                family_name(spec.family) +
                " density (real-axis-adjacent singularities); only U^(min) is available");
    }
    pe.M_Ubeta = std::exp(pe.log_M_Ubeta);
    pe.C_Ubeta = std::exp(pe.log_C_Ubeta);
    return pe;
}

std::vector<int> compute_s(const KernelSpec& spec, const HyperDomain& domain, std::int64_t n,
                           const std::vector<double>& U, const PolyellipseParams& pe) {
    const int d = spec.dim;
    if (static_cast<int>(U.size()) != d || static_cast<int>(pe.rho.size()) != d)
        throw validation_error("compute_s: dimension mismatch");
    const double sf2 = domain.sf2_hi;
    const double sn2 = domain.sn2_lo;
    double log_common = (2.0 * d + 2.0) * std::log(2.0) + 2.0 * pe.log_M_Ubeta +
                        pe.log_C_Ubeta + std::log(sf2 / sn2) +
                        2.0 * std::log(static_cast<double>(n));
    std::vector<int> s(d);
    for (int k = 0; k < d; ++k) {
        double rho = pe.rho[k];
        if (!(rho > 1.0)) throw bound_failure("compute_s: rho must exceed 1");
        double bound = (log_common / d + std::log(U[k]) - std::log(rho - 1.0)) /
                           (2.0 * std::log(rho)) +
                       1.0;
        s[k] = std::max(1, static_cast<int>(std::ceil(bound)));
    }
    return s;
}

BoundPlan plan(const KernelSpec& spec, const HyperDomain& domain, std::int64_t n,
               std::int64_t s_cap) {
    BoundPlan bp;
    bp.n = n;
    bp.s_cap = s_cap;
    bp.decay = decay_class(spec, domain);
    bp.U = compute_umin(spec, domain, n);
    bp.pe = polyellipse_params(spec, domain, bp.U);
    bp.s = compute_s(spec, domain, n, bp.U, bp.pe);
    bp.s_total = 1;
    for (int sk : bp.s) bp.s_total *= sk;
    bp.s_exceeds_n = bp.s_total >= n;
    bp.exceeds_cap = bp.s_total > s_cap;
    return bp;
}

std::string BoundPlan::report(const KernelSpec& spec) const {
    std::ostringstream os;
    os.precision(6);
    os << "bound plan: kernel=" << family_name(spec.family) << " d=" << spec.dim
       << " n=" << n << "\n";
    const char* cls = "?";
    switch (decay.cls) {
        case DecayClass::poly: cls = "poly"; break;
        case DecayClass::poly_r: cls = "poly_r"; break;
        case DecayClass::exp1: cls = "exp1"; break;
        case DecayClass::exp2: cls = "exp2"; break;
    }
    os << "decay_class = " << cls << "  C = " << decay.C;
    if (decay.cls == DecayClass::poly_r) os << "  r = " << decay.r;
    os << "\n";
    os << "M_R = " << pe.M_R << "  log M_Ubeta = " << pe.log_M_Ubeta
       << "  log C_Ubeta = " << pe.log_C_Ubeta << "\n";
    for (std::size_t k = 0; k < U.size(); ++k) {
        os << "dim " << k << ": U = " << U[k] << "  beta = " << pe.beta[k]
           << "  rho = " << pe.rho[k] << "  s = " << s[k] << "\n";
    }
    os << "s_total = " << s_total;
    if (s_exceeds_n) os << "  [note: s_total >= n; features exceed training size]";
    if (exceeds_cap)
        os << "  [note: exceeds cap " << s_cap
           << "; theoretical s reported, pass an explicit s override to proceed]";
    os << "\n";
    return os.str();
}

}  // namespace glf
