#include "glf/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "glf/errors.hpp"
#include "glf/features.hpp"
#include "glf/numeric.hpp"
#include "glf/rng.hpp"

namespace glf {

namespace {

void require_symmetric(const Matrix& A, const char* name) {
    if (A.rows() != A.cols()) throw validation_error(std::string(name) + " must be square");
    if (A.rows() > 5000) throw validation_error(std::string(name) + " exceeds the n <= 5000 cap");
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw validation_error(std::string(name) + " must be symmetric");
}

Eigen::LLT<Matrix> spd_factor(const Matrix& A, const char* name) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw validation_error(std::string(name) + " must be positive definite");
    return llt;
}

}  // namespace

EquivalenceReport spectral_equivalence_check(const Matrix& K, const Matrix& Ktilde) {
    require_symmetric(K, "K");
    require_symmetric(Ktilde, "Ktilde");
    if (K.rows() != Ktilde.rows())
        throw validation_error("spectral_equivalence_check: size mismatch");
    const std::int64_t n = K.rows();
    auto llt = spd_factor(K, "K");
    Matrix L = llt.matrixL();
    // M = L^{-1} Ktilde L^{-T}, symmetric with the pencil's eigenvalues
    Matrix M = L.triangularView<Eigen::Lower>().solve(Ktilde);
    M = L.triangularView<Eigen::Lower>().solve(M.transpose().eval());
    M = 0.5 * (M + M.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    EquivalenceReport rep;
    rep.n = n;
    rep.lambda_min = eig.eigenvalues().minCoeff();
    rep.lambda_max = eig.eigenvalues().maxCoeff();
    rep.band_lo = 1.0 - 1.0 / static_cast<double>(n);
    rep.band_hi = 1.0 + 1.0 / static_cast<double>(n);
    rep.pass = rep.lambda_min >= rep.band_lo && rep.lambda_max <= rep.band_hi;
    rep.kl = kl_divergence(K, Ktilde);
    rep.kl_bound = 1.0 + 2.0 / static_cast<double>(n);
    return rep;
}

double kl_divergence(const Matrix& S0, const Matrix& S1) {
    require_symmetric(S0, "Sigma0");
    require_symmetric(S1, "Sigma1");
    if (S0.rows() != S1.rows()) throw validation_error("kl_divergence: size mismatch");
    const std::int64_t n = S0.rows();
    auto llt0 = spd_factor(S0, "Sigma0");
    auto llt1 = spd_factor(S1, "Sigma1");
    // Tr(S1^{-1} S0) = ||L1^{-1} L0||_F^2
    Matrix L0 = llt0.matrixL();
    Matrix L1 = llt1.matrixL();
    Matrix W = L1.triangularView<Eigen::Lower>().solve(L0);
    double trace = W.squaredNorm();
    double logdet0 = 2.0 * llt0.matrixLLT().diagonal().array().log().sum();
    double logdet1 = 2.0 * llt1.matrixLLT().diagonal().array().log().sum();
    return 0.5 * trace + 0.5 * (logdet1 - logdet0) - 0.5 * static_cast<double>(n);
}

double kl_divergence(const Matrix& S0, const Matrix& S1, const Vector& mu0, const Vector& mu1) {
    double base = kl_divergence(S0, S1);
    Vector d = mu1 - mu0;
    if (d.size() != S0.rows()) throw validation_error("kl_divergence: mean size mismatch");
    Eigen::LLT<Matrix> llt1(S1);
    return base + 0.5 * d.dot(llt1.solve(d));
}

double truncation_probe(const KernelSpec& spec, const HyperParams& corner, double U,
                        std::int64_t n) {
    if (spec.dim != 1) throw validation_error("truncation_probe: d=1 only");
    corner.validate(spec);
    if (!(corner.sn2 > 0.0)) throw validation_error("truncation_probe: needs a ridge");
    QuadratureControl ctl;
    ctl.rel_tol = 1e-11;
    auto density = [&](double eta) {
        double e = eta;
        return spectral_density(spec, corner.theta0, &e);
    };
    double tail = integrate_to_inf(density, U, ctl);
    if (spec.feature_kind() == FeatureKind::fourier) tail *= 2.0;  // both tails
    const double M_R = 1.0;
    return static_cast<double>(n) / corner.sn2 * M_R * M_R * tail;
}

std::vector<QuadratureProbeRow> quadrature_probe(const KernelSpec& spec,
                                                 const HyperParams& theta, double U,
                                                 const std::vector<int>& s_sweep, int n_pairs,
                                                 std::uint64_t seed) {
    theta.validate(spec);
    const int d = spec.dim;
    const bool positive = spec.feature_kind() == FeatureKind::exponential_decay;
    Rng rng(seed);
    Matrix A(n_pairs, d), B(n_pairs, d);
    for (int i = 0; i < n_pairs; ++i) {
        for (int k = 0; k < d; ++k) {
            double r = spec.bounding_box[k];
            A(i, k) = positive ? rng.uniform(0.0, r) : rng.uniform(-0.5 * r, 0.5 * r);
            B(i, k) = positive ? rng.uniform(0.0, r) : rng.uniform(-0.5 * r, 0.5 * r);
        }
    }
    std::vector<QuadratureProbeRow> rows;
    for (int s : s_sweep) {
        QuadratureGrid grid = tensor_grid(std::vector<double>(d, U), std::vector<int>(d, s),
                                          positive ? DomainKind::positive_box
                                                   : DomainKind::symmetric_box);
        double sup = 0.0;
        for (int i = 0; i < n_pairs; ++i) {
            Vector a = A.row(i), b = B.row(i);
            double kt = approx_kernel_eval(spec, grid, theta, a, b);
            double kx = eval_kernel(spec, theta, a, b);
            sup = std::max(sup, std::abs(kt - kx));
        }
        rows.push_back({s, sup});
    }
    return rows;
}

std::string EquivalenceReport::summary() const {
    std::ostringstream os;
    os.precision(10);
    os << "n = " << n << "\npencil eigenvalue band = [" << lambda_min << ", " << lambda_max
       << "]\nrequired band          = [" << band_lo << ", " << band_hi << "]\n"
       << "spectral equivalence: " << (pass ? "PASS" : "FAIL") << "\n"
       << "KL divergence = " << kl << "  (bound 1 + 2/n = " << kl_bound << ")\n";
    return os.str();
}

}  // namespace glf
