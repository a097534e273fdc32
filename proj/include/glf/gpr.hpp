#ifndef GLF_GPR_HPP
#define GLF_GPR_HPP

#include <memory>
#include <string>

#include "glf/features.hpp"
#include "glf/kernels.hpp"
#include "glf/linalg.hpp"

namespace glf {

/// Trained low-rank GPR state. w = Z* alpha is all prediction needs; t = W w
/// is kept because both paths produce it directly. alpha itself is
/// materialized only when the feature matrix was retained.
struct GprModel {
    KernelSpec spec;
    std::shared_ptr<const QuadratureGrid> grid;
    HyperParams theta;
    GramPath path = GramPath::normal_eq;
    Vector w;
    Vector t;  // W(theta) w
    Vector alpha;
    bool has_alpha = false;

    void save(const std::string& file) const;
    static GprModel load(const std::string& file);
};

struct LikelihoodReport {
    double value = 0.0;
    Vector grad;             // ordered [theta0 components..., sigma_f^2, sigma_n^2]
    Vector trace_terms;      // Tr(K^{-1} dK/dtheta_i)
    Vector quadratic_terms;  // alpha^T (dK/dtheta_i) alpha
};

// Solve for w via the normal equations or the stacked QR factorization,
// depending on how the feature model was built.
GprModel train(const FeatureModel& fm, const HyperParams& theta, const Vector& y);

// Predicted means sigma_f^2 Z_t W w at the test points.
Vector predict(const GprModel& model, const Matrix& Xt, bool parallel = true);

double log_marginal_likelihood(const FeatureModel& fm, const HyperParams& theta,
                               const Vector& y);

LikelihoodReport likelihood_gradient(const FeatureModel& fm, const HyperParams& theta,
                                     const Vector& y);

/// Dense exact-GPR baseline (the oracle for the low-rank path and the
/// third learning backend). Guarded to n <= 5000.
struct ExactGpr {
    Vector alpha;
    Vector predictions;
    double loglik = 0.0;
    Vector grad;
};

Matrix dense_kernel_matrix(const KernelSpec& spec, const HyperParams& theta, const Matrix& X,
                           bool parallel = true);
Matrix dense_cross_kernel(const KernelSpec& spec, const HyperParams& theta, const Matrix& Xt,
                          const Matrix& X, bool parallel = true);

ExactGpr exact_gpr(const KernelSpec& spec, const HyperParams& theta, const Matrix& X,
                   const Vector& y, const Matrix& Xt);

// value + gradient only (no predictions); used by the exact learning backend
LikelihoodReport exact_likelihood_gradient(const KernelSpec& spec, const HyperParams& theta,
                                           const Matrix& X, const Vector& y);
double exact_log_marginal_likelihood(const KernelSpec& spec, const HyperParams& theta,
                                     const Matrix& X, const Vector& y);

}  // namespace glf

#endif
