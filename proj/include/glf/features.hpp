#ifndef GLF_FEATURES_HPP
#define GLF_FEATURES_HPP

#include <complex>
#include <cstdint>
#include <memory>
#include <string>

#include "glf/kernels.hpp"
#include "glf/linalg.hpp"
#include "glf/quadrature.hpp"

namespace glf {

enum class GramPath { normal_eq, qr };

struct FeatureBuildOptions {
    GramPath path = GramPath::normal_eq;
    bool keep_z = false;    // retain the full feature matrix for diagnostics
    bool parallel = true;   // block-parallel accumulation (normal_eq path)
    int block_rows = 256;
};

/// Diagonal weights h_j(theta0) = w_{a_j} p(eta_j; theta0) and their theta0
/// gradient. Everything theta-dependent lives here; the feature matrix
/// itself never changes with the hyperparameters.
struct WeightDiagonal {
    Vector h;   // one entry per grid node
    Matrix dh;  // theta0_size x nodes
};

WeightDiagonal weight_diag(const QuadratureGrid& grid, const KernelSpec& spec,
                           const HyperParams& theta);

/// theta-independent feature data built in one streaming pass over the rows:
/// the Gram matrix Z^T Z (or its stacked-QR factor R_Z with Q_Z^T y) plus the
/// projections Z^T y. Complex Fourier features are stored as (cos, sin)
/// column pairs, which reproduces Z*Z and Z*y of the complex encoding
/// exactly; per node j the pair shares the weight h_j.
struct FeatureModel {
    KernelSpec spec;
    std::shared_ptr<const QuadratureGrid> grid;
    GramPath path = GramPath::normal_eq;
    std::int64_t n = 0;
    int cols = 0;

    Matrix gram;       // cols x cols (normal_eq)
    Matrix r_z;        // cols x cols upper triangular (qr)
    Vector qty;        // Q_Z^T y (qr)
    Vector zy;         // Z^T y
    double yty = 0.0;
    Vector y;          // targets the projections were built against

    bool has_z = false;
    Matrix Z;          // n x cols, only when keep_z

    int cols_per_node() const {
        return spec.feature_kind() == FeatureKind::fourier ? 2 : 1;
    }
    // duplicate per-node values onto their feature columns
    Vector expand_to_columns(const Vector& per_node) const;
    Vector col_sq_norms() const;

    void save(const std::string& path) const;
    static FeatureModel load(const std::string& path);

    // number of gram/QR builds since process start (cost instrumentation)
    static long build_count();
};

// Fill one feature row (cols values) for the point x.
void fill_feature_row(const KernelSpec& spec, const QuadratureGrid& grid, const double* x,
                      double* row);

// Dense feature matrix for a set of points (prediction, diagnostics).
Matrix feature_matrix(const KernelSpec& spec, const QuadratureGrid& grid, const Matrix& X,
                      bool parallel = true);

FeatureModel build_feature_matrix(const Matrix& X, const Vector& y,
                                  std::shared_ptr<const QuadratureGrid> grid,
                                  const KernelSpec& spec,
                                  const FeatureBuildOptions& opts = {});

// Serial reference of the streaming accumulation; the parallel build must
// agree with it (same block partition, ordered merge).
FeatureModel build_feature_matrix_serial(const Matrix& X, const Vector& y,
                                         std::shared_ptr<const QuadratureGrid> grid,
                                         const KernelSpec& spec,
                                         const FeatureBuildOptions& opts = {});

// Approximate kernel sigma_f^2 sum_j h_j phi(x,eta_j) phi(x',eta_j)* +
// sigma_n^2 gamma(x,x'), evaluated nodewise (real by symmetry of the grid
// and evenness of the density).
double approx_kernel_eval(const KernelSpec& spec, const QuadratureGrid& grid,
                          const HyperParams& theta, const double* x, const double* xp);
double approx_kernel_eval(const KernelSpec& spec, const QuadratureGrid& grid,
                          const HyperParams& theta, const Vector& x, const Vector& xp);

/// Monte-Carlo (random Fourier) baseline with frozen base frequencies
/// drawn once from p(.; I_d); lengthscale changes rescale the frequencies
/// smoothly and never resample.
struct RffModel {
    KernelSpec spec;
    std::uint64_t seed = 0;
    int s = 0;
    Matrix omega;  // d x s
};

RffModel rff_build(const KernelSpec& spec, int s, std::uint64_t seed);

// Z(L) = (1/sqrt(s)) exp(-i X L^{-1} Omega), n x s complex.
Eigen::MatrixXcd rff_feature_matrix(const RffModel& model, const Matrix& X, const Vector& L);

// dZ(L)/dL_k = i L_k^{-2} (x_{.k} omega_{k.}) .* Z(L).
Eigen::MatrixXcd rff_grad(const RffModel& model, const Matrix& X, const Vector& L, int k);

double rff_eval(const RffModel& model, const HyperParams& theta, const Vector& x,
                const Vector& xp);

// per-dimension lengthscale vector L from theta0 (replicated when isotropic)
Vector rff_lengthscales(const KernelSpec& spec, const Vector& theta0);

}  // namespace glf

#endif
