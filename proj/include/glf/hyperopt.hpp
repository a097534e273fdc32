#ifndef GLF_HYPEROPT_HPP
#define GLF_HYPEROPT_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "glf/features.hpp"
#include "glf/gpr.hpp"
#include "glf/kernels.hpp"

namespace glf {

enum class Backend { glf, rff, exact };
Backend parse_backend(const std::string& name);
std::string backend_name(Backend b);

struct OptOptions {
    int max_iters = 500;
    double tol = 1e-6;  // stop when ||projected grad|| <= tol * (1 + |value|)
    int max_line_search = 40;
    double armijo_c = 1e-4;
};

struct OptIterate {
    Vector theta;
    double value = 0.0;
    double pg_norm = 0.0;
};

struct OptTrace {
    std::vector<OptIterate> iterates;  // accepted points, value nondecreasing
    std::string termination;
    double seconds = 0.0;
    int grad_evals = 0;
    int value_evals = 0;
};

// Objective over plain (positive) coordinates; grad may be null for
// value-only evaluations.
using BoxObjective = std::function<double(const Vector& theta, Vector* grad)>;

// Projected gradient ascent in log coordinates with Armijo backtracking and
// a safeguarded Barzilai-Borwein step. Deterministic for identical inputs.
std::pair<Vector, OptTrace> maximize_log_box(const BoxObjective& f, const Vector& lo,
                                             const Vector& hi, const Vector& start,
                                             const OptOptions& opts = {});

// flat layout [theta0..., sigma_f^2, sigma_n^2]
Vector pack_theta(const HyperParams& theta);
HyperParams unpack_theta(const KernelSpec& spec, const Vector& flat);

struct LearnResult {
    HyperParams theta;
    OptTrace trace;
    long gram_builds_during_learn = 0;  // glf: must stay 0
    long feature_rebuilds = 0;          // rff: one per objective evaluation
};

// Maximize the log marginal likelihood from the domain corner.
LearnResult learn_glf(const FeatureModel& fm, const HyperDomain& domain, const Vector& y,
                      const OptOptions& opts = {});
LearnResult learn_rff(const RffModel& model, const Matrix& X, const Vector& y,
                      const HyperDomain& domain, const OptOptions& opts = {});
LearnResult learn_exact(const KernelSpec& spec, const Matrix& X, const Vector& y,
                        const HyperDomain& domain, const OptOptions& opts = {});

// Likelihood objectives as reusable closures (profiles, experiments).
BoxObjective glf_objective(const FeatureModel& fm, const Vector& y);
BoxObjective rff_objective(const RffModel& model, const Matrix& X, const Vector& y,
                           long* rebuild_counter = nullptr);
BoxObjective exact_objective(const KernelSpec& spec, const Matrix& X, const Vector& y);

// Sweep one flat coordinate over grid_values holding the others at `at`.
Vector profile_likelihood(const BoxObjective& f, const KernelSpec& spec, const HyperParams& at,
                          int coordinate, const Vector& grid_values);

void trace_to_csv(const OptTrace& trace, std::ostream& os);

}  // namespace glf

#endif
