#ifndef GLF_EXPERIMENT_HPP
#define GLF_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "glf/bounds.hpp"
#include "glf/dataset.hpp"
#include "glf/hyperopt.hpp"
#include "glf/kernels.hpp"

namespace glf {

/// Flat key-value experiment description. Unknown keys are rejected.
struct ExperimentConfig {
    std::string kernel = "gaussian";
    double nu = 2.5;
    int dim = 1;
    bool anisotropic = false;
    std::string data = "synth1d";  // synth1d | synth2d | <csv path>
    std::int64_t n = 800;
    std::int64_t test_n = 200;
    std::uint64_t seed = 0;
    double split_fraction = 0.2;
    bool log_y = false;
    bool center_y = false;
    std::vector<double> theta0_lo{0.1}, theta0_hi{2.0};
    double sf2_lo = 0.05, sf2_hi = 2.0;
    double sn2_lo = 0.05, sn2_hi = 2.0;
    std::vector<std::string> backends{"glf", "exact"};
    std::vector<std::string> s_sweep{"8", "16", "32", "64", "planned"};
    std::int64_t s_cap = 200000;
    std::uint64_t rff_seed = 1234;
    int max_iters = 200;
    double tol = 1e-6;
    std::vector<double> bounding_box;  // empty: derive from the training data
    std::string out_dir = "out";

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_string(const std::string& text);
    void validate() const;

    KernelSpec spec_for(const Dataset& ds) const;
    HyperDomain domain() const;
};

struct SweepCell {
    std::string backend;
    int s_per_dim = 0;          // 0 for the exact backend
    std::int64_t s_total = 0;
    double mse = 0.0;
    HyperParams theta;
    int iterations = 0;
    std::string termination;
    double learn_seconds = 0.0;
    double build_seconds = 0.0;
};

Dataset load_experiment_data(const ExperimentConfig& cfg);

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const Dataset& ds,
                                 const KernelSpec& spec, const BoundPlan& plan);

// Full harness: load data, plan bounds, sweep, and write
// out_dir/{report.csv, timings.csv, bounds.txt}. report.csv holds only
// deterministic columns; wall-clock times go to timings.csv.
void run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const std::vector<SweepCell>& cells, std::ostream& os);
void write_timings_csv(const std::vector<SweepCell>& cells, std::ostream& os);

}  // namespace glf

#endif
